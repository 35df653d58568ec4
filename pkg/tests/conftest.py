"""Fixture dataset builders shared across the suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from slamkit.ingest.rasters import write_pgm8, write_pgm16, write_ppm


def build_tum_fixture(
    root: Path,
    timestamps: list[str],
    gt_rows: list[str] | None = None,
    size: tuple[int, int] = (4, 3),
    seed: int = 7,
    camera_line: str | None = None,
    accel_rows: list[str] | None = None,
) -> dict[str, list[np.ndarray]]:
    """TUM-layout directory with PPM/PGM rasters; returns the written pixel data."""
    rng = np.random.default_rng(seed)
    w, h = size
    (root / "rgb").mkdir(parents=True)
    (root / "depth").mkdir()
    rgb_lines, depth_lines = [], []
    written = {"rgb": [], "depth": []}
    for i, ts in enumerate(timestamps):
        rgb = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        depth = rng.integers(0, 30000, size=(h, w), dtype=np.uint16)
        write_ppm(root / "rgb" / f"{ts}.ppm", rgb)
        write_pgm16(root / "depth" / f"{ts}.pgm", depth)
        rgb_lines.append(f"{ts} rgb/{ts}.ppm")
        depth_lines.append(f"{ts} depth/{ts}.pgm")
        written["rgb"].append(rgb)
        written["depth"].append(depth)
    (root / "rgb.txt").write_text("# color images\n" + "\n".join(rgb_lines) + "\n")
    (root / "depth.txt").write_text("# depth images\n" + "\n".join(depth_lines) + "\n")
    gt_text = "# ground truth\n"
    if gt_rows:
        gt_text += "\n".join(gt_rows) + "\n"
    (root / "groundtruth.txt").write_text(gt_text)
    if camera_line is not None:
        (root / "camera.txt").write_text(camera_line + "\n")
    if accel_rows is not None:
        (root / "accelerometer.txt").write_text("\n".join(accel_rows) + "\n")
    return written


def build_euroc_fixture(
    root: Path,
    cam_stamps_ns: list[int],
    imu_rows: list[str] | None = None,
    gt_rows: list[str] | None = None,
    stereo: bool = False,
    size: tuple[int, int] = (6, 4),
    seed: int = 11,
) -> dict[str, list[np.ndarray]]:
    rng = np.random.default_rng(seed)
    w, h = size
    written = {"cam0": [], "cam1": []}
    cams = ["cam0", "cam1"] if stereo else ["cam0"]
    for cam in cams:
        data_dir = root / cam / "data"
        data_dir.mkdir(parents=True)
        lines = ["#timestamp [ns],filename"]
        for ts in cam_stamps_ns:
            img = rng.integers(0, 256, size=(h, w), dtype=np.uint8)
            write_pgm8(data_dir / f"{ts}.pgm", img)
            lines.append(f"{ts},{ts}.pgm")
            written[cam].append(img)
        (root / cam / "data.csv").write_text("\n".join(lines) + "\n")
    if imu_rows is not None:
        (root / "imu0").mkdir()
        header = "#timestamp [ns],w_RS_S_x,w_RS_S_y,w_RS_S_z,a_RS_S_x,a_RS_S_y,a_RS_S_z"
        (root / "imu0" / "data.csv").write_text(header + "\n" + "\n".join(imu_rows) + "\n")
    if gt_rows is not None:
        gt_dir = root / "state_groundtruth_estimate0"
        gt_dir.mkdir()
        header = "#timestamp,p_x,p_y,p_z,q_w,q_x,q_y,q_z"
        (gt_dir / "data.csv").write_text(header + "\n" + "\n".join(gt_rows) + "\n")
    return written


@pytest.fixture
def tum_dir(tmp_path):
    root = tmp_path / "tum"
    stamps = ["100.000000", "100.033333", "100.066666"]
    gt = [f"{ts} 0 0 0 0 0 0 1" for ts in stamps]
    build_tum_fixture(root, stamps, gt)
    return root
