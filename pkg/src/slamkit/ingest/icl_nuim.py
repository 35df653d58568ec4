"""ICL-NUIM conversion: TUM-compatible exports plus an optional scene cloud.

The scene point cloud (ASCII PLY or plain "x y z" text) becomes a single
GT_POINT_CLOUD frame at timestamp zero when present; without one the sensor
is not emitted at all.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from slamkit.datafile import (
    FrameRecord,
    GroundTruthDescriptor,
    SensorType,
    encode_point_cloud,
    open_datafile,
    write_datafile,
)
from slamkit.geometry import Timestamp
from slamkit.ingest.common import ConversionSummary, MalformedPointCloud
from slamkit.ingest.tum import TUM_DEPTH_SCALE, convert_tum


def _parse_ascii_ply(path: Path) -> np.ndarray:
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise MalformedPointCloud(f"{path}: missing 'ply' magic")
    vertex_count = None
    body_start = None
    ascii_format = False
    for i, line in enumerate(lines[1:], start=1):
        tokens = line.split()
        if tokens[:2] == ["format", "ascii"]:
            ascii_format = True
        elif tokens[:2] == ["element", "vertex"]:
            vertex_count = int(tokens[2])
        elif tokens[:1] == ["end_header"]:
            body_start = i + 1
            break
    if not ascii_format:
        raise MalformedPointCloud(f"{path}: only ASCII PLY is supported")
    if vertex_count is None or body_start is None:
        raise MalformedPointCloud(f"{path}: incomplete PLY header")
    rows = lines[body_start : body_start + vertex_count]
    if len(rows) != vertex_count:
        raise MalformedPointCloud(f"{path}: expected {vertex_count} vertices, found {len(rows)}")
    try:
        return np.array([[float(t) for t in row.split()[:3]] for row in rows])
    except (ValueError, IndexError) as exc:
        raise MalformedPointCloud(f"{path}: bad vertex row: {exc}") from exc


def _parse_xyz(path: Path) -> np.ndarray:
    points = []
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) < 3:
            raise MalformedPointCloud(f"{path}:{n}: expected 3 coordinates")
        try:
            points.append([float(t) for t in tokens[:3]])
        except ValueError as exc:
            raise MalformedPointCloud(f"{path}:{n}: {exc}") from exc
    if not points:
        raise MalformedPointCloud(f"{path}: no points")
    return np.array(points)


def load_scene_cloud(path: str | Path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".ply":
        return _parse_ascii_ply(path)
    return _parse_xyz(path)


def find_scene_cloud(root: Path) -> Path | None:
    for pattern in ("*.ply", "*.xyz"):
        matches = sorted(root.glob(pattern))
        if matches:
            return matches[0]
    return None


def convert_icl_nuim(
    root: str | Path,
    out_path: str | Path,
    depth_scale: float = TUM_DEPTH_SCALE,
    cloud_path: str | Path | None = None,
) -> ConversionSummary:
    root = Path(root)
    summary = convert_tum(root, out_path, depth_scale=depth_scale)
    cloud_file = Path(cloud_path) if cloud_path is not None else find_scene_cloud(root)
    if cloud_file is None:
        return summary

    cloud = load_scene_cloud(cloud_file)
    reader = open_datafile(out_path)
    sensors = list(reader.sensors)
    gt_frames = list(reader.gt_frames())
    in_frames = list(reader.input_frames())

    cloud_index = len(sensors)
    sensors.append(GroundTruthDescriptor(SensorType.GT_POINT_CLOUD))
    cloud_frame = FrameRecord(Timestamp(0, 0), cloud_index, encode_point_cloud(cloud))
    write_datafile(out_path, sensors, [cloud_frame] + gt_frames, in_frames)
    summary.frames_per_sensor["gt_point_cloud"] = 1
    return summary
