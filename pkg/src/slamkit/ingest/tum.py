"""TUM RGB-D directory layout -> datafile conversion.

Expects rgb.txt, depth.txt and groundtruth.txt in the dataset root
("timestamp value..." rows, '#' comments), with rasters relative to the
root. Camera intrinsics are not part of the list files; an optional
camera.txt (fx fy cx cy [k1 k2 p1 p2 k3]) overrides the conventional
525/525/319.5/239.5 defaults. Accelerometer-only IMU data is emitted with
zero gyro components and flagged in the summary.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from slamkit.datafile import (
    CameraDescriptor,
    GroundTruthDescriptor,
    ImuDescriptor,
    PixelFormat,
    SensorType,
    encode_imu_sample,
    write_datafile,
)
from slamkit.geometry import Timestamp
from slamkit.ingest.common import (
    ConversionSummary,
    MissingRaster,
    UnparseableLine,
    gt_pose_frame,
    parse_whitespace_table,
    pose_from_tum_row,
    sort_frames,
)
from slamkit.ingest.rasters import read_raster

TUM_DEPTH_SCALE = 1.0 / 5000.0  # meters per raw unit, dataset convention


@dataclass
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    distortion: tuple[float, float, float, float, float] = (0.0, 0.0, 0.0, 0.0, 0.0)


def _default_intrinsics(width: int, height: int) -> Intrinsics:
    # conventional 525/525/319.5/239.5, scaled to the actual raster size
    return Intrinsics(525.0 * width / 640.0, 525.0 * height / 480.0,
                      (width - 1) / 2.0, (height - 1) / 2.0)


def read_camera_file(root: Path) -> Intrinsics | None:
    path = root / "camera.txt"
    if not path.exists():
        return None
    rows = parse_whitespace_table(path, 4)
    if len(rows) != 1:
        raise UnparseableLine(path, rows[-1][0] if rows else 1, "expected a single row")
    n, tokens = rows[0]
    try:
        values = [float(t) for t in tokens]
    except ValueError as exc:
        raise UnparseableLine(path, n, str(exc)) from exc
    dist = tuple(values[4:9]) + (0.0,) * (5 - len(values[4:9]))
    return Intrinsics(values[0], values[1], values[2], values[3], dist)


def _timestamped_rows(path: Path, min_columns: int) -> list[tuple[Timestamp, list[str]]]:
    out = []
    for n, tokens in parse_whitespace_table(path, min_columns):
        try:
            ts = Timestamp.from_decimal_string(tokens[0])
        except ValueError as exc:
            raise UnparseableLine(path, n, f"bad timestamp {tokens[0]!r}") from exc
        try:
            out.append((ts, tokens[1:]))
        except ValueError as exc:
            raise UnparseableLine(path, n, str(exc)) from exc
    return out


def _load_raster(root: Path, rel: str) -> np.ndarray:
    path = root / rel
    if not path.exists():
        raise MissingRaster(f"missing raster: {path}")
    return read_raster(path)


def _mean_rate(stamps: list[Timestamp]) -> float:
    if len(stamps) < 2:
        return 0.0
    span = stamps[-1].to_float_seconds() - stamps[0].to_float_seconds()
    return (len(stamps) - 1) / span if span > 0 else 0.0


def convert_tum(
    root: str | Path,
    out_path: str | Path,
    depth_scale: float = TUM_DEPTH_SCALE,
) -> ConversionSummary:
    """One RGB, one depth, optional IMU and one GT pose sensor, all frames sorted."""
    root = Path(root)
    rgb_rows = _timestamped_rows(root / "rgb.txt", 2)
    depth_rows = _timestamped_rows(root / "depth.txt", 2)
    # required list file; empty content is fine (EMPTY GT section) but absence is not
    gt_rows = _timestamped_rows(root / "groundtruth.txt", 8)
    accel_path = root / "accelerometer.txt"
    accel_rows = _timestamped_rows(accel_path, 4) if accel_path.exists() else []

    summary = ConversionSummary(output_path=str(out_path))

    rgb_images = [(ts, _load_raster(root, tokens[0])) for ts, tokens in rgb_rows]
    depth_images = [(ts, _load_raster(root, tokens[0])) for ts, tokens in depth_rows]
    if not rgb_images or not depth_images:
        raise MissingRaster("TUM conversion needs at least one RGB and one depth raster")

    rgb_h, rgb_w = rgb_images[0][1].shape[:2]
    d_h, d_w = depth_images[0][1].shape[:2]
    from_file = read_camera_file(root)
    intr_rgb = from_file or _default_intrinsics(rgb_w, rgb_h)
    intr_d = from_file or _default_intrinsics(d_w, d_h)
    sensors: list = [
        CameraDescriptor(
            SensorType.CAMERA_RGB, rgb_w, rgb_h, PixelFormat.RGB8,
            rate_hz=_mean_rate([ts for ts, _ in rgb_images]),
            fx=intr_rgb.fx, fy=intr_rgb.fy, cx=intr_rgb.cx, cy=intr_rgb.cy,
            distortion=intr_rgb.distortion,
        ),
        CameraDescriptor(
            SensorType.CAMERA_DEPTH, d_w, d_h, PixelFormat.DEPTH16,
            rate_hz=_mean_rate([ts for ts, _ in depth_images]),
            fx=intr_d.fx, fy=intr_d.fy, cx=intr_d.cx, cy=intr_d.cy,
            distortion=intr_d.distortion,
            depth_scale=depth_scale,
        ),
    ]
    labels = ["rgb", "depth"]
    imu_index = None
    if accel_rows:
        imu_index = len(sensors)
        sensors.append(ImuDescriptor(rate_hz=_mean_rate([ts for ts, _ in accel_rows])))
        labels.append("imu")
        summary.notes.append("accelerometer-only IMU: gyro components set to zero")
    gt_index = len(sensors)
    sensors.append(GroundTruthDescriptor(SensorType.GT_POSE))
    labels.append("gt_pose")

    raw_inputs: list[tuple[Timestamp, int, bytes]] = []
    for ts, image in rgb_images:
        if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
            raise MissingRaster(f"RGB raster at {ts.to_float_seconds():.6f} is not 8-bit color")
        raw_inputs.append((ts, 0, image.tobytes()))
    for ts, image in depth_images:
        if image.ndim != 2 or image.dtype != np.uint16:
            raise MissingRaster(f"depth raster at {ts.to_float_seconds():.6f} is not 16-bit grey")
        raw_inputs.append((ts, 1, image.astype("<u2").tobytes()))
    for ts, tokens in accel_rows:
        accel = [float(t) for t in tokens[:3]]
        raw_inputs.append((ts, imu_index, encode_imu_sample([0.0, 0.0, 0.0], accel)))

    gt_frames = [gt_pose_frame(ts, gt_index, pose_from_tum_row(tokens[:7]))
                 for ts, tokens in sorted(gt_rows or [], key=lambda r: r[0])]
    in_frames = sort_frames(raw_inputs)

    write_datafile(out_path, sensors, gt_frames, in_frames)
    counts = {label: 0 for label in labels}
    for frame in in_frames:
        counts[labels[frame.sensor_index]] += 1
    counts["gt_pose"] = len(gt_frames)
    summary.frames_per_sensor = counts
    return summary
