"""EuRoC MAV directory layout -> datafile conversion.

Expects cam0/data.csv (cam1 optional), imu0/data.csv and the ground-truth
state CSV, all with integer-nanosecond timestamps and a '#' header row.
Camera/IMU calibration is taken from the per-sensor sensor.yaml when
present, otherwise neutral defaults derived from the first image are used.
"""

from __future__ import annotations

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
from slamkit.geometry import Pose, Timestamp
from slamkit.ingest.common import (
    BadCsvHeader,
    ConversionSummary,
    MissingListFile,
    MissingRaster,
    UnparseableLine,
    gt_pose_frame,
    sort_frames,
)
from slamkit.ingest.rasters import read_raster

GROUND_TRUTH_DIR = "state_groundtruth_estimate0"


def _read_csv(path: Path, min_columns: int) -> list[tuple[int, list[str]]]:
    if not path.exists():
        raise MissingListFile(f"missing CSV: {path}")
    lines = path.read_text().splitlines()
    if not lines or not lines[0].lstrip().startswith("#"):
        raise BadCsvHeader(f"{path}: expected a '#' header row")
    rows = []
    for n, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = [t.strip() for t in stripped.split(",")]
        if len(tokens) < min_columns:
            raise UnparseableLine(path, n, f"expected >= {min_columns} columns, got {len(tokens)}")
        rows.append((n, tokens))
    return rows


def _timestamp(path: Path, line: int, token: str) -> Timestamp:
    try:
        return Timestamp.from_total_nanoseconds(int(token))
    except ValueError as exc:
        raise UnparseableLine(path, line, f"bad nanosecond timestamp {token!r}") from exc


def _camera_yaml(cam_dir: Path) -> dict:
    path = cam_dir / "sensor.yaml"
    if not path.exists():
        return {}
    import yaml

    with open(path) as fh:
        return yaml.safe_load(fh) or {}


def _camera_descriptor(cam_dir: Path, width: int, height: int, rate_hz: float) -> CameraDescriptor:
    meta = _camera_yaml(cam_dir)
    intr = meta.get("intrinsics")
    if intr and len(intr) >= 4:
        fx, fy, cx, cy = (float(v) for v in intr[:4])
    else:
        fx = fy = 0.9 * width
        cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    dist_raw = [float(v) for v in meta.get("distortion_coefficients", [])]
    distortion = tuple((dist_raw + [0.0] * 5)[:5])
    return CameraDescriptor(
        SensorType.CAMERA_GREY, width, height, PixelFormat.GREY8,
        rate_hz=float(meta.get("rate_hz", rate_hz)),
        fx=fx, fy=fy, cx=cx, cy=cy, distortion=distortion,
    )


def _load_grey(path: Path) -> np.ndarray:
    if not path.exists():
        raise MissingRaster(f"missing raster: {path}")
    image = read_raster(path)
    if image.ndim == 3:  # collapse accidental color fixtures deterministically
        image = image[:, :, 0]
    if image.dtype != np.uint8:
        raise MissingRaster(f"{path}: expected 8-bit greyscale")
    return image


def convert_euroc(root: str | Path, out_path: str | Path) -> ConversionSummary:
    root = Path(root)
    if (root / "mav0").is_dir():
        root = root / "mav0"
    cam_dirs = [root / "cam0"]
    if not (root / "cam0" / "data.csv").exists():
        raise MissingListFile(f"missing CSV: {root / 'cam0' / 'data.csv'}")
    if (root / "cam1" / "data.csv").exists():
        cam_dirs.append(root / "cam1")

    sensors: list = []
    labels: list[str] = []
    raw_inputs: list[tuple[Timestamp, int, bytes]] = []

    for cam_dir in cam_dirs:
        csv_path = cam_dir / "data.csv"
        rows = _read_csv(csv_path, 2)
        stamps_images = []
        for n, tokens in rows:
            ts = _timestamp(csv_path, n, tokens[0])
            stamps_images.append((ts, _load_grey(cam_dir / "data" / tokens[1])))
        if not stamps_images:
            raise MissingRaster(f"{csv_path}: no image rows")
        height, width = stamps_images[0][1].shape
        span = stamps_images[-1][0].to_float_seconds() - stamps_images[0][0].to_float_seconds()
        rate = (len(stamps_images) - 1) / span if span > 0 else 0.0
        index = len(sensors)
        sensors.append(_camera_descriptor(cam_dir, width, height, rate))
        labels.append(cam_dir.name.replace("cam", "grey"))
        for ts, image in stamps_images:
            raw_inputs.append((ts, index, image.tobytes()))

    imu_csv = root / "imu0" / "data.csv"
    if imu_csv.exists():
        imu_meta = _camera_yaml(root / "imu0")
        imu_index = len(sensors)
        sensors.append(
            ImuDescriptor(
                rate_hz=float(imu_meta.get("rate_hz", 0.0)),
                gyro_noise=float(imu_meta.get("gyroscope_noise_density", 0.0)),
                accel_noise=float(imu_meta.get("accelerometer_noise_density", 0.0)),
            )
        )
        labels.append("imu")
        for n, tokens in _read_csv(imu_csv, 7):
            ts = _timestamp(imu_csv, n, tokens[0])
            try:
                gyro = [float(t) for t in tokens[1:4]]
                accel = [float(t) for t in tokens[4:7]]
            except ValueError as exc:
                raise UnparseableLine(imu_csv, n, str(exc)) from exc
            raw_inputs.append((ts, imu_index, encode_imu_sample(gyro, accel)))

    gt_frames = []
    gt_index = len(sensors)
    sensors.append(GroundTruthDescriptor(SensorType.GT_POSE))
    labels.append("gt_pose")
    gt_csv = root / GROUND_TRUTH_DIR / "data.csv"
    if gt_csv.exists():
        for n, tokens in _read_csv(gt_csv, 8):
            ts = _timestamp(gt_csv, n, tokens[0])
            try:
                px, py, pz, qw, qx, qy, qz = (float(t) for t in tokens[1:8])
            except ValueError as exc:
                raise UnparseableLine(gt_csv, n, str(exc)) from exc
            pose = Pose(np.array([qw, qx, qy, qz]), np.array([px, py, pz]))
            gt_frames.append(gt_pose_frame(ts, gt_index, pose))
    gt_frames.sort(key=lambda f: f.timestamp)

    in_frames = sort_frames(raw_inputs)
    write_datafile(out_path, sensors, gt_frames, in_frames)

    summary = ConversionSummary(output_path=str(out_path))
    counts = {label: 0 for label in labels}
    for frame in in_frames:
        counts[labels[frame.sensor_index]] += 1
    counts["gt_pose"] = len(gt_frames)
    summary.frames_per_sensor = counts
    return summary
