"""Shared converter plumbing: errors, summaries, list-file parsing."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from slamkit.datafile import FrameRecord, encode_gt_pose
from slamkit.geometry import Pose, Timestamp


class IngestError(Exception):
    pass


class MissingListFile(IngestError):
    pass


class UnparseableLine(IngestError):
    def __init__(self, path, line_number: int, reason: str):
        super().__init__(f"{path}:{line_number}: {reason}")
        self.line_number = line_number


class MissingRaster(IngestError):
    pass


class MalformedPointCloud(IngestError):
    pass


class BadCsvHeader(IngestError):
    pass


class InvalidConfig(IngestError):
    pass


@dataclass
class ConversionSummary:
    """Frames written per sensor, one `<sensor> <frame-count>` line each."""

    frames_per_sensor: dict[str, int] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    output_path: str = ""

    def add(self, sensor: str, count: int = 1) -> None:
        self.frames_per_sensor[sensor] = self.frames_per_sensor.get(sensor, 0) + count

    def __str__(self) -> str:
        lines = [f"{name} {count}" for name, count in self.frames_per_sensor.items()]
        return "\n".join(lines)


def parse_whitespace_table(path: Path, min_columns: int) -> list[tuple[int, list[str]]]:
    """Rows of a '#'-commented whitespace-delimited list file, with line numbers."""
    if not path.exists():
        raise MissingListFile(f"missing list file: {path}")
    rows: list[tuple[int, list[str]]] = []
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) < min_columns:
            raise UnparseableLine(path, n, f"expected >= {min_columns} columns, got {len(tokens)}")
        rows.append((n, tokens))
    return rows


def pose_from_tum_row(tokens: list[str]) -> Pose:
    """tx ty tz qx qy qz qw column order."""
    tx, ty, tz, qx, qy, qz, qw = (float(t) for t in tokens)
    return Pose(np.array([qw, qx, qy, qz]), np.array([tx, ty, tz]))


def gt_pose_frame(timestamp: Timestamp, sensor_index: int, pose: Pose) -> FrameRecord:
    return FrameRecord(timestamp, sensor_index, encode_gt_pose(pose.matrix()))


def sort_frames(frames: list[tuple[Timestamp, int, bytes]]) -> list[FrameRecord]:
    """Stable timestamp sort regardless of input interleaving."""
    ordered = sorted(enumerate(frames), key=lambda kv: (kv[1][0], kv[0]))
    return [FrameRecord(ts, idx, payload) for _, (ts, idx, payload) in ordered]
