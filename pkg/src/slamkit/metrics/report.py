"""Per-frame metric rows and per-run reports with summary statistics."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np


@dataclass
class MetricRow:
    frame_index: int
    timestamp: float  # seconds
    duration: float  # process duration, seconds
    phases: dict[str, float] = field(default_factory=dict)
    memory_bytes: int | None = None  # harness probe
    plugin_memory_bytes: int | None = None  # MEMORY_COUNTER channels
    power_watts: float | None = None
    ate: float | None = None  # running first-pose-aligned error, meters
    tracking_status: str = "bootstrap"


@dataclass
class RunSummary:
    frames_processed: int = 0
    ate_mean: float | None = None
    ate_max: float | None = None
    ate_rmse: float | None = None
    ate_aligned_rmse: float | None = None  # offline rigid alignment
    ate_aligned_scale: float | None = None  # similarity-mode recovered scale
    ate_aligned_similarity_rmse: float | None = None
    rpe_trans_rmse: float | None = None
    rpe_rot_rmse: float | None = None
    mean_fps: float | None = None
    peak_memory_bytes: int | None = None
    mean_power_watts: float | None = None
    rer: float | None = None


@dataclass
class RunReport:
    algorithm: str
    library: str
    datafile: str
    parameters: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None
    memory_probe: str = "none"
    power_probe: str = "none"
    failure: str | None = None
    rows: list[MetricRow] = field(default_factory=list)
    summary: RunSummary = field(default_factory=RunSummary)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        rows = [MetricRow(**row) for row in data.get("rows", [])]
        summary = RunSummary(**data.get("summary", {}))
        fields_ = {k: v for k, v in data.items() if k not in ("rows", "summary")}
        return cls(rows=rows, summary=summary, **fields_)


def summarize_rows(rows: list[MetricRow]) -> RunSummary:
    """Row-derivable summary statistics (trajectory-level stats are filled
    in by the runner, which holds the full trajectories)."""
    summary = RunSummary(frames_processed=len(rows))
    if not rows:
        return summary
    ates = np.array([r.ate for r in rows if r.ate is not None])
    if ates.size:
        summary.ate_mean = float(ates.mean())
        summary.ate_max = float(ates.max())
        summary.ate_rmse = float(np.sqrt(np.mean(np.square(ates))))
    total = sum(r.duration for r in rows)
    if total > 0:
        summary.mean_fps = len(rows) / total
    memories = [r.memory_bytes for r in rows if r.memory_bytes is not None]
    if memories:
        summary.peak_memory_bytes = max(memories)
    powers = [r.power_watts for r in rows if r.power_watts is not None]
    if powers:
        summary.mean_power_watts = float(np.mean(powers))
    return summary


CSV_COLUMNS = (
    "frame_index",
    "timestamp",
    "duration",
    "memory_bytes",
    "plugin_memory_bytes",
    "power_watts",
    "ate",
    "tracking_status",
)


def row_to_csv(row: MetricRow) -> str:
    cells = []
    for column in CSV_COLUMNS:
        value = getattr(row, column)
        if value is None:
            cells.append("")
        elif isinstance(value, float):
            cells.append(repr(value))
        else:
            cells.append(str(value))
    return ",".join(cells)


def row_from_csv(line: str) -> MetricRow:
    cells = line.split(",")
    if len(cells) != len(CSV_COLUMNS):
        raise ValueError(f"expected {len(CSV_COLUMNS)} cells, got {len(cells)}")
    values: dict[str, Any] = {}
    for column, cell in zip(CSV_COLUMNS, cells):
        if cell == "":
            values[column] = None
        elif column in ("frame_index",):
            values[column] = int(cell)
        elif column in ("memory_bytes", "plugin_memory_bytes"):
            values[column] = int(cell)
        elif column == "tracking_status":
            values[column] = cell
        else:
            values[column] = float(cell)
    return MetricRow(phases={}, **values)
