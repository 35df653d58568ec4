"""Report serialization: JSON round-trips exactly, CSV carries one row per line."""

from __future__ import annotations

import json
from pathlib import Path

from slamkit.metrics.report import CSV_COLUMNS, RunReport, row_from_csv, row_to_csv


class IoFailure(Exception):
    pass


def export_report(reports: list[RunReport], path: str | Path, fmt: str = "json") -> list[Path]:
    """Write reports; CSV gets one file per report (suffixed by algorithm)."""
    path = Path(path)
    try:
        if fmt == "json":
            payload = {"reports": [r.to_dict() for r in reports]}
            path.write_text(json.dumps(payload, indent=2, allow_nan=True))
            return [path]
        if fmt == "csv":
            written = []
            for report in reports:
                target = path if len(reports) == 1 else \
                    path.with_name(f"{path.stem}-{report.algorithm}{path.suffix}")
                lines = [",".join(CSV_COLUMNS)]
                lines += [row_to_csv(row) for row in report.rows]
                target.write_text("\n".join(lines) + "\n")
                written.append(target)
            return written
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    raise ValueError(f"unknown report format {fmt!r}")


def import_report(path: str | Path) -> list[RunReport]:
    """Read back a JSON export; inverse of export_report(fmt="json")."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return [RunReport.from_dict(entry) for entry in data["reports"]]


def import_csv_rows(path: str | Path):
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ValueError(f"{path}: missing CSV header")
    return [row_from_csv(line) for line in lines[1:] if line]
