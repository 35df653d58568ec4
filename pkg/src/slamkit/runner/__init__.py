"""Loader-driven execution: batch benchmarks, sweeps, and the control service."""

from slamkit.runner.benchmark import (
    AlgorithmRun,
    BenchmarkSession,
    FrameStep,
    RunSpec,
    TableWriter,
    run_benchmark,
)
from slamkit.runner.export import export_report, import_csv_rows, import_report
from slamkit.runner.sweep import (
    NoValidSamples,
    ParameterDomain,
    SweepResult,
    SweepSample,
    SweepSpec,
    compute_pareto,
    run_sweep,
)

__all__ = [
    "AlgorithmRun",
    "BenchmarkSession",
    "FrameStep",
    "NoValidSamples",
    "ParameterDomain",
    "RunSpec",
    "SweepResult",
    "SweepSample",
    "SweepSpec",
    "TableWriter",
    "compute_pareto",
    "export_report",
    "import_csv_rows",
    "import_report",
    "run_benchmark",
    "run_sweep",
]
