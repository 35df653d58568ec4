"""Per-frame and per-run evaluation metrics."""

from slamkit.metrics.probes import (
    AllocationHookProbe,
    FilePowerProbe,
    MemoryProbe,
    PowerProbe,
    ProbeUnavailable,
    ResidentSetProbe,
    make_memory_probe,
    make_power_probe,
)
from slamkit.metrics.registration import IcpParams, IcpResult, NoCorrespondences, RerResult, icp, rer
from slamkit.metrics.report import MetricRow, RunReport, RunSummary, summarize_rows
from slamkit.metrics.timing import ProcessTiming, time_process
from slamkit.metrics.trajectory import (
    DEFAULT_MAX_DT,
    AssociatedPair,
    AteResult,
    AlignedAteResult,
    EmptyPairs,
    IncrementalAssociator,
    InsufficientPairs,
    MetricError,
    RpeResult,
    TrajectorySample,
    associate,
    ate_aligned,
    ate_runtime,
    rpe,
)

__all__ = [
    "AllocationHookProbe",
    "AlignedAteResult",
    "AssociatedPair",
    "AteResult",
    "DEFAULT_MAX_DT",
    "EmptyPairs",
    "FilePowerProbe",
    "IcpParams",
    "IcpResult",
    "IncrementalAssociator",
    "InsufficientPairs",
    "MemoryProbe",
    "MetricError",
    "MetricRow",
    "NoCorrespondences",
    "PowerProbe",
    "ProbeUnavailable",
    "ProcessTiming",
    "RerResult",
    "ResidentSetProbe",
    "RpeResult",
    "RunReport",
    "RunSummary",
    "TrajectorySample",
    "associate",
    "ate_aligned",
    "ate_runtime",
    "icp",
    "make_memory_probe",
    "make_power_probe",
    "rer",
    "rpe",
    "summarize_rows",
    "time_process",
]
