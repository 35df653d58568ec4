"""Per-frame timing around the process entry point."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from slamkit.api import AlgorithmHandle, OutputKind


@dataclass
class ProcessTiming:
    ok: bool
    duration: float  # seconds, monotone clock around sb_process_once
    phases: dict[str, float] = field(default_factory=dict)


def time_process(handle: AlgorithmHandle) -> ProcessTiming:
    """Run one process step and copy any TIMING_PHASE channel breakdown."""
    start = time.perf_counter()
    ok = handle.process_once()
    duration = time.perf_counter() - start
    phases = {
        channel.name: float(channel.value)
        for channel in handle.config.channels_of_kind(OutputKind.TIMING_PHASE)
        if channel.value is not None
    }
    return ProcessTiming(ok=ok, duration=duration, phases=phases)
