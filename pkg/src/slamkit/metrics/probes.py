"""Memory and power probes sampled once per processed frame.

The allocation-hook probe reports net in-process bytes allocated since the
run started (tracemalloc interposition); the resident-set probe reports the
operating system's current resident bytes. Power is either absent or
replayed from a timestamped watt-trace file with linear interpolation.
"""

from __future__ import annotations

import bisect
import threading
import time
import tracemalloc
from pathlib import Path

import psutil


class ProbeUnavailable(Exception):
    pass


# tracemalloc is process-global; concurrent probes share one tracing session
# and only the last one out may stop it (and only if a probe started it).
_tracing_lock = threading.Lock()
_tracing_refcount = 0
_tracing_started_by_probe = False


class MemoryProbe:
    kind = "none"

    def start(self) -> None:
        pass

    def stop(self) -> None:
        pass

    def sample(self) -> int | None:
        return None


class AllocationHookProbe(MemoryProbe):
    """Net Python-allocator bytes since start() via tracemalloc."""

    kind = "allocation-hook"

    def __init__(self) -> None:
        self._baseline: int | None = None
        self._active = False

    def start(self) -> None:
        global _tracing_refcount, _tracing_started_by_probe
        with _tracing_lock:
            if not self._active:
                if _tracing_refcount == 0 and not tracemalloc.is_tracing():
                    tracemalloc.start()
                    _tracing_started_by_probe = True
                _tracing_refcount += 1
                self._active = True
        self._baseline = tracemalloc.get_traced_memory()[0]

    def stop(self) -> None:
        global _tracing_refcount, _tracing_started_by_probe
        with _tracing_lock:
            if not self._active:
                return
            self._active = False
            _tracing_refcount -= 1
            if _tracing_refcount == 0 and _tracing_started_by_probe:
                tracemalloc.stop()
                _tracing_started_by_probe = False

    def sample(self) -> int:
        if self._baseline is None:
            raise ProbeUnavailable("allocation probe not started")
        return tracemalloc.get_traced_memory()[0] - self._baseline


class ResidentSetProbe(MemoryProbe):
    kind = "resident-set"

    def __init__(self) -> None:
        self._process = psutil.Process()

    def sample(self) -> int:
        return int(self._process.memory_info().rss)


def make_memory_probe(kind: str) -> MemoryProbe:
    """kind: "alloc", "rss" or "none"; "alloc" falls back to "rss" if tracing
    cannot start (recorded by the caller via the probe's `kind`)."""
    if kind == "alloc":
        probe = AllocationHookProbe()
        try:
            probe.start()
            probe.stop()
        except Exception:
            return ResidentSetProbe()
        return probe
    if kind == "rss":
        return ResidentSetProbe()
    if kind == "none":
        return MemoryProbe()
    raise ValueError(f"unknown memory probe {kind!r}")


class PowerProbe:
    kind = "none"

    def start(self) -> None:
        pass

    def sample(self) -> float | None:
        return None


class FilePowerProbe(PowerProbe):
    """Replays a sorted `<seconds> <watts>` trace against the monotone clock."""

    kind = "file-trace"

    def __init__(self, trace_path: str | Path):
        self.times: list[float] = []
        self.watts: list[float] = []
        for n, line in enumerate(Path(trace_path).read_text().splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.split()
            if len(tokens) < 2:
                raise ProbeUnavailable(f"{trace_path}:{n}: expected '<seconds> <watts>'")
            try:
                self.times.append(float(tokens[0]))
                self.watts.append(float(tokens[1]))
            except ValueError as exc:
                raise ProbeUnavailable(f"{trace_path}:{n}: {exc}") from exc
        if not self.times:
            raise ProbeUnavailable(f"{trace_path}: empty power trace")
        if self.times != sorted(self.times):
            raise ProbeUnavailable(f"{trace_path}: trace timestamps not sorted")
        self._t0: float | None = None

    def start(self) -> None:
        self._t0 = time.monotonic()

    def sample_at(self, elapsed: float) -> float:
        """Linear interpolation; clamped to the trace endpoints."""
        if elapsed <= self.times[0]:
            return self.watts[0]
        if elapsed >= self.times[-1]:
            return self.watts[-1]
        hi = bisect.bisect_right(self.times, elapsed)
        lo = hi - 1
        t0, t1 = self.times[lo], self.times[hi]
        w0, w1 = self.watts[lo], self.watts[hi]
        if t1 == t0:
            return w1
        return w0 + (w1 - w0) * (elapsed - t0) / (t1 - t0)

    def sample(self) -> float:
        if self._t0 is None:
            raise ProbeUnavailable("power probe not started")
        return self.sample_at(time.monotonic() - self._t0)


def make_power_probe(trace_path: str | Path | None) -> PowerProbe:
    if trace_path is None:
        return PowerProbe()
    return FilePowerProbe(trace_path)
