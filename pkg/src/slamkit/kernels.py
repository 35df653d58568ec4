"""Hot-kernel backend selection.

The compiled core (slamkit._native) is preferred when it built; the pure
NumPy/SciPy implementation (slamkit._pure) is the fallback. Set
SLAMKIT_PURE_KERNELS=1 to force the fallback, e.g. for benchmarking the two
backends against each other.
"""

from __future__ import annotations

import os
from types import ModuleType

from slamkit import _pure


def _load_backend() -> tuple[ModuleType, str]:
    if os.environ.get("SLAMKIT_PURE_KERNELS", "") not in ("", "0"):
        return _pure, "pure"
    try:
        from slamkit import _native
    except ImportError:
        return _pure, "pure"
    return _native, "native"


_backend, BACKEND = _load_backend()

NearestNeighborIndex = _backend.NearestNeighborIndex
unproject_depth = _backend.unproject_depth
sample_depth_points = _backend.sample_depth_points


def available_backends() -> dict[str, ModuleType]:
    """All importable kernel backends, keyed by name."""
    backends: dict[str, ModuleType] = {"pure": _pure}
    try:
        from slamkit import _native
    except ImportError:
        pass
    else:
        backends["native"] = _native
    return backends
