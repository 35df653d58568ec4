"""Bundled loadable plugin libraries.

The .py files in this directory are not importable modules (their names
carry dashes on purpose); they are loaded by path through the dynamic
loader, exactly like external algorithm libraries.
"""

from __future__ import annotations

from pathlib import Path

BUNDLED = ("gt-replay", "noisy-replay", "icp-odometry")


def bundled_plugin_path(name: str) -> Path:
    """Path of a bundled plugin library by short name."""
    path = Path(__file__).parent / f"{name}.py"
    if not path.exists():
        raise FileNotFoundError(f"no bundled plugin named {name!r}")
    return path


def resolve_library(name_or_path: str | Path) -> Path:
    """Interpret a CLI -load argument: an existing path wins, else a bundled name."""
    path = Path(name_or_path)
    if path.exists():
        return path
    if str(name_or_path) in BUNDLED:
        return bundled_plugin_path(str(name_or_path))
    raise FileNotFoundError(f"no such algorithm library: {name_or_path}")
