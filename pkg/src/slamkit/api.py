"""The contract between the harness and SLAM algorithm implementations.

A plugin is a library exporting an integer `sb_api_version` (currently 2)
plus six entry points resolved by exact name:

    sb_new_slam_configuration(config) -> bool
    sb_init_slam_system(config) -> bool
    sb_update_frame(config, frame) -> bool   # True means "ready to process"
    sb_process_once(config) -> bool
    sb_update_outputs(config) -> bool
    sb_clean_slam_system() -> bool

Libraries are Python modules loaded by path, each load executing into a
fresh module so two handles on the same file share no algorithm state; an
object with the same attributes can be wrapped directly for in-process use.
The harness drives the entry points through a strict lifecycle state
machine and never forwards an out-of-order call.
"""

from __future__ import annotations

import importlib.util
import itertools
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable

from slamkit.geometry import Pose, Timestamp

SUPPORTED_API_VERSION = 2

ENTRY_POINT_NAMES = (
    "sb_new_slam_configuration",
    "sb_init_slam_system",
    "sb_update_frame",
    "sb_process_once",
    "sb_update_outputs",
    "sb_clean_slam_system",
)


class ApiError(Exception):
    pass


class LoadFailure(ApiError):
    pass


class MissingSymbol(ApiError):
    def __init__(self, symbol: str, library: str):
        super().__init__(f"{library}: missing symbol {symbol!r}")
        self.symbol = symbol


class ApiVersionMismatch(ApiError):
    pass


class DuplicateParameter(ApiError):
    pass


class UndeclaredParameter(ApiError):
    pass


class ParameterValueError(ApiError):
    pass


class LifecycleError(ApiError):
    pass


class ContractViolation(ApiError):
    """A plugin broke an invariant the harness checks (e.g. no pose channel)."""


class AlgorithmFailure(ApiError):
    """A plugin reported an unrecoverable failure (entry point returned false)."""


class ParamType(Enum):
    INT = "int"
    REAL = "real"
    BOOL = "bool"
    STRING = "string"


_PY_TYPES = {
    ParamType.INT: int,
    ParamType.REAL: float,
    ParamType.BOOL: bool,
    ParamType.STRING: str,
}


def _coerce(value_type: ParamType, value: Any) -> Any:
    """Exact-round-trip coercion; strings are parsed per the declared type."""
    if value_type == ParamType.BOOL:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0"):
            return value.lower() in ("true", "1")
        raise ParameterValueError(f"not a bool: {value!r}")
    if value_type == ParamType.INT:
        if isinstance(value, bool):
            raise ParameterValueError(f"not an int: {value!r}")
        try:
            as_int = int(str(value)) if not isinstance(value, int) else value
        except ValueError:
            raise ParameterValueError(f"not an int: {value!r}") from None
        return as_int
    if value_type == ParamType.REAL:
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ParameterValueError(f"not a real: {value!r}") from None
    return str(value)


@dataclass
class ParameterSpec:
    """One declared tunable: names, type, default, optional bounds."""

    short_name: str
    long_name: str
    description: str
    value_type: ParamType
    default: Any
    bounds: tuple[Any, Any] | None = None
    live: bool = False  # settable while the run is in progress
    current: Any = None

    def __post_init__(self) -> None:
        self.default = _coerce(self.value_type, self.default)
        if self.current is None:
            self.current = self.default
        self.validate(self.current)

    def validate(self, value: Any) -> Any:
        value = _coerce(self.value_type, value)
        if self.bounds is not None:
            lo, hi = self.bounds
            if not (lo <= value <= hi):
                raise ParameterValueError(
                    f"{self.long_name}={value!r} outside bounds [{lo}, {hi}]"
                )
        return value


class OutputKind(Enum):
    POSE = "pose"
    POINT_CLOUD = "point_cloud"
    FEATURE_LIST = "feature_list"
    RGB_FRAME = "rgb_frame"
    TRACKING_STATUS = "tracking_status"
    TIMING_PHASE = "timing_phase"
    MEMORY_COUNTER = "memory_counter"


class TrackingStatus(Enum):
    BOOTSTRAP = "bootstrap"
    TRACKING = "tracking"
    LOST = "lost"


@dataclass
class OutputChannel:
    """Latest published value of one algorithm output, kind fixed at registration."""

    name: str
    kind: OutputKind
    value: Any = None
    timestamp: Timestamp | None = None

    def set(self, value: Any, timestamp: Timestamp | None = None) -> None:
        self.value = value
        self.timestamp = timestamp


@dataclass(frozen=True)
class FrameView:
    """Borrowed view of one frame; the payload is only valid during delivery."""

    timestamp: Timestamp
    sensor_index: int
    payload: memoryview


class LifecycleState(Enum):
    CREATED = "created"
    CONFIGURED = "configured"
    INITIALISED = "initialised"
    FINISHED = "finished"


class _Phase(Enum):
    IDLE = 0
    CONFIGURING = 1
    INITIALISING = 2
    RUNNING = 3


class AlgorithmConfig:
    """Environment shared with the plugin: parameters, sensors, outputs."""

    def __init__(self, ui_enabled: bool = False):
        self.ui_enabled = ui_enabled
        self.sensors: tuple = ()
        self.parameters: dict[str, ParameterSpec] = {}
        self.outputs: dict[str, OutputChannel] = {}
        self._phase = _Phase.IDLE

    # -- plugin-facing -------------------------------------------------

    def declare_parameter(self, spec: ParameterSpec) -> ParameterSpec:
        if self._phase != _Phase.CONFIGURING:
            raise LifecycleError("parameters may only be declared during configuration")
        for existing in self.parameters.values():
            if existing.long_name == spec.long_name or existing.short_name == spec.short_name:
                raise DuplicateParameter(
                    f"parameter {spec.short_name!r}/{spec.long_name!r} already declared"
                )
        self.parameters[spec.long_name] = spec
        return spec

    def register_output(self, name: str, kind: OutputKind) -> OutputChannel:
        if self._phase != _Phase.INITIALISING:
            raise LifecycleError("outputs may only be registered during initialisation")
        if name in self.outputs:
            raise ContractViolation(f"output channel {name!r} already registered")
        channel = OutputChannel(name, kind)
        self.outputs[name] = channel
        return channel

    # -- harness-facing ------------------------------------------------

    def get_parameter(self, long_name: str) -> Any:
        if long_name not in self.parameters:
            raise UndeclaredParameter(long_name)
        return self.parameters[long_name].current

    def set_parameter(self, long_name: str, value: Any, live: bool = False) -> tuple[Any, Any]:
        """Apply an override; returns (old, new). Live mode requires a live parameter."""
        if long_name not in self.parameters:
            raise UndeclaredParameter(long_name)
        spec = self.parameters[long_name]
        if live and not spec.live:
            raise ParameterValueError(
                f"parameter {long_name!r} is not live-settable; restart required"
            )
        old = spec.current
        spec.current = spec.validate(value)
        return old, spec.current

    def channels_of_kind(self, kind: OutputKind) -> list[OutputChannel]:
        return [c for c in self.outputs.values() if c.kind == kind]


_load_counter = itertools.count()
_load_lock = threading.Lock()


@dataclass
class AlgorithmHandle:
    """A loaded plugin plus its lifecycle state machine.

    Entry points are callable only in phase order: configure -> init ->
    (update_frame / process_once / update_outputs)* -> clean. Any
    out-of-order call raises LifecycleError without reaching the plugin.
    """

    name: str
    entry_points: dict[str, Callable]
    api_version: int
    library: str = "<in-process>"
    config: AlgorithmConfig = field(default_factory=AlgorithmConfig)
    state: LifecycleState = LifecycleState.CREATED
    _ready_to_process: bool = False

    def _expect(self, *states: LifecycleState) -> None:
        if self.state not in states:
            raise LifecycleError(
                f"{self.name}: call invalid in state {self.state.name} "
                f"(expected {'/'.join(s.name for s in states)})"
            )

    def configure(self, ui_enabled: bool = False) -> None:
        """sb_new_slam_configuration: declare parameters."""
        self._expect(LifecycleState.CREATED)
        self.config.ui_enabled = ui_enabled
        self.config._phase = _Phase.CONFIGURING
        try:
            ok = self.entry_points["sb_new_slam_configuration"](self.config)
        finally:
            self.config._phase = _Phase.IDLE
        if not ok:
            raise AlgorithmFailure(f"{self.name}: sb_new_slam_configuration returned false")
        self.state = LifecycleState.CONFIGURED

    def set_parameter(self, long_name: str, value: Any) -> tuple[Any, Any]:
        """Pre-run override; after initialisation only live parameters may change."""
        if self.state == LifecycleState.CONFIGURED:
            return self.config.set_parameter(long_name, value, live=False)
        if self.state == LifecycleState.INITIALISED:
            return self.config.set_parameter(long_name, value, live=True)
        raise LifecycleError(f"{self.name}: cannot set parameters in state {self.state.name}")

    def init(self, sensors: tuple) -> bool:
        """sb_init_slam_system; False means the sensor set is unsupported."""
        self._expect(LifecycleState.CONFIGURED)
        self.config.sensors = tuple(sensors)
        self.config._phase = _Phase.INITIALISING
        try:
            ok = bool(self.entry_points["sb_init_slam_system"](self.config))
        finally:
            self.config._phase = _Phase.RUNNING
        if not ok:
            return False
        if "pose" not in self.config.outputs or \
                self.config.outputs["pose"].kind != OutputKind.POSE:
            raise ContractViolation(f"{self.name}: no POSE channel named 'pose' registered")
        self.state = LifecycleState.INITIALISED
        return True

    def update_frame(self, frame: FrameView) -> bool:
        self._expect(LifecycleState.INITIALISED)
        self._ready_to_process = bool(self.entry_points["sb_update_frame"](self.config, frame))
        return self._ready_to_process

    def process_once(self) -> bool:
        self._expect(LifecycleState.INITIALISED)
        if not self._ready_to_process:
            raise LifecycleError(
                f"{self.name}: sb_process_once requires a prior sb_update_frame returning true"
            )
        self._ready_to_process = False
        return bool(self.entry_points["sb_process_once"](self.config))

    def update_outputs(self) -> bool:
        self._expect(LifecycleState.INITIALISED)
        return bool(self.entry_points["sb_update_outputs"](self.config))

    def clean(self) -> bool:
        self._expect(LifecycleState.INITIALISED)
        ok = bool(self.entry_points["sb_clean_slam_system"]())
        self.state = LifecycleState.FINISHED
        return ok

    # -- convenience readers --------------------------------------------

    def current_pose(self) -> tuple[Pose, Timestamp] | None:
        channel = self.config.outputs.get("pose")
        if channel is None or channel.value is None:
            return None
        return channel.value, channel.timestamp

    def tracking_status(self) -> TrackingStatus:
        for channel in self.config.channels_of_kind(OutputKind.TRACKING_STATUS):
            if channel.value is not None:
                return channel.value
        return TrackingStatus.BOOTSTRAP


def _resolve_entry_points(source: Any, library: str) -> tuple[dict[str, Callable], int]:
    version = getattr(source, "sb_api_version", None)
    if version is None:
        raise MissingSymbol("sb_api_version", library)
    table = {}
    for symbol in ENTRY_POINT_NAMES:
        fn = getattr(source, symbol, None)
        if fn is None or not callable(fn):
            raise MissingSymbol(symbol, library)
        table[symbol] = fn
    if version != SUPPORTED_API_VERSION:
        raise ApiVersionMismatch(
            f"{library}: api version {version}, harness supports {SUPPORTED_API_VERSION}"
        )
    return table, version


def algorithm_name_for(library_path: str | Path) -> str:
    """CLI-facing short name: file stem without a 'lib' prefix."""
    stem = Path(library_path).stem
    return stem[3:] if stem.startswith("lib") and len(stem) > 3 else stem


def load_algorithm(library_path: str | Path) -> AlgorithmHandle:
    """Load a plugin library by path and resolve its symbol table.

    Every call executes the library into a fresh module, so repeated loads
    of the same file yield fully independent algorithm instances.
    """
    path = Path(library_path)
    if not path.exists():
        raise LoadFailure(f"no such library: {path}")
    with _load_lock:
        module_name = f"_sb_plugin_{next(_load_counter)}_{path.stem.replace('-', '_')}"
    spec = importlib.util.spec_from_file_location(module_name, path)
    if spec is None or spec.loader is None:
        raise LoadFailure(f"cannot load {path}")
    module = importlib.util.module_from_spec(spec)
    try:
        spec.loader.exec_module(module)
    except Exception as exc:
        raise LoadFailure(f"error executing {path}: {exc}") from exc
    table, version = _resolve_entry_points(module, str(path))
    return AlgorithmHandle(
        name=algorithm_name_for(path),
        entry_points=table,
        api_version=version,
        library=str(path),
    )


def handle_from_object(impl: Any, name: str) -> AlgorithmHandle:
    """Wrap an in-process object exposing the same symbol table."""
    table, version = _resolve_entry_points(impl, name)
    return AlgorithmHandle(name=name, entry_points=table, api_version=version)
