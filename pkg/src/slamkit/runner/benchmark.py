"""The execution engine: stream a datafile through loaded algorithms and
collect per-frame metric rows plus per-run summaries."""

from __future__ import annotations

import heapq
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterator

import numpy as np

from slamkit.api import (
    AlgorithmHandle,
    ApiError,
    FrameView,
    OutputKind,
    load_algorithm,
)
from slamkit.datafile import SensorType, decode_gt_pose, decode_point_cloud, open_datafile
from slamkit.geometry import Pose
from slamkit.metrics.probes import make_memory_probe, make_power_probe
from slamkit.metrics.registration import IcpParams, rer
from slamkit.metrics.report import MetricRow, RunReport, summarize_rows
from slamkit.metrics.timing import time_process
from slamkit.metrics.trajectory import (
    DEFAULT_MAX_DT,
    IncrementalAssociator,
    InsufficientPairs,
    TrajectorySample,
    associate,
    ate_aligned,
    rpe,
)
from slamkit.plugins import resolve_library

POSE_UNIT_TOL = 1e-6  # published quaternions must be unit within this


@dataclass
class AlgorithmRun:
    """One algorithm to execute: library path or bundled name plus overrides."""

    library: str
    parameters: dict[str, Any] = field(default_factory=dict)


@dataclass
class RunSpec:
    datafile: str
    algorithms: list[AlgorithmRun]
    frame_limit: int | None = None
    max_dt: float = DEFAULT_MAX_DT
    memory_probe: str = "alloc"  # alloc | rss | none
    power_trace: str | None = None
    deliver_gt_frames: bool = False  # test mode: forward GT frames to plugins
    ui_enabled: bool = False
    compute_rer: bool = False
    rer_params: IcpParams | None = None  # None: generous cross-frame alignment budget
    rpe_delta: int = 1
    seed: int = 0
    output_path: str | None = None
    output_format: str = "json"  # json | csv

    def validate(self) -> None:
        if not self.algorithms:
            raise ValueError("a run needs at least one algorithm")
        if not Path(self.datafile).exists():
            raise FileNotFoundError(f"no such datafile: {self.datafile}")


@dataclass
class _AlgoState:
    handle: AlgorithmHandle
    run: AlgorithmRun
    column: str
    rows: list[MetricRow] = field(default_factory=list)
    est_trajectory: list[TrajectorySample] = field(default_factory=list)
    associator: IncrementalAssociator | None = None
    alignment: Pose | None = None  # first-pair alignment, fixed once matched
    failure: str | None = None

    @property
    def alive(self) -> bool:
        return self.failure is None


@dataclass
class FrameStep:
    """What happened while consuming one input frame."""

    frame_index: int
    timestamp: float
    rows: dict[str, MetricRow] = field(default_factory=dict)  # column -> row


class BenchmarkSession:
    """Loaded handles plus the frame stream, advanced one input frame at a time.

    The batch runner drives advance() in a loop; the interactive service
    steps it under user control and applies live parameter changes between
    frames.
    """

    def __init__(self, spec: RunSpec):
        spec.validate()
        self.spec = spec
        self.reader = open_datafile(spec.datafile)
        self.gt_trajectory = self._load_gt_trajectory()
        self.gt_cloud = self._load_gt_cloud() if spec.compute_rer else None
        self.frame_cursor = 0
        self.audit_log: list[dict] = []
        self.finished = False

        self.memory_probe = make_memory_probe(spec.memory_probe)
        self.power_probe = make_power_probe(spec.power_trace)

        columns = []
        self.algorithms: list[_AlgoState] = []
        for run in spec.algorithms:
            library = resolve_library(run.library)
            handle = load_algorithm(library)
            if handle.name in columns:
                raise ValueError(f"duplicate algorithm short name {handle.name!r}")
            columns.append(handle.name)
            self.algorithms.append(_AlgoState(handle=handle, run=run, column=handle.name))

        for state in self.algorithms:
            try:
                state.handle.configure(ui_enabled=spec.ui_enabled)
                for name, value in state.run.parameters.items():
                    state.handle.set_parameter(name, value)
                if not state.handle.init(self.reader.sensors):
                    state.failure = "unsupported sensor configuration"
            except ApiError as exc:
                state.failure = str(exc)
            state.associator = IncrementalAssociator(self.gt_trajectory, spec.max_dt)

        self._frames = self._frame_stream()
        self.memory_probe.start()
        self.power_probe.start()

    # -- input plumbing --------------------------------------------------

    def _load_gt_trajectory(self) -> list[TrajectorySample]:
        samples = []
        for frame in self.reader.gt_frames():
            if self.reader.sensors[frame.sensor_index].sensor_type == SensorType.GT_POSE:
                samples.append(
                    TrajectorySample(frame.timestamp, Pose.from_matrix(decode_gt_pose(frame.payload)))
                )
        return samples

    def _load_gt_cloud(self) -> np.ndarray | None:
        for frame in self.reader.gt_frames():
            if self.reader.sensors[frame.sensor_index].sensor_type == SensorType.GT_POINT_CLOUD:
                return decode_point_cloud(frame.payload)
        return None

    def _frame_stream(self) -> Iterator[tuple[bool, Any]]:
        """Input frames, optionally merged with GT frames by timestamp.

        Yields (is_input, frame); in merged mode GT frames sort before input
        frames sharing a timestamp so replay plugins see the pose first.
        """
        if not self.spec.deliver_gt_frames:
            for frame in self.reader.input_frames():
                yield True, frame
            return
        gt = ((f.timestamp.total_nanoseconds(), 0, i, f)
              for i, f in enumerate(self.reader.gt_frames()))
        inp = ((f.timestamp.total_nanoseconds(), 1, i, f)
               for i, f in enumerate(self.reader.input_frames()))
        for _, section, _, frame in heapq.merge(gt, inp):
            yield section == 1, frame

    # -- execution -------------------------------------------------------

    def set_live_parameter(self, algorithm: str, name: str, value: Any) -> dict:
        """Apply a live override between frames; records an audit entry."""
        for state in self.algorithms:
            if state.column == algorithm:
                old, new = state.handle.set_parameter(name, value)
                entry = {
                    "frame": self.frame_cursor,
                    "algorithm": algorithm,
                    "name": name,
                    "old": old,
                    "new": new,
                }
                self.audit_log.append(entry)
                return entry
        raise KeyError(f"no algorithm named {algorithm!r} in this run")

    def advance(self) -> FrameStep | None:
        """Consume exactly one input frame (plus any GT frames due before it).

        Returns the per-algorithm rows produced, or None at end of stream or
        when the frame limit was reached.
        """
        if self.finished:
            return None
        if self.spec.frame_limit is not None and self.frame_cursor >= self.spec.frame_limit:
            self.finish()
            return None

        step = FrameStep(frame_index=self.frame_cursor, timestamp=0.0)
        input_frame = None
        for is_input, frame in self._frames:
            self._deliver(frame, step)
            if is_input:
                input_frame = frame
                break
        if input_frame is None:
            self.finish()
            return None

        step.timestamp = input_frame.timestamp.to_float_seconds()
        self.frame_cursor += 1
        return step

    def _deliver(self, frame, step: FrameStep) -> None:
        """Feed one frame to every live algorithm, processing immediately
        whenever an update reports readiness (the contract's workflow)."""
        view = FrameView(frame.timestamp, frame.sensor_index, memoryview(frame.payload))
        for state in self.algorithms:
            if not state.alive:
                continue
            try:
                ready = state.handle.update_frame(view)
            except ApiError as exc:
                state.failure = str(exc)
                continue
            if ready:
                row = self._collect_row(state, step.frame_index)
                if row is not None:
                    step.rows[state.column] = row

    def _collect_row(self, state: _AlgoState, frame_index: int) -> MetricRow | None:
        try:
            timing = time_process(state.handle)
            if not timing.ok:
                state.failure = "sb_process_once reported an unrecoverable failure"
                return None
            outputs_ok = state.handle.update_outputs()
        except ApiError as exc:
            state.failure = str(exc)
            return None

        row = MetricRow(
            frame_index=frame_index,
            timestamp=0.0,
            duration=timing.duration,
            phases=timing.phases,
            memory_bytes=self.memory_probe.sample(),
            power_watts=self.power_probe.sample(),
            tracking_status=state.handle.tracking_status().value,
        )
        counters = [
            int(c.value)
            for c in state.handle.config.channels_of_kind(OutputKind.MEMORY_COUNTER)
            if c.value is not None
        ]
        if counters:
            row.plugin_memory_bytes = sum(counters)

        if outputs_ok:
            published = state.handle.current_pose()
            if published is not None:
                pose, ts = published
                if abs(float(np.linalg.norm(pose.rotation)) - 1.0) > POSE_UNIT_TOL:
                    state.failure = f"published pose quaternion not unit within {POSE_UNIT_TOL}"
                    return None
                sample = TrajectorySample(ts, pose)
                row.timestamp = ts.to_float_seconds()
                state.est_trajectory.append(sample)
                pair = state.associator.match(sample)
                if pair is not None:
                    if state.alignment is None:
                        state.alignment = pair.gt.pose.compose(pair.est.pose.inverse())
                    aligned = state.alignment.compose(pair.est.pose)
                    row.ate = float(np.linalg.norm(pair.gt.pose.translation - aligned.translation))
        state.rows.append(row)
        return row

    def run_to_completion(self, on_step: Callable[[FrameStep], None] | None = None) -> None:
        while True:
            step = self.advance()
            if step is None:
                return
            if on_step is not None:
                on_step(step)

    def finish(self) -> None:
        if self.finished:
            return
        self.finished = True
        for state in self.algorithms:
            if state.handle.state.name == "INITIALISED":
                try:
                    state.handle.clean()
                except ApiError as exc:
                    state.failure = state.failure or str(exc)
        self.memory_probe.stop()

    # -- reporting ---------------------------------------------------------

    def reports(self) -> list[RunReport]:
        self.finish()
        out = []
        for state in self.algorithms:
            report = RunReport(
                algorithm=state.column,
                library=str(state.handle.library),
                datafile=str(self.spec.datafile),
                parameters={
                    name: spec.current
                    for name, spec in state.handle.config.parameters.items()
                },
                seed=self.spec.seed,
                memory_probe=self.memory_probe.kind,
                power_probe=self.power_probe.kind,
                failure=state.failure,
                rows=state.rows,
            )
            report.summary = summarize_rows(state.rows)
            pairs = associate(state.est_trajectory, self.gt_trajectory, self.spec.max_dt)
            try:
                report.summary.ate_aligned_rmse = ate_aligned(pairs, "rigid").rmse
                sim = ate_aligned(pairs, "similarity")
                report.summary.ate_aligned_similarity_rmse = sim.rmse
                report.summary.ate_aligned_scale = sim.transform.scale
            except Exception:
                pass  # too few pairs or degenerate geometry: left absent
            try:
                rpe_result = rpe(pairs, delta=self.spec.rpe_delta)
                report.summary.rpe_trans_rmse = rpe_result.trans_rmse
                report.summary.rpe_rot_rmse = rpe_result.rot_rmse
            except InsufficientPairs:
                pass
            if self.gt_cloud is not None:
                cloud = self._published_cloud(state)
                if cloud is not None and len(cloud) >= 3:
                    # the estimate map lives in the algorithm's own world frame;
                    # the gate must cover that frame offset for ICP to absorb it
                    params = self.spec.rer_params or IcpParams(
                        max_iterations=100, tolerance=1e-10, max_correspondence=2.0
                    )
                    report.summary.rer = rer(cloud, self.gt_cloud, params).mean_residual
            out.append(report)
        return out

    def _published_cloud(self, state: _AlgoState) -> np.ndarray | None:
        for channel in state.handle.config.channels_of_kind(OutputKind.POINT_CLOUD):
            if channel.value is not None:
                return np.asarray(channel.value)
        return None


class TableWriter:
    """Streams the per-frame metric table, one ATE column per algorithm."""

    def __init__(self, columns: list[str], stream=None):
        self.columns = columns
        self.stream = stream or sys.stdout
        header = ["frame", "timestamp"]
        for name in columns:
            header += [f"{name}_duration_s", f"{name}_memory_b", f"{name}_ATE"]
        self.stream.write("\t".join(header) + "\n")

    def write_step(self, step: FrameStep) -> None:
        cells = [str(step.frame_index), f"{step.timestamp:.9f}"]
        for name in self.columns:
            row = step.rows.get(name)
            if row is None:
                cells += ["-", "-", "-"]
            else:
                cells += [
                    f"{row.duration:.6f}",
                    str(row.memory_bytes) if row.memory_bytes is not None else "-",
                    f"{row.ate:.10f}" if row.ate is not None else "-",
                ]
        self.stream.write("\t".join(cells) + "\n")


def run_benchmark(spec: RunSpec, stream=None) -> list[RunReport]:
    """Batch mode: run every algorithm over the datafile, streaming the table."""
    session = BenchmarkSession(spec)
    writer = TableWriter([s.column for s in session.algorithms], stream)
    session.run_to_completion(writer.write_step)
    reports = session.reports()
    if spec.output_path:
        from slamkit.runner.export import export_report

        export_report(reports, spec.output_path, spec.output_format)
    return reports
