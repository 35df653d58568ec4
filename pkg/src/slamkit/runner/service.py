"""Run-control service: sessions stepped or played under HTTP control.

Each session owns a benchmark engine on a dedicated worker thread; commands
(play/pause/step/set-parameter) go through a queue and are applied between
frames. Snapshots are consistent copies; the stream endpoint pushes
incremental messages (pose-appended, row-appended, status-changed) at most
once per processed frame so clients can follow without polling.
"""

from __future__ import annotations

import itertools
import json
import queue
import threading
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import uvicorn
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from slamkit.api import ApiError, OutputKind, load_algorithm
from slamkit.datafile import summarize_datafile
from slamkit.plugins import resolve_library
from slamkit.runner.benchmark import AlgorithmRun, BenchmarkSession, RunSpec

POINT_BUDGET = 20_000  # point-cloud snapshot decimation cap
DECIMATION_SEED = 7


class SessionMode(str, Enum):
    RUNNING = "running"
    PAUSED = "paused"
    STEPPING = "stepping"
    DONE = "done"
    FAILED = "failed"


class RunSpecBody(BaseModel):
    datafile: str
    algorithms: list[dict]
    max_dt: float = 0.02
    frame_limit: int | None = None
    deliver_gt_frames: bool = False
    memory_probe: str = "rss"
    ui_enabled: bool = False
    seed: int = 0


class StepBody(BaseModel):
    n: int = 1


class ParamBody(BaseModel):
    algorithm: str
    name: str
    value: Any


@dataclass
class _Command:
    kind: str  # play | pause | step | param | stop
    payload: Any = None
    done: threading.Event = field(default_factory=threading.Event)
    result: Any = None
    error: str | None = None


class SessionWorker:
    """Owns one BenchmarkSession; all plugin calls happen on this thread."""

    def __init__(self, session_id: str, spec: RunSpec):
        self.id = session_id
        self.mode = SessionMode.PAUSED
        self.error: str | None = None
        self._lock = threading.RLock()
        self._commands: "queue.Queue[_Command]" = queue.Queue()
        self._subscribers: list[queue.Queue] = []
        self._message_log: list[dict] = []  # replayed to late subscribers
        self._steps_left = 0
        self._trajectories: dict[str, list[list[float]]] = {}
        self._gt: list[list[float]] = []
        self._rows: dict[str, list[dict]] = {}
        self._statuses: dict[str, str] = {}
        self._engine: BenchmarkSession | None = None
        self._spec = spec
        self._thread = threading.Thread(target=self._run, name=f"session-{session_id}", daemon=True)
        self._started = threading.Event()
        self._thread.start()
        self._started.wait(timeout=30)
        if self.error:
            raise RuntimeError(self.error)

    # -- worker side -----------------------------------------------------

    def _run(self) -> None:
        try:
            self._engine = BenchmarkSession(self._spec)
            with self._lock:
                self._gt = [
                    [s.timestamp.to_float_seconds(), *map(float, s.pose.translation),
                     *map(float, s.pose.rotation)]
                    for s in self._engine.gt_trajectory
                ]
                for state in self._engine.algorithms:
                    self._trajectories[state.column] = []
                    self._rows[state.column] = []
                    self._statuses[state.column] = "bootstrap"
        except Exception as exc:
            self.error = f"session setup failed: {exc}"
            self.mode = SessionMode.FAILED
            self._started.set()
            return
        self._started.set()

        while True:
            advancing = self.mode == SessionMode.RUNNING or (
                self.mode == SessionMode.STEPPING and self._steps_left > 0
            )
            try:
                command = self._commands.get(block=not advancing, timeout=None if advancing else 0.2)
            except queue.Empty:
                command = None
            if command is not None:
                if self._handle(command) == "stop":
                    return
                continue
            if advancing:
                self._advance_once()

    def _handle(self, command: _Command) -> str | None:
        try:
            if command.kind == "stop":
                self._engine.finish()
                command.done.set()
                return "stop"
            if command.kind == "play":
                if self.mode not in (SessionMode.DONE, SessionMode.FAILED):
                    self.mode = SessionMode.RUNNING
            elif command.kind == "pause":
                if self.mode not in (SessionMode.DONE, SessionMode.FAILED):
                    self.mode = SessionMode.PAUSED
                    self._steps_left = 0
            elif command.kind == "step":
                n = int(command.payload)
                if n < 1:
                    raise ValueError("step count must be >= 1")
                if self.mode not in (SessionMode.DONE, SessionMode.FAILED):
                    self.mode = SessionMode.STEPPING
                    self._steps_left = n
                    while self._steps_left > 0 and self.mode == SessionMode.STEPPING:
                        self._advance_once()
            elif command.kind == "param":
                body: ParamBody = command.payload
                entry = self._engine.set_live_parameter(body.algorithm, body.name, body.value)
                command.result = entry
            command.result = command.result or self.status()
        except (ApiError, KeyError, ValueError) as exc:
            command.error = str(exc)
        except Exception as exc:
            command.error = str(exc)
            self.error = str(exc)
            self.mode = SessionMode.FAILED
        finally:
            command.done.set()
        return None

    def _advance_once(self) -> None:
        try:
            step = self._engine.advance()
        except Exception as exc:
            self.error = str(exc)
            self.mode = SessionMode.FAILED
            return
        if step is None:
            self.mode = SessionMode.DONE
            self._steps_left = 0
            self._publish({"type": "status-changed", "mode": self.mode.value,
                           "frame": self.frame_cursor})
            return
        with self._lock:
            for state in self._engine.algorithms:
                row = step.rows.get(state.column)
                if row is None:
                    continue
                sample = state.est_trajectory[-1] if state.est_trajectory else None
                if sample is not None and len(state.rows) > len(self._trajectories[state.column]) - 1:
                    point = [sample.timestamp.to_float_seconds(),
                             *map(float, sample.pose.translation),
                             *map(float, sample.pose.rotation)]
                    self._trajectories[state.column].append(point)
                    self._publish({"type": "pose-appended", "algorithm": state.column,
                                   "frame": step.frame_index, "point": point})
                row_dict = asdict(row)
                self._rows[state.column].append(row_dict)
                self._publish({"type": "row-appended", "algorithm": state.column,
                               "frame": step.frame_index, "row": row_dict})
                if row.tracking_status != self._statuses[state.column]:
                    self._statuses[state.column] = row.tracking_status
                    self._publish({"type": "status-changed", "algorithm": state.column,
                                   "frame": step.frame_index, "status": row.tracking_status})
        if self.mode == SessionMode.STEPPING:
            self._steps_left -= 1
            if self._steps_left <= 0:
                self.mode = SessionMode.PAUSED

    def _publish(self, message: dict) -> None:
        with self._lock:
            message = {"seq": len(self._message_log), **message}
            self._message_log.append(message)
            subscribers = list(self._subscribers)
        for subscriber in subscribers:
            subscriber.put(message)

    # -- HTTP side --------------------------------------------------------

    @property
    def frame_cursor(self) -> int:
        return self._engine.frame_cursor if self._engine else 0

    def command(self, kind: str, payload: Any = None, timeout: float = 60.0) -> Any:
        cmd = _Command(kind, payload)
        self._commands.put(cmd)
        if not cmd.done.wait(timeout):
            raise HTTPException(504, "session worker timed out")
        if cmd.error:
            raise HTTPException(400, cmd.error)
        return cmd.result

    def status(self) -> dict:
        return {"id": self.id, "mode": self.mode.value, "frame": self.frame_cursor,
                "error": self.error}

    def snapshot(self) -> dict:
        with self._lock:
            params = {}
            clouds = {}
            if self._engine is not None:
                for state in self._engine.algorithms:
                    params[state.column] = [
                        {
                            "short_name": s.short_name,
                            "long_name": s.long_name,
                            "description": s.description,
                            "type": s.value_type.value,
                            "default": s.default,
                            "current": s.current,
                            "bounds": list(s.bounds) if s.bounds else None,
                            "live": s.live,
                        }
                        for s in state.handle.config.parameters.values()
                    ]
                    cloud = self._decimated_cloud(state)
                    if cloud is not None:
                        clouds[state.column] = cloud
            return {
                "id": self.id,
                "mode": self.mode.value,
                "frame": self.frame_cursor,
                "seq": len(self._message_log),  # resume the stream from here
                "error": self.error,
                "trajectories": {"gt": list(self._gt),
                                 "est": {k: list(v) for k, v in self._trajectories.items()}},
                "rows": {k: list(v) for k, v in self._rows.items()},
                "params": params,
                "audit": list(self._engine.audit_log) if self._engine else [],
                "clouds": clouds,
            }

    def _decimated_cloud(self, state) -> dict | None:
        for channel in state.handle.config.channels_of_kind(OutputKind.POINT_CLOUD):
            if channel.value is None:
                continue
            points = np.asarray(channel.value)
            total = len(points)
            if total > POINT_BUDGET:
                rng = np.random.default_rng(DECIMATION_SEED)
                points = points[rng.choice(total, size=POINT_BUDGET, replace=False)]
            return {"total": total, "seed": DECIMATION_SEED,
                    "points": np.asarray(points, dtype=float).round(5).tolist()}
        return None

    def subscribe(self, from_seq: int = 0) -> queue.Queue:
        """New subscriber queue, pre-seeded with the buffered log from from_seq."""
        q: queue.Queue = queue.Queue()
        with self._lock:
            for message in self._message_log[from_seq:]:
                q.put(message)
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        if q in self._subscribers:
            self._subscribers.remove(q)

    def stop(self) -> None:
        try:
            self.command("stop", timeout=10)
        except HTTPException:
            pass


def build_app(base_spec: RunSpec) -> FastAPI:
    """The service API; `base_spec` provides the default datafile and the
    set of loadable libraries reported by /algorithms."""
    app = FastAPI(title="slamkit run-control service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, SessionWorker] = {}
    counter = itertools.count(1)
    app.state.sessions = sessions

    @app.post("/sessions")
    def create_session(body: RunSpecBody):
        spec = RunSpec(
            datafile=body.datafile or base_spec.datafile,
            algorithms=[AlgorithmRun(a["library"], a.get("parameters", {}))
                        for a in body.algorithms] or base_spec.algorithms,
            max_dt=body.max_dt,
            frame_limit=body.frame_limit,
            deliver_gt_frames=body.deliver_gt_frames,
            memory_probe=body.memory_probe,
            ui_enabled=body.ui_enabled,
            seed=body.seed,
        )
        try:
            spec.validate()
            session = SessionWorker(f"s{next(counter)}", spec)
        except (RuntimeError, FileNotFoundError, ValueError) as exc:
            raise HTTPException(400, str(exc)) from exc
        sessions[session.id] = session
        return {"id": session.id, "mode": session.mode.value}

    def get_session(session_id: str) -> SessionWorker:
        if session_id not in sessions:
            raise HTTPException(404, f"no session {session_id}")
        return sessions[session_id]

    @app.post("/sessions/{session_id}/step")
    def step(session_id: str, body: StepBody):
        return get_session(session_id).command("step", body.n)

    @app.post("/sessions/{session_id}/play")
    def play(session_id: str):
        return get_session(session_id).command("play")

    @app.post("/sessions/{session_id}/pause")
    def pause(session_id: str):
        return get_session(session_id).command("pause")

    @app.put("/sessions/{session_id}/params")
    def set_param(session_id: str, body: ParamBody):
        return get_session(session_id).command("param", body)

    @app.get("/sessions/{session_id}/snapshot")
    def snapshot(session_id: str):
        return get_session(session_id).snapshot()

    @app.get("/sessions/{session_id}/stream")
    def stream(session_id: str, from_seq: int = 0, follow: bool = True):
        """Server push, SSE framed. follow=false closes once the buffered
        log is drained (bounded responses for polling clients and tests)."""
        session = get_session(session_id)
        subscriber = session.subscribe(from_seq)

        def events():
            try:
                while True:
                    try:
                        message = subscriber.get(timeout=2.0)
                    except queue.Empty:
                        if not follow:
                            return
                        yield ": keep-alive\n\n"
                        continue
                    yield f"data: {json.dumps(message)}\n\n"
                    if not follow and subscriber.empty():
                        return
            finally:
                session.unsubscribe(subscriber)

        return StreamingResponse(events(), media_type="text/event-stream")

    @app.get("/algorithms")
    def algorithms():
        out = []
        for run in base_spec.algorithms:
            try:
                handle = load_algorithm(resolve_library(run.library))
                handle.configure()
            except (ApiError, FileNotFoundError) as exc:
                out.append({"library": run.library, "error": str(exc)})
                continue
            out.append({
                "library": str(run.library),
                "name": handle.name,
                "parameters": [
                    {
                        "short_name": s.short_name,
                        "long_name": s.long_name,
                        "description": s.description,
                        "type": s.value_type.value,
                        "default": s.default,
                        "bounds": list(s.bounds) if s.bounds else None,
                        "live": s.live,
                    }
                    for s in handle.config.parameters.values()
                ],
            })
        return out

    @app.get("/datasets")
    def datasets():
        summary = summarize_datafile(base_spec.datafile)
        return [{
            "path": summary.path,
            "sensors": summary.sensors,
            "gt_frames": summary.gt_frame_count,
            "input_frames": summary.input_frame_count,
            "duration_seconds": summary.duration_seconds,
        }]

    return app


def serve_blocking(spec: RunSpec, host: str, port: int) -> None:
    uvicorn.run(build_app(spec), host=host, port=port, log_level="warning")
