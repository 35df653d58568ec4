"""Dense frame-to-frame depth odometry via point-to-point ICP.

The smallest dense algorithm that still exercises the whole contract:
declared parameters with bounds, per-phase timing channels (preprocess /
icp / integrate), a memory counter, a growing point-cloud map, and a
speed/accuracy trade-off through the subsample stride.

Frames are subsampled to the stride-determined budget at seeded random
sub-pixel positions (bilinearly interpolated depth) rather than on the
pixel lattice: point-to-point ICP between two regular samplings of smooth
surfaces locks onto the sampling grid instead of the geometry, which costs
roughly half a lattice cell of bias per frame pair. Off-lattice sampling
removes that failure mode while keeping the stride's cost semantics: the
point count still falls quadratically as the stride grows.
"""

from __future__ import annotations

import time
import zlib

import numpy as np

from slamkit.api import (
    AlgorithmConfig,
    FrameView,
    OutputKind,
    ParameterSpec,
    ParamType,
    TrackingStatus,
)
from slamkit.datafile import CameraDescriptor, SensorType
from slamkit.geometry import Pose
from slamkit.kernels import sample_depth_points
from slamkit.metrics.registration import IcpParams, NoCorrespondences, icp

# Residual above this many times the correspondence gate marks divergence.
_DIVERGENCE_FRACTION = 0.5

# Salt for the frame-content-derived sampling seed.
_SAMPLING_SALT = 0x5B2

# Fraction of each frame's samples kept in the accumulated map.
_MAP_DECIMATION = 4


class IcpOdometryAlgorithm:
    sb_api_version = 2

    def __init__(self) -> None:
        self._depth_index: int | None = None
        self._camera: CameraDescriptor | None = None
        self._prev_points: np.ndarray | None = None
        self._curr_raw: bytes | None = None
        self._pending_raw: bytes | None = None
        self._last_raw: bytes | None = None
        self._pose = Pose.identity()
        self._timestamp = None
        self._map_chunks: list[np.ndarray] = []
        self._channels: dict = {}
        self._status = TrackingStatus.BOOTSTRAP

    def sb_new_slam_configuration(self, config: AlgorithmConfig) -> bool:
        config.declare_parameter(ParameterSpec(
            "st", "stride", "Depth subsample stride (px)",
            ParamType.INT, 1, bounds=(1, 64),
        ))
        config.declare_parameter(ParameterSpec(
            "mi", "max-iterations", "ICP iteration cap",
            ParamType.INT, 30, bounds=(1, 200),
        ))
        config.declare_parameter(ParameterSpec(
            "tol", "tolerance", "ICP residual-improvement stop (m)",
            ParamType.REAL, 1e-6, bounds=(1e-12, 1.0),
        ))
        config.declare_parameter(ParameterSpec(
            "mcd", "max-correspondence-distance", "Nearest-neighbor gate (m)",
            ParamType.REAL, 0.12, bounds=(1e-6, 10.0),
        ))
        return True

    def sb_init_slam_system(self, config: AlgorithmConfig) -> bool:
        for i, sensor in enumerate(config.sensors):
            if sensor.sensor_type == SensorType.CAMERA_DEPTH:
                self._depth_index = i
                self._camera = sensor
                break
        if self._camera is None:
            return False  # depth-only algorithm
        self._channels["pose"] = config.register_output("pose", OutputKind.POSE)
        self._channels["status"] = config.register_output(
            "tracking_status", OutputKind.TRACKING_STATUS)
        self._channels["map"] = config.register_output("map", OutputKind.POINT_CLOUD)
        self._channels["memory"] = config.register_output(
            "buffer_bytes", OutputKind.MEMORY_COUNTER)
        for phase in ("preprocess", "icp", "integrate"):
            self._channels[phase] = config.register_output(phase, OutputKind.TIMING_PHASE)
        if config.ui_enabled:
            # depth preview for the GUI; skipped entirely headless
            self._channels["preview"] = config.register_output(
                "depth_preview", OutputKind.RGB_FRAME)
        self._channels["status"].set(self._status)
        return True

    def sb_update_frame(self, config: AlgorithmConfig, frame: FrameView) -> bool:
        if frame.sensor_index != self._depth_index:
            return False
        raw = bytes(frame.payload)
        self._timestamp = frame.timestamp
        if self._prev_points is None and self._curr_raw is None:
            # first frame only seeds the pair; nothing to align yet
            self._curr_raw = raw
            return False
        self._pending_raw = raw
        return True

    def _unproject(self, raw: bytes, stride: int) -> np.ndarray:
        """Stride-budgeted cloud at jittered sub-pixel positions.

        The jitter is seeded from the frame's own bytes: identical frames
        produce identical clouds (so a static camera aligns exactly), while
        distinct frames get independent patterns.
        """
        cam = self._camera
        depth = np.frombuffer(raw, dtype="<u2").reshape(cam.height, cam.width)
        rng = np.random.default_rng((zlib.crc32(raw), _SAMPLING_SALT))
        cell_u = np.arange(0, cam.width - stride, stride, dtype=np.float64)
        cell_v = np.arange(0, cam.height - stride, stride, dtype=np.float64)
        uu, vv = np.meshgrid(cell_u, cell_v)
        us = uu + rng.uniform(0.0, stride, size=uu.shape)
        vs = vv + rng.uniform(0.0, stride, size=vv.shape)
        return sample_depth_points(
            depth, cam.fx, cam.fy, cam.cx, cam.cy, cam.depth_scale, us, vs
        )

    def sb_process_once(self, config: AlgorithmConfig) -> bool:
        stride = config.get_parameter("stride")
        t0 = time.perf_counter()
        if self._prev_points is None:
            self._prev_points = self._unproject(self._curr_raw, stride)
            self._curr_raw = None
            self._map_chunks.append(self._pose.apply(self._prev_points[::_MAP_DECIMATION]))
        curr_points = self._unproject(self._pending_raw, stride)
        t1 = time.perf_counter()

        params = IcpParams(
            max_iterations=config.get_parameter("max-iterations"),
            tolerance=config.get_parameter("tolerance"),
            max_correspondence=config.get_parameter("max-correspondence-distance"),
        )
        diverged = False
        try:
            result = icp(curr_points, self._prev_points, params)
            diverged = result.residual > _DIVERGENCE_FRACTION * params.max_correspondence
        except NoCorrespondences:
            diverged = True
        t2 = time.perf_counter()

        if diverged:
            self._status = TrackingStatus.LOST  # pose unchanged
        else:
            self._pose = self._pose.compose(result.transform)
            self._status = TrackingStatus.TRACKING
            self._map_chunks.append(self._pose.apply(curr_points[::_MAP_DECIMATION]))
        self._prev_points = curr_points
        self._last_raw = self._pending_raw  # kept for the UI preview
        self._pending_raw = None
        t3 = time.perf_counter()

        self._channels["preprocess"].set(t1 - t0, self._timestamp)
        self._channels["icp"].set(t2 - t1, self._timestamp)
        self._channels["integrate"].set(t3 - t2, self._timestamp)
        self._channels["memory"].set(self._buffer_bytes(), self._timestamp)
        return True

    def _buffer_bytes(self) -> int:
        total = self._prev_points.nbytes if self._prev_points is not None else 0
        total += sum(chunk.nbytes for chunk in self._map_chunks)
        return total

    def sb_update_outputs(self, config: AlgorithmConfig) -> bool:
        self._channels["pose"].set(self._pose, self._timestamp)
        self._channels["status"].set(self._status, self._timestamp)
        if self._map_chunks:
            self._channels["map"].set(np.concatenate(self._map_chunks), self._timestamp)
        if "preview" in self._channels and self._last_raw is not None:
            cam = self._camera
            depth = np.frombuffer(self._last_raw, dtype="<u2").reshape(cam.height, cam.width)
            scaled = np.clip(depth / max(float(depth.max()), 1.0) * 255, 0, 255)
            grey = scaled.astype(np.uint8)
            self._channels["preview"].set(np.stack([grey, grey, grey], axis=-1), self._timestamp)
        return True

    def sb_clean_slam_system(self) -> bool:
        self._prev_points = None
        self._map_chunks = []
        self._curr_raw = None
        return True
