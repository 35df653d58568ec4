"""Ground-truth replay with seeded perturbations, the statistical test plugin.

Per processed frame the published pose is

    world_drift(k) * gt_pose * local_noise

where local_noise has Gaussian translation (sigma-trans per axis) and an
axis-angle rotation with Gaussian angle (sigma-rot), sampled in the ground
truth's local frame, while the drift accumulates along world x at
drift-per-frame meters. World-frame drift makes RPE over one step equal the
configured drift exactly, whatever the trajectory's rotations do.

With the noise-log parameter set, every sample is appended to a text file
(one row per processed frame) so tests can recompute the expected errors
independently of the metric pipeline.
"""

from __future__ import annotations

import numpy as np

from slamkit.api import (
    AlgorithmConfig,
    FrameView,
    OutputKind,
    ParameterSpec,
    ParamType,
    TrackingStatus,
)
from slamkit.datafile import SensorType, decode_gt_pose
from slamkit.geometry import Pose, quat_from_axis_angle


class NoisyReplayAlgorithm:
    sb_api_version = 2

    def __init__(self) -> None:
        self._gt_pose: Pose | None = None
        self._timestamp = None
        self._published: Pose | None = None
        self._rng: np.random.Generator | None = None
        self._frame_count = 0
        self._log_lines: list[str] = []
        self._pose_channel = None
        self._status_channel = None
        self._config: AlgorithmConfig | None = None

    def sb_new_slam_configuration(self, config: AlgorithmConfig) -> bool:
        config.declare_parameter(ParameterSpec(
            "st", "sigma-trans", "Translation noise stddev per axis (m)",
            ParamType.REAL, 0.0, bounds=(0.0, 10.0), live=True,
        ))
        config.declare_parameter(ParameterSpec(
            "sr", "sigma-rot", "Rotation noise angle stddev (rad)",
            ParamType.REAL, 0.0, bounds=(0.0, 3.14), live=True,
        ))
        config.declare_parameter(ParameterSpec(
            "dr", "drift-per-frame", "World-frame x drift per processed frame (m)",
            ParamType.REAL, 0.0, bounds=(0.0, 1.0),
        ))
        config.declare_parameter(ParameterSpec(
            "se", "seed", "Noise generator seed", ParamType.INT, 0,
        ))
        config.declare_parameter(ParameterSpec(
            "nl", "noise-log", "Path for the sampled-noise log ('' disables)",
            ParamType.STRING, "",
        ))
        return True

    def sb_init_slam_system(self, config: AlgorithmConfig) -> bool:
        if not any(s.sensor_type == SensorType.GT_POSE for s in config.sensors):
            return False
        self._config = config  # sb_clean_slam_system takes no arguments
        self._rng = np.random.default_rng(config.get_parameter("seed"))
        self._pose_channel = config.register_output("pose", OutputKind.POSE)
        self._status_channel = config.register_output("tracking_status", OutputKind.TRACKING_STATUS)
        self._status_channel.set(TrackingStatus.BOOTSTRAP)
        return True

    def sb_update_frame(self, config: AlgorithmConfig, frame: FrameView) -> bool:
        if frame.sensor_index >= len(config.sensors):
            return False
        if config.sensors[frame.sensor_index].sensor_type != SensorType.GT_POSE:
            return False
        self._gt_pose = Pose.from_matrix(decode_gt_pose(bytes(frame.payload)))
        self._timestamp = frame.timestamp
        return True

    def sb_process_once(self, config: AlgorithmConfig) -> bool:
        sigma_trans = config.get_parameter("sigma-trans")
        sigma_rot = config.get_parameter("sigma-rot")
        drift = config.get_parameter("drift-per-frame")

        eps = self._rng.normal(0.0, sigma_trans, size=3) if sigma_trans > 0 else np.zeros(3)
        if sigma_rot > 0:
            axis = self._rng.normal(size=3)
            angle = self._rng.normal(0.0, sigma_rot)
            rot_noise = quat_from_axis_angle(axis, angle)
        else:
            rot_noise = np.array([1.0, 0.0, 0.0, 0.0])

        noise = Pose(rot_noise, eps)
        k = self._frame_count
        world_drift = Pose(np.array([1.0, 0.0, 0.0, 0.0]), np.array([k * drift, 0.0, 0.0]))
        self._published = world_drift.compose(self._gt_pose.compose(noise))
        self._frame_count += 1

        ts = self._timestamp
        self._log_lines.append(
            f"{ts.seconds} {ts.nanoseconds} "
            + " ".join(repr(float(v)) for v in eps)
            + " " + " ".join(repr(float(v)) for v in rot_noise)
            + f" {k}"
        )
        return True

    def sb_update_outputs(self, config: AlgorithmConfig) -> bool:
        if self._published is None:
            return False
        self._pose_channel.set(self._published, self._timestamp)
        self._status_channel.set(TrackingStatus.TRACKING, self._timestamp)
        return True

    def sb_clean_slam_system(self) -> bool:
        log_path = self._config.get_parameter("noise-log") if self._config else ""
        if log_path:
            with open(log_path, "w") as fh:
                fh.write("\n".join(self._log_lines) + ("\n" if self._log_lines else ""))
        self._log_lines = []
        return True


def parse_noise_log(path) -> list[dict]:
    """Rows of the sampled-noise log: timestamp, translation eps, rotation
    quaternion and the drift index of each processed frame."""
    rows = []
    for line in open(path).read().splitlines():
        tokens = line.split()
        rows.append(
            {
                "seconds": int(tokens[0]),
                "nanoseconds": int(tokens[1]),
                "eps": np.array([float(t) for t in tokens[2:5]]),
                "rot": np.array([float(t) for t in tokens[5:9]]),
                "drift_index": int(tokens[9]),
            }
        )
    return rows
