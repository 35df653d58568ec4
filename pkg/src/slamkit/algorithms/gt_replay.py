"""Oracle algorithm: republish the last ground-truth pose it was fed.

Runs only when the harness forwards ground-truth frames (a test-mode flag),
giving an exact zero-error end-to-end check of the whole pipeline.
"""

from __future__ import annotations

from slamkit.api import AlgorithmConfig, FrameView, OutputKind, TrackingStatus
from slamkit.datafile import SensorType, decode_gt_pose
from slamkit.geometry import Pose


class GtReplayAlgorithm:
    sb_api_version = 2

    def __init__(self) -> None:
        self._pose: Pose | None = None
        self._timestamp = None
        self._pose_channel = None
        self._status_channel = None

    def sb_new_slam_configuration(self, config: AlgorithmConfig) -> bool:
        return True  # no parameters

    def sb_init_slam_system(self, config: AlgorithmConfig) -> bool:
        if not any(s.sensor_type == SensorType.GT_POSE for s in config.sensors):
            return False
        self._pose_channel = config.register_output("pose", OutputKind.POSE)
        self._status_channel = config.register_output("tracking_status", OutputKind.TRACKING_STATUS)
        self._status_channel.set(TrackingStatus.BOOTSTRAP)
        return True

    def sb_update_frame(self, config: AlgorithmConfig, frame: FrameView) -> bool:
        if frame.sensor_index >= len(config.sensors):
            return False
        sensor = config.sensors[frame.sensor_index]
        if sensor.sensor_type != SensorType.GT_POSE:
            return False
        self._pose = Pose.from_matrix(decode_gt_pose(bytes(frame.payload)))
        self._timestamp = frame.timestamp
        return True

    def sb_process_once(self, config: AlgorithmConfig) -> bool:
        return True

    def sb_update_outputs(self, config: AlgorithmConfig) -> bool:
        if self._pose is None:
            return False
        self._pose_channel.set(self._pose, self._timestamp)
        self._status_channel.set(TrackingStatus.TRACKING, self._timestamp)
        return True

    def sb_clean_slam_system(self) -> bool:
        self._pose = None
        return True
