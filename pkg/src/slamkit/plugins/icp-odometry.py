"""Loadable dense ICP odometry plugin; fresh state per load."""

from slamkit.algorithms.icp_odometry import IcpOdometryAlgorithm

_impl = IcpOdometryAlgorithm()

sb_api_version = 2
sb_new_slam_configuration = _impl.sb_new_slam_configuration
sb_init_slam_system = _impl.sb_init_slam_system
sb_update_frame = _impl.sb_update_frame
sb_process_once = _impl.sb_process_once
sb_update_outputs = _impl.sb_update_outputs
sb_clean_slam_system = _impl.sb_clean_slam_system
