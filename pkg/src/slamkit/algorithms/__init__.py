"""Built-in reference algorithms exercising the full plugin contract."""

from slamkit.algorithms.gt_replay import GtReplayAlgorithm
from slamkit.algorithms.icp_odometry import IcpOdometryAlgorithm
from slamkit.algorithms.noisy_replay import NoisyReplayAlgorithm, parse_noise_log

__all__ = [
    "GtReplayAlgorithm",
    "IcpOdometryAlgorithm",
    "NoisyReplayAlgorithm",
    "parse_noise_log",
]
