"""Point-cloud registration: ICP and the reconstruction-error metric."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from slamkit.geometry import Pose, umeyama_align
from slamkit.kernels import NearestNeighborIndex
from slamkit.metrics.trajectory import MetricError


class NoCorrespondences(MetricError):
    pass


@dataclass
class IcpParams:
    max_iterations: int = 50
    tolerance: float = 1e-8  # stop when the residual improves by less than this
    max_correspondence: float = 0.5  # meters; gate on nearest-neighbor matches

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tolerance <= 0 or self.max_correspondence <= 0:
            raise ValueError("tolerance and max_correspondence must be positive")


@dataclass
class IcpResult:
    transform: Pose  # maps source onto target
    residual: float  # RMS matched nearest-neighbor distance, meters
    iterations: int
    residual_history: list[float] = field(default_factory=list)


def icp(source: np.ndarray, target: np.ndarray, params: IcpParams | None = None) -> IcpResult:
    """Point-to-point ICP aligning `source` onto `target`.

    Iterates exact nearest-neighbor correspondences (gated by
    max_correspondence) and a closed-form rigid solve until the residual
    improvement drops below tolerance or max_iterations. The reported
    residual history is non-increasing: a step that would raise the
    residual after re-matching is reverted and iteration stops.
    """
    params = params or IcpParams()
    src = np.ascontiguousarray(source, dtype=np.float64).reshape(-1, 3)
    tgt = np.ascontiguousarray(target, dtype=np.float64).reshape(-1, 3)
    if src.shape[0] < 3 or tgt.shape[0] < 3:
        raise NoCorrespondences("both clouds need at least three points")

    index = NearestNeighborIndex(tgt)
    total = Pose.identity()
    moved = src
    history: list[float] = []
    prev_rms = np.inf
    prev_total = total

    for _ in range(params.max_iterations):
        dists, nn = index.query(moved)
        mask = dists <= params.max_correspondence
        if int(mask.sum()) < 3:
            if not history:
                raise NoCorrespondences(
                    f"fewer than 3 matches within {params.max_correspondence} m"
                )
            break
        rms = float(np.sqrt(np.mean(np.square(dists[mask]))))
        if rms > prev_rms:
            total = prev_total  # revert the step that degraded the fit
            break
        history.append(rms)
        if rms <= 1e-15 or prev_rms - rms < params.tolerance:
            break
        delta = umeyama_align(moved[mask], tgt[nn[mask]], with_scale=False).to_pose()
        prev_total, prev_rms = total, rms
        total = delta.compose(total)
        moved = delta.apply(moved)

    return IcpResult(
        transform=total,
        residual=history[-1],
        iterations=len(history),
        residual_history=history,
    )


@dataclass
class RerResult:
    mean_residual: float  # meters, estimate -> ground-truth direction
    icp: IcpResult


def rer(
    est_cloud: np.ndarray,
    gt_cloud: np.ndarray,
    params: IcpParams | None = None,
) -> RerResult:
    """Reconstruction error: ICP-align the estimate onto ground truth, then
    report the mean distance from each aligned estimate point to its nearest
    ground-truth point."""
    result = icp(est_cloud, gt_cloud, params)
    aligned = result.transform.apply(np.asarray(est_cloud, dtype=np.float64).reshape(-1, 3))
    dists, _ = NearestNeighborIndex(np.asarray(gt_cloud, dtype=np.float64).reshape(-1, 3)).query(aligned)
    return RerResult(mean_residual=float(dists.mean()), icp=result)
