"""Trajectory accuracy: timestamp association, ATE (runtime and aligned), RPE."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from slamkit.geometry import Pose, SimTransform, Timestamp, umeyama_align

DEFAULT_MAX_DT = 0.02  # seconds; standard gate for 30 Hz RGB-D streams


class MetricError(Exception):
    pass


class EmptyPairs(MetricError):
    pass


class InsufficientPairs(MetricError):
    pass


@dataclass(frozen=True)
class TrajectorySample:
    timestamp: Timestamp
    pose: Pose


@dataclass(frozen=True)
class AssociatedPair:
    gt: TrajectorySample
    est: TrajectorySample
    dt: float  # |t_gt - t_est| in seconds


def associate(
    est: list[TrajectorySample],
    gt: list[TrajectorySample],
    max_dt: float = DEFAULT_MAX_DT,
) -> list[AssociatedPair]:
    """Greedy nearest-timestamp matching.

    Estimates are visited in timestamp order; each claims its closest
    still-unused ground-truth sample (ties resolved toward the earlier one)
    and the pair is kept only when |dt| <= max_dt.
    """
    matcher = IncrementalAssociator(gt, max_dt)
    pairs = []
    for sample in est:
        pair = matcher.match(sample)
        if pair is not None:
            pairs.append(pair)
    return pairs


class IncrementalAssociator:
    """Streaming version of associate(): feed estimates in timestamp order."""

    def __init__(self, gt: list[TrajectorySample], max_dt: float = DEFAULT_MAX_DT):
        self._gt = list(gt)
        self._times = [s.timestamp.to_float_seconds() for s in self._gt]
        self._used = [False] * len(self._gt)
        self.max_dt = max_dt

    def match(self, est_sample: TrajectorySample) -> AssociatedPair | None:
        if not self._gt:
            return None
        t = est_sample.timestamp.to_float_seconds()
        pos = bisect.bisect_left(self._times, t)
        best: int | None = None
        best_dt = math.inf
        left, right = pos - 1, pos
        # walk outward from the insertion point, skipping used samples;
        # ties (equal dt) resolve to the earlier ground-truth sample
        while left >= 0 or right < len(self._times):
            left_dt = t - self._times[left] if left >= 0 else math.inf
            right_dt = self._times[right] - t if right < len(self._times) else math.inf
            if left_dt <= right_dt:
                if not self._used[left]:
                    best, best_dt = self._earliest_equal(left), left_dt
                    break
                left -= 1
            else:
                if not self._used[right]:
                    best, best_dt = right, right_dt
                    break
                right += 1
        if best is None or best_dt > self.max_dt:
            return None
        self._used[best] = True
        return AssociatedPair(gt=self._gt[best], est=est_sample, dt=best_dt)

    def _earliest_equal(self, index: int) -> int:
        """Earliest unused sample sharing index's timestamp (duplicates to the left)."""
        earliest = index
        k = index - 1
        while k >= 0 and self._times[k] == self._times[index]:
            if not self._used[k]:
                earliest = k
            k -= 1
        return earliest


@dataclass
class AteResult:
    errors: np.ndarray  # per-pair translational error, meters
    rmse: float
    mean: float
    max: float
    alignment: Pose  # the first-pair alignment S = gt_1 * est_1^-1


def _rmse(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(values))))


def ate_runtime(pairs: list[AssociatedPair]) -> AteResult:
    """Runtime ATE: first-pair alignment, then translational residuals.

    S = Q1 * P1^-1 maps the estimate frame onto the ground-truth frame;
    error_i = || trans(Q_i) - trans(S * P_i) ||.
    """
    if not pairs:
        raise EmptyPairs("ATE needs at least one associated pair")
    alignment = pairs[0].gt.pose.compose(pairs[0].est.pose.inverse())
    errors = np.array(
        [
            float(np.linalg.norm(p.gt.pose.translation
                                 - alignment.compose(p.est.pose).translation))
            for p in pairs
        ]
    )
    return AteResult(
        errors=errors,
        rmse=_rmse(errors),
        mean=float(errors.mean()),
        max=float(errors.max()),
        alignment=alignment,
    )


@dataclass
class AlignedAteResult:
    errors: np.ndarray
    rmse: float
    transform: SimTransform  # maps estimate translations onto ground truth


def ate_aligned(pairs: list[AssociatedPair], mode: str = "rigid") -> AlignedAteResult:
    """Offline ATE after a least-squares alignment of the translation sets.

    mode "rigid" keeps scale 1; mode "similarity" also divides out a global
    scale, for estimators whose map scale is arbitrary.
    """
    if mode not in ("rigid", "similarity"):
        raise ValueError(f"unknown alignment mode {mode!r}")
    if len(pairs) < 3:
        raise InsufficientPairs("aligned ATE needs at least three pairs")
    est = np.array([p.est.pose.translation for p in pairs])
    gt = np.array([p.gt.pose.translation for p in pairs])
    transform = umeyama_align(est, gt, with_scale=(mode == "similarity"))
    errors = np.linalg.norm(gt - transform.apply(est), axis=1)
    return AlignedAteResult(errors=errors, rmse=_rmse(errors), transform=transform)


@dataclass
class RpeResult:
    trans_errors: np.ndarray  # meters
    rot_errors: np.ndarray  # radians
    trans_rmse: float
    rot_rmse: float
    delta: int


def rpe(
    pairs: list[AssociatedPair],
    delta: int = 1,
    time_delta: float | None = None,
) -> RpeResult:
    """Relative pose error over a fixed interval (drift measure).

    E_i = (Q_i^-1 Q_{i+d})^-1 (P_i^-1 P_{i+d}); the translational error is
    ||trans(E_i)|| and the rotational error the angle of rot(E_i). When
    time_delta is given, d is the pair-index step whose mean timestamp
    spacing comes closest to it.
    """
    if time_delta is not None:
        times = [p.est.timestamp.to_float_seconds() for p in pairs]
        if len(times) < 2:
            raise InsufficientPairs("RPE needs at least two pairs")
        spacing = (times[-1] - times[0]) / (len(times) - 1)
        delta = max(1, round(time_delta / spacing)) if spacing > 0 else 1
    if delta < 1:
        raise ValueError(f"delta must be >= 1, got {delta}")
    if len(pairs) < delta + 1:
        raise InsufficientPairs(f"RPE(delta={delta}) needs {delta + 1} pairs, got {len(pairs)}")
    trans_errors, rot_errors = [], []
    for i in range(len(pairs) - delta):
        q_rel = pairs[i].gt.pose.inverse().compose(pairs[i + delta].gt.pose)
        p_rel = pairs[i].est.pose.inverse().compose(pairs[i + delta].est.pose)
        err = q_rel.inverse().compose(p_rel)
        trans_errors.append(float(np.linalg.norm(err.translation)))
        rot_errors.append(err.rotation_angle())
    trans = np.array(trans_errors)
    rot = np.array(rot_errors)
    return RpeResult(
        trans_errors=trans,
        rot_errors=rot,
        trans_rmse=_rmse(trans),
        rot_rmse=_rmse(rot),
        delta=delta,
    )
