"""Shared test utilities: seeded random transforms and brute-force oracles."""

from __future__ import annotations

import numpy as np

from slamkit.geometry import Pose, SimTransform, quat_normalized


def random_quaternion(rng: np.random.Generator) -> np.ndarray:
    return quat_normalized(rng.normal(size=4))


def random_pose(rng: np.random.Generator, trans_scale: float = 2.0) -> Pose:
    return Pose(random_quaternion(rng), rng.normal(scale=trans_scale, size=3))


def random_sim_transform(rng: np.random.Generator, with_scale: bool = True) -> SimTransform:
    scale = float(rng.uniform(0.3, 3.0)) if with_scale else 1.0
    return SimTransform(scale, random_quaternion(rng), rng.normal(scale=2.0, size=3))


def gauss_jordan_inverse(m: np.ndarray) -> np.ndarray:
    """Plain Gauss-Jordan elimination with partial pivoting (oracle for Pose.inverse)."""
    n = m.shape[0]
    aug = np.hstack([np.asarray(m, dtype=np.float64), np.eye(n)])
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        if aug[pivot, col] == 0.0:
            raise ZeroDivisionError("singular matrix")
        aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] /= aug[col, col]
        for row in range(n):
            if row != col:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, n:]


def rotation_about_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
