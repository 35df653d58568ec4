"""Rigid-body and similarity transforms, timestamps, and point-set alignment.

Poses are stored as a unit quaternion plus a translation; 4x4 homogeneous
matrices appear only at serialization boundaries. Quaternions are kept
normalized after every operation and sign-canonicalized to w >= 0 so that
equal rotations compare equal.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

NANOS_PER_SECOND = 1_000_000_000
_U32_MAX = 2**32 - 1

# Renormalization guard used by Pose/SimTransform constructors.
_QUAT_NORM_TOL = 1e-9


class GeometryError(Exception):
    """Base class for transform and alignment failures."""


class SizeMismatch(GeometryError):
    """Point sets have different lengths or fewer than three points."""


class DegenerateGeometry(GeometryError):
    """Point sets do not span enough dimensions to align (covariance rank < 2)."""


@functools.total_ordering
@dataclass(frozen=True)
class Timestamp:
    """Unsigned (seconds, nanoseconds) instant, totally ordered."""

    seconds: int
    nanoseconds: int

    def __post_init__(self) -> None:
        if not 0 <= self.seconds <= _U32_MAX:
            raise ValueError(f"seconds out of u32 range: {self.seconds}")
        if not 0 <= self.nanoseconds < NANOS_PER_SECOND:
            raise ValueError(f"nanoseconds out of range: {self.nanoseconds}")

    @classmethod
    def from_decimal_string(cls, text: str) -> "Timestamp":
        """Parse a decimal-seconds string (e.g. "1305031102.175304") exactly.

        The fractional part is padded/truncated to nanoseconds without ever
        round-tripping through a float, so dataset timestamps survive
        conversion bit-exactly.
        """
        text = text.strip()
        if not text:
            raise ValueError("empty timestamp")
        whole, _, frac = text.partition(".")
        frac = (frac + "000000000")[:9] if frac else "0"
        return cls(int(whole) if whole else 0, int(frac))

    @classmethod
    def from_total_nanoseconds(cls, total_ns: int) -> "Timestamp":
        sec, ns = divmod(int(total_ns), NANOS_PER_SECOND)
        return cls(sec, ns)

    @classmethod
    def from_float_seconds(cls, seconds: float) -> "Timestamp":
        return cls.from_total_nanoseconds(round(seconds * NANOS_PER_SECOND))

    def total_nanoseconds(self) -> int:
        return self.seconds * NANOS_PER_SECOND + self.nanoseconds

    def to_float_seconds(self) -> float:
        return self.seconds + self.nanoseconds * 1e-9

    def __lt__(self, other: "Timestamp") -> bool:
        return (self.seconds, self.nanoseconds) < (other.seconds, other.nanoseconds)


def quat_normalized(q: np.ndarray) -> np.ndarray:
    """Normalize a (w, x, y, z) quaternion and canonicalize its sign.

    The sign convention is w >= 0; for w == 0 the first nonzero vector
    component is made positive, so q and -q map to one representative.
    """
    q = np.asarray(q, dtype=np.float64)
    norm = math.sqrt(float(np.dot(q, q)))
    if norm == 0.0:
        raise ValueError("zero-norm quaternion")
    q = q / norm
    if q[0] < 0.0 or (q[0] == 0.0 and _first_nonzero(q[1:]) < 0.0):
        q = -q
    return q


def _first_nonzero(v: np.ndarray) -> float:
    for x in v:
        if x != 0.0:
            return float(x)
    return 0.0


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a * b on (w, x, y, z) quaternions."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit quaternion."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(m: np.ndarray) -> np.ndarray:
    """Quaternion of a rotation matrix (Shepperd's method, branch on traces)."""
    m = np.asarray(m, dtype=np.float64)
    t = m[0, 0] + m[1, 1] + m[2, 2]
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] >= m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    return quat_normalized(q)


def quat_rotation_angle(q: np.ndarray) -> float:
    """Rotation angle in [0, pi] of a unit quaternion."""
    vec_norm = math.sqrt(float(q[1] ** 2 + q[2] ** 2 + q[3] ** 2))
    return 2.0 * math.atan2(vec_norm, abs(float(q[0])))


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    norm = float(np.linalg.norm(axis))
    if norm == 0.0:
        return np.array([1.0, 0.0, 0.0, 0.0])
    half = 0.5 * angle
    return quat_normalized(np.concatenate(([math.cos(half)], math.sin(half) * axis / norm)))


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid body transform: unit quaternion (w, x, y, z) plus translation in meters."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        q = quat_normalized(self.rotation)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        q.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValueError(f"expected 4x4 matrix, got {m.shape}")
        return cls(quat_from_matrix(m[:3, :3]), m[:3, 3])

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.rotation)
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "Pose") -> "Pose":
        """self applied after other: matrix(self) @ matrix(other)."""
        q = quat_multiply(self.rotation, other.rotation)
        t = self.translation + quat_to_matrix(self.rotation) @ other.translation
        return Pose(q, t)

    def inverse(self) -> "Pose":
        q_inv = quat_conjugate(self.rotation)
        t_inv = -(quat_to_matrix(q_inv) @ self.translation)
        return Pose(q_inv, t_inv)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform a 3-vector or an (n, 3) array of points."""
        pts = np.asarray(points, dtype=np.float64)
        rotated = pts @ quat_to_matrix(self.rotation).T
        return rotated + self.translation

    def rotation_angle(self) -> float:
        return quat_rotation_angle(self.rotation)

    def almost_equal(self, other: "Pose", tol: float = 1e-9) -> bool:
        return (
            float(np.max(np.abs(self.rotation - other.rotation))) <= tol
            and float(np.max(np.abs(self.translation - other.translation))) <= tol
        )

    def __repr__(self) -> str:
        q = ", ".join(f"{x:.6g}" for x in self.rotation)
        t = ", ".join(f"{x:.6g}" for x in self.translation)
        return f"Pose(q=[{q}], t=[{t}])"


@dataclass(frozen=True, eq=False)
class SimTransform:
    """Similarity transform: positive scale, unit quaternion, translation."""

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        if not self.scale > 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        q = quat_normalized(self.rotation)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        q.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "SimTransform":
        return cls(1.0, np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @classmethod
    def from_pose(cls, pose: Pose) -> "SimTransform":
        return cls(1.0, pose.rotation, pose.translation)

    def to_pose(self) -> Pose:
        """Rigid part; valid only when scale == 1."""
        if not math.isclose(self.scale, 1.0, rel_tol=0.0, abs_tol=1e-12):
            raise ValueError(f"not a rigid transform: scale={self.scale}")
        return Pose(self.rotation, self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return self.scale * (pts @ quat_to_matrix(self.rotation).T) + self.translation

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.scale * quat_to_matrix(self.rotation)
        m[:3, 3] = self.translation
        return m


def umeyama_align(src: np.ndarray, dst: np.ndarray, with_scale: bool = False) -> SimTransform:
    """Least-squares alignment T minimizing sum ||dst_i - T(src_i)||^2.

    Closed-form SVD solution with determinant correction, so the returned
    rotation is always proper (det +1) even for reflected inputs. With
    with_scale=False the scale is exactly 1.

    Raises SizeMismatch when the sets differ in length or have fewer than
    three points, DegenerateGeometry when the cross-covariance has rank < 2
    (e.g. collinear points).
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 3)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 3)
    n = src.shape[0]
    if n != dst.shape[0]:
        raise SizeMismatch(f"point counts differ: {n} vs {dst.shape[0]}")
    if n < 3:
        raise SizeMismatch(f"need at least 3 points, got {n}")

    mean_src = src.mean(axis=0)
    mean_dst = dst.mean(axis=0)
    dev_src = src - mean_src
    dev_dst = dst - mean_dst

    cov = dev_dst.T @ dev_src / n
    u, d, vt = np.linalg.svd(cov)
    if np.count_nonzero(d > max(d[0], 1.0) * 1e-12) < 2:
        raise DegenerateGeometry("covariance rank < 2; points are (nearly) collinear")

    s = np.eye(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0.0:
        s[2, 2] = -1.0
    rot = u @ s @ vt

    if with_scale:
        var_src = float((dev_src**2).sum()) / n
        scale = float(np.trace(np.diag(d) @ s)) / var_src
    else:
        scale = 1.0

    trans = mean_dst - scale * (rot @ mean_src)
    return SimTransform(scale, quat_from_matrix(rot), trans)
