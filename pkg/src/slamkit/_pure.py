"""Pure NumPy/SciPy kernels, the fallback when the compiled core is absent."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree


class NearestNeighborIndex:
    """Exact 3-d nearest-neighbor index over a fixed target cloud."""

    def __init__(self, points: np.ndarray):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
            raise ValueError(f"expected non-empty (n, 3) points, got {pts.shape}")
        self.points = pts
        self._tree = cKDTree(pts)

    def query(self, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Nearest target for each query point: (distances, target indices)."""
        q = np.ascontiguousarray(queries, dtype=np.float64)
        dists, idx = self._tree.query(q.reshape(-1, 3), k=1)
        return np.asarray(dists, dtype=np.float64), np.asarray(idx, dtype=np.intp)


def unproject_depth(
    depth: np.ndarray,
    fx: float,
    fy: float,
    cx: float,
    cy: float,
    depth_scale: float,
    stride: int = 1,
) -> np.ndarray:
    """Back-project a raw u16 depth image into camera-frame points.

    Pixels are subsampled by `stride` in both directions; zero-depth pixels
    are dropped. Returns an (n, 3) float64 array.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    d = np.asarray(depth)[::stride, ::stride].astype(np.float64) * depth_scale
    h, w = d.shape
    us = np.arange(0, w, dtype=np.float64) * stride
    vs = np.arange(0, h, dtype=np.float64) * stride
    uu, vv = np.meshgrid(us, vs)
    valid = d > 0.0
    z = d[valid]
    x = (uu[valid] - cx) / fx * z
    y = (vv[valid] - cy) / fy * z
    return np.column_stack([x, y, z])


def sample_depth_points(
    depth: np.ndarray,
    fx: float,
    fy: float,
    cx: float,
    cy: float,
    depth_scale: float,
    us: np.ndarray,
    vs: np.ndarray,
) -> np.ndarray:
    """Back-project bilinearly interpolated depth at continuous pixel coords.

    Sampling at off-lattice positions is what keeps point-to-point ICP from
    locking onto the pixel grid. Samples whose 2x2 neighborhood contains a
    zero (invalid) depth are dropped. Returns an (n, 3) float64 array.
    """
    d = np.asarray(depth, dtype=np.float64)
    h, w = d.shape
    uf = np.asarray(us, dtype=np.float64).ravel()
    vf = np.asarray(vs, dtype=np.float64).ravel()
    if uf.shape != vf.shape:
        raise ValueError("us and vs must have the same length")
    if uf.size and (uf.min() < 0 or vf.min() < 0 or uf.max() >= w - 1 or vf.max() >= h - 1):
        raise ValueError("sample coordinates outside the bilinear-safe region")
    u0 = np.floor(uf).astype(np.intp)
    v0 = np.floor(vf).astype(np.intp)
    au = uf - u0
    av = vf - v0
    d00 = d[v0, u0]
    d01 = d[v0, u0 + 1]
    d10 = d[v0 + 1, u0]
    d11 = d[v0 + 1, u0 + 1]
    valid = (d00 > 0) & (d01 > 0) & (d10 > 0) & (d11 > 0)
    z = (
        d00 * (1.0 - au) * (1.0 - av)
        + d01 * au * (1.0 - av)
        + d10 * (1.0 - au) * av
        + d11 * au * av
    ) * depth_scale
    z = z[valid]
    x = (uf[valid] - cx) / fx * z
    y = (vf[valid] - cy) / fy * z
    return np.column_stack([x, y, z])
