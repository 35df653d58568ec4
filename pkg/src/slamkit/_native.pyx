# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: exact 3-d nearest-neighbor index and depth unprojection."""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, sqrt

cnp.import_array()

ctypedef cnp.intp_t ip_t

DEF QUERY_STACK = 512


cdef void _quickselect(ip_t[::1] idx, double[:, ::1] pts, int axis,
                       Py_ssize_t left, Py_ssize_t right, Py_ssize_t k) noexcept nogil:
    """Hoare partial selection: idx[k] becomes the k-th element by pts[., axis]."""
    cdef Py_ssize_t i, j
    cdef double pivot
    cdef ip_t tmp
    while right > left:
        pivot = pts[idx[(left + right) // 2], axis]
        i = left
        j = right
        while i <= j:
            while pts[idx[i], axis] < pivot:
                i += 1
            while pts[idx[j], axis] > pivot:
                j -= 1
            if i <= j:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                i += 1
                j -= 1
        if k <= j:
            right = j
        elif k >= i:
            left = i
        else:
            return


cdef int _widest_axis(ip_t[::1] idx, double[:, ::1] pts,
                      Py_ssize_t start, Py_ssize_t count) noexcept nogil:
    cdef double lo[3]
    cdef double hi[3]
    cdef double v, spread, best_spread
    cdef Py_ssize_t t
    cdef int a, best
    for a in range(3):
        lo[a] = pts[idx[start], a]
        hi[a] = lo[a]
    for t in range(start + 1, start + count):
        for a in range(3):
            v = pts[idx[t], a]
            if v < lo[a]:
                lo[a] = v
            elif v > hi[a]:
                hi[a] = v
    best = 0
    best_spread = hi[0] - lo[0]
    for a in range(1, 3):
        spread = hi[a] - lo[a]
        if spread > best_spread:
            best_spread = spread
            best = a
    return best


cdef class NearestNeighborIndex:
    """Exact 3-d nearest-neighbor index: median-split kd-tree over a fixed cloud."""

    cdef double[:, ::1] pts
    cdef ip_t[::1] idx
    cdef ip_t[::1] left
    cdef ip_t[::1] right
    cdef int[::1] axis
    cdef double[::1] split
    cdef ip_t[::1] start
    cdef ip_t[::1] count
    cdef Py_ssize_t leaf_size
    cdef object _points_arr

    def __init__(self, points, leaf_size=16):
        pts_arr = np.ascontiguousarray(points, dtype=np.float64)
        if pts_arr.ndim != 2 or pts_arr.shape[1] != 3 or pts_arr.shape[0] == 0:
            raise ValueError(f"expected non-empty (n, 3) points, got {pts_arr.shape}")
        self._points_arr = pts_arr
        self.pts = pts_arr
        self.leaf_size = max(1, int(leaf_size))

        cdef Py_ssize_t n = pts_arr.shape[0]
        cdef Py_ssize_t cap = 2 * n + 2
        idx_arr = np.arange(n, dtype=np.intp)
        self.idx = idx_arr
        left_arr = np.full(cap, -1, dtype=np.intp)
        right_arr = np.full(cap, -1, dtype=np.intp)
        self.left = left_arr
        self.right = right_arr
        self.axis = np.zeros(cap, dtype=np.intc)
        self.split = np.zeros(cap, dtype=np.float64)
        self.start = np.zeros(cap, dtype=np.intp)
        self.count = np.zeros(cap, dtype=np.intp)
        self._build(n)

    cdef void _build(self, Py_ssize_t n):
        cdef Py_ssize_t n_nodes = 1
        cdef Py_ssize_t node, s, c, m
        cdef int ax
        # (node, start, count) work list; partitioning runs without the GIL cost
        stack = [(0, 0, n)]
        while stack:
            node, s, c = stack.pop()
            self.start[node] = s
            self.count[node] = c
            if c <= self.leaf_size:
                self.left[node] = -1
                continue
            ax = _widest_axis(self.idx, self.pts, s, c)
            m = c // 2
            _quickselect(self.idx, self.pts, ax, s, s + c - 1, s + m)
            self.axis[node] = ax
            self.split[node] = self.pts[self.idx[s + m], ax]
            self.left[node] = n_nodes
            self.right[node] = n_nodes + 1
            stack.append((n_nodes, s, m))
            stack.append((n_nodes + 1, s + m, c - m))
            n_nodes += 2

    @property
    def points(self):
        return self._points_arr

    def query(self, queries):
        """Nearest target for each query point: (distances, target indices)."""
        q = np.ascontiguousarray(queries, dtype=np.float64).reshape(-1, 3)
        cdef double[:, ::1] qv = q
        cdef Py_ssize_t nq = q.shape[0]
        dists = np.empty(nq, dtype=np.float64)
        index = np.empty(nq, dtype=np.intp)
        cdef double[::1] dv = dists
        cdef ip_t[::1] iv = index
        cdef Py_ssize_t i
        with nogil:
            for i in range(nq):
                self._query_one(qv[i, 0], qv[i, 1], qv[i, 2], &dv[i], &iv[i])
        return dists, index

    cdef void _query_one(self, double qx, double qy, double qz,
                         double* out_d, ip_t* out_i) noexcept nogil:
        cdef ip_t node_stack[QUERY_STACK]
        cdef double bound_stack[QUERY_STACK]
        cdef int top = 1
        cdef ip_t node, near, far, j
        cdef Py_ssize_t t
        cdef int ax
        cdef double bound, sp, qa, diff, fb, dx, dy, dz, d2
        cdef double best_d2 = INFINITY
        cdef ip_t best_i = -1
        node_stack[0] = 0
        bound_stack[0] = 0.0
        while top > 0:
            top -= 1
            node = node_stack[top]
            bound = bound_stack[top]
            if bound >= best_d2:
                continue
            if self.left[node] < 0:
                for t in range(self.start[node], self.start[node] + self.count[node]):
                    j = self.idx[t]
                    dx = self.pts[j, 0] - qx
                    dy = self.pts[j, 1] - qy
                    dz = self.pts[j, 2] - qz
                    d2 = dx * dx + dy * dy + dz * dz
                    if d2 < best_d2:
                        best_d2 = d2
                        best_i = j
            else:
                ax = self.axis[node]
                sp = self.split[node]
                qa = qx if ax == 0 else (qy if ax == 1 else qz)
                diff = qa - sp
                if diff < 0:
                    near = self.left[node]
                    far = self.right[node]
                else:
                    near = self.right[node]
                    far = self.left[node]
                fb = diff * diff
                if fb < best_d2:
                    node_stack[top] = far
                    bound_stack[top] = fb
                    top += 1
                node_stack[top] = near
                bound_stack[top] = bound
                top += 1
        out_d[0] = sqrt(best_d2)
        out_i[0] = best_i


def unproject_depth(depth, double fx, double fy, double cx, double cy,
                    double depth_scale, Py_ssize_t stride=1):
    """Back-project a raw u16 depth image into camera-frame points.

    Pixels are subsampled by `stride` in both directions; zero-depth pixels
    are dropped. Returns an (n, 3) float64 array.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    d = np.ascontiguousarray(depth, dtype=np.uint16)
    cdef const cnp.uint16_t[:, ::1] dv = d
    cdef Py_ssize_t h = dv.shape[0]
    cdef Py_ssize_t w = dv.shape[1]
    out = np.empty((((h + stride - 1) // stride) * ((w + stride - 1) // stride), 3),
                   dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t u, v = 0, k = 0
    cdef double z
    with nogil:
        while v < h:
            u = 0
            while u < w:
                if dv[v, u] != 0:
                    z = dv[v, u] * depth_scale
                    ov[k, 0] = (u - cx) / fx * z
                    ov[k, 1] = (v - cy) / fy * z
                    ov[k, 2] = z
                    k += 1
                u += stride
            v += stride
    return out[:k]


def sample_depth_points(depth, double fx, double fy, double cx, double cy,
                        double depth_scale, us, vs):
    """Back-project bilinearly interpolated depth at continuous pixel coords.

    Sampling at off-lattice positions is what keeps point-to-point ICP from
    locking onto the pixel grid. Samples whose 2x2 neighborhood contains a
    zero (invalid) depth are dropped. Returns an (n, 3) float64 array.
    """
    d = np.ascontiguousarray(depth, dtype=np.uint16)
    uf = np.ascontiguousarray(us, dtype=np.float64).ravel()
    vf = np.ascontiguousarray(vs, dtype=np.float64).ravel()
    if uf.shape[0] != vf.shape[0]:
        raise ValueError("us and vs must have the same length")
    cdef const cnp.uint16_t[:, ::1] dv = d
    cdef const double[::1] uv = uf
    cdef const double[::1] vv = vf
    cdef Py_ssize_t h = dv.shape[0]
    cdef Py_ssize_t w = dv.shape[1]
    cdef Py_ssize_t n = uv.shape[0]
    if n and (uf.min() < 0 or vf.min() < 0 or uf.max() >= w - 1 or vf.max() >= h - 1):
        raise ValueError("sample coordinates outside the bilinear-safe region")
    out = np.empty((n, 3), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, k = 0, u0, v0
    cdef double au, av, z, d00, d01, d10, d11
    with nogil:
        for i in range(n):
            u0 = <Py_ssize_t> uv[i]
            v0 = <Py_ssize_t> vv[i]
            d00 = dv[v0, u0]
            d01 = dv[v0, u0 + 1]
            d10 = dv[v0 + 1, u0]
            d11 = dv[v0 + 1, u0 + 1]
            if d00 <= 0 or d01 <= 0 or d10 <= 0 or d11 <= 0:
                continue
            au = uv[i] - u0
            av = vv[i] - v0
            z = (d00 * (1.0 - au) * (1.0 - av)
                 + d01 * au * (1.0 - av)
                 + d10 * (1.0 - au) * av
                 + d11 * au * av) * depth_scale
            ov[k, 0] = (uv[i] - cx) / fx * z
            ov[k, 1] = (vv[i] - cy) / fy * z
            ov[k, 2] = z
            k += 1
    return out[:k]
