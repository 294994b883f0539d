"""Numba implementations of the hot kernels.

Mirrors the public functions of ``_kernels_numpy``; see that module for the
contracts. Wrappers stay plain Python so signatures and error handling match
the fallback path exactly.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_INVPHI = 0.6180339887498949
_INVPHI2 = 0.3819660112501051


@njit(cache=True)
def _helix_dist2(px, py, pz, cx, cy, r, om, z):
    dx = px - cx - r * np.cos(om * z)
    dy = py - cy - r * np.sin(om * z)
    dz = pz - z
    return dx * dx + dy * dy + dz * dz


@njit(cache=True)
def _helix_scan(points, table_z, table_pts, cx, cy, r, om, iters):
    n = points.shape[0]
    ns = table_z.shape[0]
    out_d = np.empty(n)
    out_z = np.empty(n)
    for p in range(n):
        px = points[p, 0]
        py = points[p, 1]
        pz = points[p, 2]
        best = 1e300
        bi = 0
        for s in range(ns):
            dx = px - table_pts[s, 0]
            dy = py - table_pts[s, 1]
            dz = pz - table_pts[s, 2]
            f = dx * dx + dy * dy + dz * dz
            if f < best:
                best = f
                bi = s
        a = table_z[bi - 1] if bi > 0 else table_z[0]
        b = table_z[bi + 1] if bi < ns - 1 else table_z[ns - 1]
        # golden-section refinement of the bracketed minimum
        h = b - a
        c = a + _INVPHI2 * h
        d = a + _INVPHI * h
        fc = _helix_dist2(px, py, pz, cx, cy, r, om, c)
        fd = _helix_dist2(px, py, pz, cx, cy, r, om, d)
        for _ in range(iters):
            if fc < fd:
                b = d
                d = c
                fd = fc
                h = b - a
                c = a + _INVPHI2 * h
                fc = _helix_dist2(px, py, pz, cx, cy, r, om, c)
            else:
                a = c
                c = d
                fc = fd
                h = b - a
                d = a + _INVPHI * h
                fd = _helix_dist2(px, py, pz, cx, cy, r, om, d)
        if fc < fd:
            zb, fb = c, fc
        else:
            zb, fb = d, fd
        if best < fb:
            zb, fb = table_z[bi], best
        out_d[p] = np.sqrt(fb)
        out_z[p] = zb
    return out_d, out_z


def helix_min_distance(points, table_z, table_pts, cx, cy, r, om, iters):
    return _helix_scan(points, table_z, table_pts, cx, cy, r, om, iters)


@njit(cache=True)
def _csr_matvec(indptr, indices, data, x, out):
    n = indptr.shape[0] - 1
    for i in range(n):
        s = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            s += data[p] * x[indices[p]]
        out[i] = s


def csr_matvec(indptr, indices, data, x):
    out = np.empty(indptr.shape[0] - 1)
    _csr_matvec(indptr, indices, data, x, out)
    return out


@njit(cache=True)
def _ilu0_factorize(indptr, indices, data, diag_pos):
    n = indptr.shape[0] - 1
    lu = data.copy()
    for i in range(n):
        for kk in range(indptr[i], diag_pos[i]):
            k = indices[kk]
            piv = lu[diag_pos[k]]
            if abs(piv) < 1e-300:
                return lu, k
            factor = lu[kk] / piv
            lu[kk] = factor
            jj = kk + 1
            for pp in range(diag_pos[k] + 1, indptr[k + 1]):
                j = indices[pp]
                while jj < indptr[i + 1] and indices[jj] < j:
                    jj += 1
                if jj == indptr[i + 1]:
                    break
                if indices[jj] == j:
                    lu[jj] -= factor * lu[pp]
    for i in range(n):
        if abs(lu[diag_pos[i]]) < 1e-300:
            return lu, i
    return lu, -1


def ilu0_factorize(indptr, indices, data, diag_pos):
    return _ilu0_factorize(indptr, indices, data, diag_pos)


def ilu0_prepare(indptr, indices, lu, diag_pos):
    # sequential triangular solves need no auxiliary structure
    return None


@njit(cache=True)
def _ilu0_apply(indptr, indices, lu, diag_pos, b):
    n = b.shape[0]
    y = np.empty_like(b)
    for i in range(n):
        s = b[i]
        for p in range(indptr[i], diag_pos[i]):
            s -= lu[p] * y[indices[p]]
        y[i] = s
    x = np.empty_like(b)
    for i in range(n - 1, -1, -1):
        s = y[i]
        for p in range(diag_pos[i] + 1, indptr[i + 1]):
            s -= lu[p] * x[indices[p]]
        x[i] = s / lu[diag_pos[i]]
    return x


def ilu0_apply(indptr, indices, lu, diag_pos, aux, b):
    return _ilu0_apply(indptr, indices, lu, diag_pos, b)


@njit(cache=True)
def _locate(points, origin, inv_h, dims, cell_indptr, cell_tets, tets, v0, inv_edge, tol):
    n = points.shape[0]
    tet_idx = np.full(n, -1, dtype=np.int64)
    bary = np.zeros((n, 4))
    for p in range(n):
        ix = int(np.floor((points[p, 0] - origin[0]) * inv_h))
        iy = int(np.floor((points[p, 1] - origin[1]) * inv_h))
        iz = int(np.floor((points[p, 2] - origin[2]) * inv_h))
        if ix < 0 or iy < 0 or iz < 0 or ix >= dims[0] or iy >= dims[1] or iz >= dims[2]:
            continue
        cell = ix + dims[0] * (iy + dims[1] * iz)
        for q in range(cell_indptr[cell], cell_indptr[cell + 1]):
            t = cell_tets[q]
            dx = points[p, 0] - v0[t, 0]
            dy = points[p, 1] - v0[t, 1]
            dz = points[p, 2] - v0[t, 2]
            x1 = inv_edge[t, 0, 0] * dx + inv_edge[t, 0, 1] * dy + inv_edge[t, 0, 2] * dz
            x2 = inv_edge[t, 1, 0] * dx + inv_edge[t, 1, 1] * dy + inv_edge[t, 1, 2] * dz
            x3 = inv_edge[t, 2, 0] * dx + inv_edge[t, 2, 1] * dy + inv_edge[t, 2, 2] * dz
            l0 = 1.0 - x1 - x2 - x3
            if x1 >= -tol and x2 >= -tol and x3 >= -tol and l0 >= -tol:
                tet_idx[p] = t
                bary[p, 0] = l0
                bary[p, 1] = x1
                bary[p, 2] = x2
                bary[p, 3] = x3
                break
    return tet_idx, bary


def locate_points(points, origin, inv_h, dims, cell_indptr, cell_tets, tets, v0, inv_edge, tol):
    return _locate(
        points, origin, inv_h, dims, cell_indptr, cell_tets, tets, v0, inv_edge, tol
    )
