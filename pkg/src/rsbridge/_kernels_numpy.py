"""Vectorized pure-numpy implementations of the hot kernels.

Selected by ``rsbridge.accel`` when numba is unavailable or disabled via
``RSBRIDGE_DISABLE_NUMBA=1``. Each function has a numba twin in
``_kernels_numba`` with the same signature and semantics.

Kernel contracts
----------------
helix_min_distance(points, table_z, table_pts, cx, cy, r, om, iters)
    Distance from each point to the helix curve c(z) = (cx + r cos(om z),
    cy + r sin(om z), z), z restricted to the table's range. Coarse scan over
    the precomputed table followed by golden-section refinement of the
    bracketed minimum. Returns (distances, z_parameters).

csr_matvec(indptr, indices, data, x)
    y = A @ x for CSR storage.

ilu0_factorize(indptr, indices, data, diag_pos)
    IKJ ILU(0) on the fixed sparsity pattern; unit lower diagonal implied.
    Returns (lu_values, fail_row) with fail_row == -1 on success, else the
    row of the offending pivot.

ilu0_prepare(indptr, indices, lu, diag_pos)
    Backend-specific auxiliary data for the triangular solves (here: level
    schedules so the solves vectorize; the numba twin returns None).

ilu0_apply(indptr, indices, lu, diag_pos, aux, b)
    x = U^{-1} L^{-1} b on the factored values.

locate_points(points, origin, inv_h, dims, cell_indptr, cell_tets, tets, v0,
              inv_edge, tol)
    Containing-tetrahedron search through a uniform background grid. Returns
    (tet_indices, barycentric) with tet index -1 for misses; the first
    candidate in bucket order wins, matching the numba twin.
"""

from __future__ import annotations

import numpy as np

_INVPHI = 0.6180339887498949
_INVPHI2 = 0.3819660112501051

_SCAN_CHUNK = 4096


def _helix_dist2(px, py, pz, cx, cy, r, om, z):
    dx = px - cx - r * np.cos(om * z)
    dy = py - cy - r * np.sin(om * z)
    dz = pz - z
    return dx * dx + dy * dy + dz * dz


def helix_min_distance(points, table_z, table_pts, cx, cy, r, om, iters):
    n = points.shape[0]
    best_f = np.empty(n)
    best_i = np.empty(n, dtype=np.int64)
    tx = table_pts[:, 0]
    ty = table_pts[:, 1]
    tz = table_pts[:, 2]
    for lo in range(0, n, _SCAN_CHUNK):
        hi = min(lo + _SCAN_CHUNK, n)
        d2 = (points[lo:hi, 0, None] - tx) ** 2
        d2 += (points[lo:hi, 1, None] - ty) ** 2
        d2 += (points[lo:hi, 2, None] - tz) ** 2
        idx = np.argmin(d2, axis=1)
        best_i[lo:hi] = idx
        best_f[lo:hi] = d2[np.arange(hi - lo), idx]

    ns = table_z.shape[0]
    a = table_z[np.maximum(best_i - 1, 0)]
    b = table_z[np.minimum(best_i + 1, ns - 1)]
    px, py, pz = points[:, 0], points[:, 1], points[:, 2]

    h = b - a
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    fc = _helix_dist2(px, py, pz, cx, cy, r, om, c)
    fd = _helix_dist2(px, py, pz, cx, cy, r, om, d)
    for _ in range(int(iters)):
        sel = fc < fd
        b = np.where(sel, d, b)
        a = np.where(sel, a, c)
        h = b - a
        probe = np.where(sel, a + _INVPHI2 * h, a + _INVPHI * h)
        fp = _helix_dist2(px, py, pz, cx, cy, r, om, probe)
        c_new = np.where(sel, probe, d)
        fc_new = np.where(sel, fp, fd)
        d_new = np.where(sel, c, probe)
        fd_new = np.where(sel, fc, fp)
        c, d, fc, fd = c_new, d_new, fc_new, fd_new

    z_ref = np.where(fc < fd, c, d)
    f_ref = np.minimum(fc, fd)
    keep_scan = best_f < f_ref
    z_out = np.where(keep_scan, table_z[best_i], z_ref)
    f_out = np.where(keep_scan, best_f, f_ref)
    return np.sqrt(f_out), z_out


def csr_matvec(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    prod = data * x[indices]
    out = np.zeros(n)
    nonempty = np.flatnonzero(indptr[1:] > indptr[:-1])
    if nonempty.size:
        out[nonempty] = np.add.reduceat(prod, indptr[nonempty])
    return out


def ilu0_factorize(indptr, indices, data, diag_pos):
    n = indptr.shape[0] - 1
    lu = data.copy()
    for i in range(n):
        row_lo = indptr[i]
        row_hi = indptr[i + 1]
        row_cols = indices[row_lo:row_hi]
        for kk in range(row_lo, diag_pos[i]):
            k = indices[kk]
            piv = lu[diag_pos[k]]
            if abs(piv) < 1e-300:
                return lu, k
            factor = lu[kk] / piv
            lu[kk] = factor
            k_lo = diag_pos[k] + 1
            k_hi = indptr[k + 1]
            if k_lo == k_hi:
                continue
            upd_cols = indices[k_lo:k_hi]
            pos = np.searchsorted(row_cols, upd_cols)
            ok = pos < row_cols.shape[0]
            pos_ok = pos[ok]
            hit = row_cols[pos_ok] == upd_cols[ok]
            tgt = row_lo + pos_ok[hit]
            src = np.flatnonzero(ok)[hit] + k_lo
            lu[tgt] -= factor * lu[src]
    bad = np.flatnonzero(np.abs(lu[diag_pos]) < 1e-300)
    if bad.size:
        return lu, int(bad[0])
    return lu, -1


def _ragged_gather(starts, counts):
    """Concatenated index ranges [starts[i], starts[i]+counts[i])."""
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
    return np.repeat(starts - offsets, counts) + np.arange(total)


def _level_schedule(starts, stops, deps_of):
    """Dependency levels: level[i] = 1 + max(level of deps), 0 if none."""
    n = starts.shape[0]
    level = np.zeros(n, dtype=np.int64)
    for i in range(n):
        lo, hi = starts[i], stops[i]
        if hi > lo:
            level[i] = level[deps_of[lo:hi]].max() + 1
    return level


def _pack_triangle(indices, lu, starts, stops, level):
    """Group rows by level; pack their entries contiguously for reduceat."""
    n = starts.shape[0]
    order = np.argsort(level, kind="stable")
    counts = (stops - starts)[order]
    ent = _ragged_gather(starts[order], counts)
    cols = indices[ent]
    vals = lu[ent]
    lvl_sorted = level[order]
    n_levels = int(level.max()) + 1 if n else 0
    # row ranges and entry ranges per level
    row_ptr = np.searchsorted(lvl_sorted, np.arange(n_levels + 1))
    ent_end = np.cumsum(counts)
    ent_start = np.concatenate(([0], ent_end[:-1]))
    groups = []
    for lv in range(n_levels):
        r0, r1 = row_ptr[lv], row_ptr[lv + 1]
        if r0 == r1:
            continue
        rows = order[r0:r1]
        e0 = ent_start[r0]
        e1 = ent_end[r1 - 1] if r1 > r0 else e0
        seg = ent_start[r0:r1] - e0
        groups.append((lv, rows, int(e0), int(e1), seg))
    return groups, cols, vals


def ilu0_prepare(indptr, indices, lu, diag_pos):
    n = indptr.shape[0] - 1
    low_starts = indptr[:-1]
    low_stops = diag_pos
    low_level = _level_schedule(low_starts, low_stops, indices)
    low_groups, low_cols, low_vals = _pack_triangle(
        indices, lu, low_starts, low_stops, low_level
    )
    up_starts = diag_pos + 1
    up_stops = indptr[1:]
    # upper solve runs bottom-up; levels measured on the reversed ordering
    up_level = np.zeros(n, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        lo, hi = up_starts[i], up_stops[i]
        if hi > lo:
            up_level[i] = up_level[indices[lo:hi]].max() + 1
    up_groups, up_cols, up_vals = _pack_triangle(indices, lu, up_starts, up_stops, up_level)
    diag = lu[diag_pos]
    return (low_groups, low_cols, low_vals, up_groups, up_cols, up_vals, diag)


def ilu0_apply(indptr, indices, lu, diag_pos, aux, b):
    low_groups, low_cols, low_vals, up_groups, up_cols, up_vals, diag = aux
    y = b.copy()
    for lv, rows, e0, e1, seg in low_groups:
        if lv == 0:
            continue
        prod = low_vals[e0:e1] * y[low_cols[e0:e1]]
        y[rows] = b[rows] - np.add.reduceat(prod, seg)
    x = y / diag
    for lv, rows, e0, e1, seg in up_groups:
        if lv == 0:
            continue
        prod = up_vals[e0:e1] * x[up_cols[e0:e1]]
        x[rows] = (y[rows] - np.add.reduceat(prod, seg)) / diag[rows]
    return x


def locate_points(points, origin, inv_h, dims, cell_indptr, cell_tets, tets, v0, inv_edge, tol):
    n = points.shape[0]
    tet_idx = np.full(n, -1, dtype=np.int64)
    bary = np.zeros((n, 4))
    ij = np.floor((points - origin) * inv_h).astype(np.int64)
    in_grid = np.all((ij >= 0) & (ij < dims), axis=1)
    if not in_grid.any():
        return tet_idx, bary
    cells = ij[:, 0] + dims[0] * (ij[:, 1] + dims[1] * ij[:, 2])
    cells = np.where(in_grid, cells, 0)
    counts = np.where(in_grid, cell_indptr[cells + 1] - cell_indptr[cells], 0)
    total = int(counts.sum())
    if total == 0:
        return tet_idx, bary
    pt_of = np.repeat(np.arange(n), counts)
    flat = _ragged_gather(cell_indptr[cells], counts)
    cand = cell_tets[flat]
    diff = points[pt_of] - v0[cand]
    xi = np.einsum("pij,pj->pi", inv_edge[cand], diff)
    lam0 = 1.0 - xi.sum(axis=1)
    inside = (xi >= -tol).all(axis=1) & (lam0 >= -tol)
    hit = np.flatnonzero(inside)
    if hit.size:
        # first candidate per point, in the same bucket order as the loop twin
        pts_hit, first = np.unique(pt_of[hit], return_index=True)
        sel = hit[first]
        tet_idx[pts_hit] = cand[sel]
        bary[pts_hit, 0] = lam0[sel]
        bary[pts_hit, 1:] = xi[sel]
    return tet_idx, bary
