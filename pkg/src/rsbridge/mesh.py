"""Masked tetrahedral meshing of an implicit domain and P1 element queries.

The unit cube is split into resolution^3 cells, each cell into six
tetrahedra sharing the cell's main diagonal (Kuhn split), which is
automatically conforming across cells. A tet is kept iff its centroid lies
inside the signed-distance field; the staircased boundary that results is
the reflecting wall. Orphan slivers are removed by keeping only the largest
vertex-connected component.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from rsbridge.accel import kernels
from rsbridge.errors import MeshError

_MIN_TET_VOLUME = 1e-14

#: barycentric slack when testing point containment
_LOCATE_TOL = 1e-12


def _kuhn_corner_ids() -> np.ndarray:
    """Six tets per cell as corner bitmasks (bit a set = offset along axis a)."""
    rows = []
    for perm in itertools.permutations(range(3)):
        acc = 0
        row = [0]
        for axis in perm:
            acc |= 1 << axis
            row.append(acc)
        rows.append(row)
    return np.array(rows, dtype=np.int64)


_KUHN = _kuhn_corner_ids()
_CORNER_OFFSETS = np.array([[c & 1, (c >> 1) & 1, (c >> 2) & 1] for c in range(8)], dtype=float)
_FACE_LOCAL = np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])


@dataclass
class ElementGeometry:
    volume: float
    basis_gradients: np.ndarray  # (4, 3), gradients of the barycentric basis


class SimplexMesh:
    """Tetrahedral mesh with per-element P1 geometry and point location.

    Immutable after construction; element queries are safe to run
    concurrently.
    """

    def __init__(self, vertices: np.ndarray, tets: np.ndarray):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        tets = np.ascontiguousarray(tets, dtype=np.int64)
        if tets.size and (tets.min() < 0 or tets.max() >= len(self.vertices)):
            raise MeshError("tet vertex index out of range")
        self.tets = _fix_orientation(self.vertices, tets)
        self.volumes, self.basis_gradients = _element_geometry_arrays(self.vertices, self.tets)
        if np.any(self.volumes < _MIN_TET_VOLUME):
            raise MeshError("degenerate tetrahedron (volume below 1e-14)")
        self.boundary_faces, self.boundary_normals, self.boundary_areas = _extract_boundary(
            self.vertices, self.tets
        )

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def element_count(self) -> int:
        return len(self.tets)

    @cached_property
    def _inv_edge(self) -> np.ndarray:
        # rows i of B^-1 are the gradients of barycentric coords 1..3
        return self.basis_gradients[:, 1:, :]

    @cached_property
    def _locator(self):
        return _build_locator(self)

    def locate_batch(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Containing tet per point (-1 for none) and barycentric coords."""
        origin, inv_h, dims, indptr, cell_tets = self._locator
        pts = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
        return kernels.locate_points(
            pts,
            origin,
            inv_h,
            dims,
            indptr,
            cell_tets,
            self.tets,
            self.vertices[self.tets[:, 0]],
            self._inv_edge,
            _LOCATE_TOL,
        )

    def interpolate_batch(self, values: np.ndarray, points: np.ndarray):
        """P1 interpolation at points; returns (values, inside_mask)."""
        tet_idx, bary = self.locate_batch(points)
        inside = tet_idx >= 0
        out = np.zeros(len(bary))
        if inside.any():
            nodes = self.tets[tet_idx[inside]]
            out[inside] = np.einsum("pa,pa->p", values[nodes], bary[inside])
        return out, inside


def generate_masked_mesh(resolution: int, sdf) -> SimplexMesh:
    """Mesh the subset of the unit cube where sdf < 0 at tet centroids."""
    n = int(resolution)
    if n < 1:
        raise MeshError("resolution must be at least 1")
    h = 1.0 / n
    n1 = n + 1

    ii, jj, kk = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    origins = np.stack([ii, jj, kk], axis=-1).reshape(-1, 3).astype(float) * h

    # vertex ids of the 8 cell corners, x fastest
    base = (ii + n1 * (jj + n1 * kk)).reshape(-1)
    corner_shift = (
        _CORNER_OFFSETS[:, 0] + n1 * (_CORNER_OFFSETS[:, 1] + n1 * _CORNER_OFFSETS[:, 2])
    ).astype(np.int64)
    corner_vids = base[:, None] + corner_shift[None, :]

    tets = corner_vids[:, _KUHN].reshape(-1, 4)

    # centroid of each tet as cell origin + fixed per-type offset
    type_centroids = _CORNER_OFFSETS[_KUHN].mean(axis=1) * h
    centroids = (origins[:, None, :] + type_centroids[None, :, :]).reshape(-1, 3)
    keep = np.asarray(sdf(centroids)) < 0.0
    tets = tets[keep]
    if len(tets) == 0:
        raise MeshError(
            f"masking removed every element: resolution {n} is too coarse for this geometry"
        )

    tets = _largest_component(tets)

    used = np.unique(tets)
    remap = np.full(n1**3, -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    tets = remap[tets]

    gi = used % n1
    gj = (used // n1) % n1
    gk = used // (n1 * n1)
    vertices = np.stack([gi, gj, gk], axis=-1).astype(float) * h

    return SimplexMesh(vertices, tets)


def element_geometry(mesh: SimplexMesh, e: int) -> ElementGeometry:
    """Volume and basis gradients of one element."""
    vol = float(mesh.volumes[e])
    if vol < _MIN_TET_VOLUME:
        raise MeshError(f"degenerate tetrahedron {e}")
    return ElementGeometry(volume=vol, basis_gradients=mesh.basis_gradients[e].copy())


def locate_element(mesh: SimplexMesh, x) -> int | None:
    """Index of the element containing x, or None."""
    tet_idx, _ = mesh.locate_batch(np.atleast_2d(np.asarray(x, dtype=float)))
    return int(tet_idx[0]) if tet_idx[0] >= 0 else None


def interpolate(mesh: SimplexMesh, values: np.ndarray, x) -> float | None:
    """Nodal field linearly interpolated at x, or None outside the mesh."""
    vals, inside = mesh.interpolate_batch(values, np.atleast_2d(np.asarray(x, dtype=float)))
    return float(vals[0]) if inside[0] else None


def _fix_orientation(vertices, tets):
    if len(tets) == 0:
        raise MeshError("mesh has no elements")
    edge = vertices[tets[:, 1:]] - vertices[tets[:, :1]]
    det = np.linalg.det(edge)
    flip = det < 0
    if flip.any():
        tets = tets.copy()
        tets[flip, 2], tets[flip, 3] = tets[flip, 3].copy(), tets[flip, 2].copy()
    return tets


def _element_geometry_arrays(vertices, tets):
    # columns of B are the edge vectors from local vertex 0
    edge = np.transpose(vertices[tets[:, 1:]] - vertices[tets[:, :1]], (0, 2, 1))
    vol = np.linalg.det(edge) / 6.0
    inv = np.linalg.inv(edge)
    grads = np.empty((len(tets), 4, 3))
    grads[:, 1:, :] = inv
    grads[:, 0, :] = -inv.sum(axis=1)
    return vol, grads


def _largest_component(tets):
    used = np.unique(tets)
    nv = used.max() + 1
    # a spanning star per tet suffices for connectivity
    rows = np.repeat(tets[:, 0], 3)
    cols = tets[:, 1:].reshape(-1)
    ones = np.ones(len(rows), dtype=np.int8)
    adj = sparse.coo_matrix((ones, (rows, cols)), shape=(nv, nv))
    n_comp, labels = connected_components(adj, directed=False)
    if n_comp > 1:
        sizes = np.bincount(labels[used], minlength=n_comp)
        tets = tets[labels[tets[:, 0]] == np.argmax(sizes)]
    return tets


def _extract_boundary(vertices, tets):
    faces = tets[:, _FACE_LOCAL].reshape(-1, 3)
    keys = np.sort(faces, axis=1)
    nv = len(vertices)
    enc = (keys[:, 0] * nv + keys[:, 1]) * nv + keys[:, 2]
    order = np.argsort(enc, kind="stable")
    enc_sorted = enc[order]
    uniq_start = np.concatenate(([True], enc_sorted[1:] != enc_sorted[:-1]))
    counts = np.diff(np.flatnonzero(np.concatenate((uniq_start, [True]))))
    if counts.max(initial=1) > 2:
        raise MeshError("non-conforming mesh: face shared by more than two elements")
    first_pos = order[np.flatnonzero(uniq_start)]
    boundary_pos = first_pos[counts == 1]

    tri = faces[boundary_pos]
    owner_tet = boundary_pos // 4
    opp_local = boundary_pos % 4
    opp = tets[owner_tet, opp_local]

    p0 = vertices[tri[:, 0]]
    n = np.cross(vertices[tri[:, 1]] - p0, vertices[tri[:, 2]] - p0)
    inward = np.einsum("fd,fd->f", n, vertices[opp] - p0) > 0
    n[inward] *= -1.0
    area = 0.5 * np.linalg.norm(n, axis=1)
    unit = n / np.linalg.norm(n, axis=1, keepdims=True)
    return tri, unit, area


def _build_locator(mesh: SimplexMesh):
    verts = mesh.vertices
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    pad = 1e-9 * max(1.0, float(np.max(hi - lo)))
    lo = lo - pad
    hi = hi + pad
    nb = int(np.clip(round(len(mesh.tets) ** (1.0 / 3.0)), 1, 128))
    h = float(np.max(hi - lo)) / nb
    dims = np.maximum(np.ceil((hi - lo) / h).astype(np.int64), 1)

    tv = verts[mesh.tets]
    tmin = tv.min(axis=1)
    tmax = tv.max(axis=1)
    c_lo = np.clip(np.floor((tmin - lo) / h).astype(np.int64), 0, dims - 1)
    c_hi = np.clip(np.floor((tmax - lo) / h).astype(np.int64), 0, dims - 1)
    span = c_hi - c_lo + 1

    cell_ids = []
    tet_ids = []
    base_ids = np.arange(len(mesh.tets))
    for dx in range(int(span[:, 0].max())):
        for dy in range(int(span[:, 1].max())):
            for dz in range(int(span[:, 2].max())):
                m = (dx < span[:, 0]) & (dy < span[:, 1]) & (dz < span[:, 2])
                if not m.any():
                    continue
                cx = c_lo[m, 0] + dx
                cy = c_lo[m, 1] + dy
                cz = c_lo[m, 2] + dz
                cell_ids.append(cx + dims[0] * (cy + dims[1] * cz))
                tet_ids.append(base_ids[m])
    cell_ids = np.concatenate(cell_ids)
    tet_ids = np.concatenate(tet_ids)
    order = np.lexsort((tet_ids, cell_ids))
    cell_ids = cell_ids[order]
    cell_tets = tet_ids[order]
    n_cells = int(np.prod(dims))
    counts = np.bincount(cell_ids, minlength=n_cells)
    indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    return lo, 1.0 / h, dims, indptr, cell_tets
