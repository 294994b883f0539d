"""Projection of a nodal velocity field onto the discretely divergence-free,
boundary-tangent subspace.

The scalar potential solves the Neumann-Poisson problem in weak form,
find psi with  integral(grad psi . grad phi_i) = integral(V . grad phi_i),
so the zero-flux condition and the boundary flux of V are absorbed by
integration by parts and the discrete compatibility sum(b) = 0 holds
identically (the basis gradients sum to zero per element). The nullspace of
constants is fixed by shifting psi to zero lumped-mass mean after the solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rsbridge.errors import NumericalConsistencyError, SolverError
from rsbridge.fem import AssembledOperators, lumped_l2_norm
from rsbridge.mesh import SimplexMesh
from rsbridge.sparse import CsrMatrix, Ilu0Preconditioner, gmres

_COMPAT_TOL = 1e-10


#: stop when the weak-divergence functional has dropped this far below its
#: pre-projection norm
_DEFLATION_RTOL = 1e-9
_MAX_DEFLATION_PASSES = 30


@dataclass
class DriftField:
    """Divergence-free nodal velocity with its projection diagnostics."""

    values: np.ndarray  # (n_vertices, 3)
    divergence_residual: float
    tangency_residual: float
    potential: np.ndarray | None = None  # accumulated scalar gauge, zero lumped mean


def weak_gradient_rhs(mesh: SimplexMesh, field: np.ndarray) -> np.ndarray:
    """b_i = integral(field . grad phi_i), centroid quadrature."""
    fbar = field[mesh.tets].mean(axis=1)
    contrib = np.einsum("tad,td->ta", mesh.basis_gradients, fbar) * mesh.volumes[:, None]
    return np.bincount(mesh.tets.ravel(), weights=contrib.ravel(), minlength=mesh.vertex_count)


def nodal_gradient(mesh: SimplexMesh, scalar: np.ndarray) -> np.ndarray:
    """Volume-weighted average of the element-constant gradients at nodes."""
    ge = np.einsum("ta,tad->td", scalar[mesh.tets], mesh.basis_gradients)
    nodes = mesh.tets.ravel()
    wsum = np.bincount(nodes, weights=np.repeat(mesh.volumes, 4), minlength=mesh.vertex_count)
    out = np.empty((mesh.vertex_count, 3))
    for d in range(3):
        out[:, d] = np.bincount(
            nodes, weights=np.repeat(mesh.volumes * ge[:, d], 4), minlength=mesh.vertex_count
        )
    return out / wsum[:, None]


def weak_divergence_residual(mesh: SimplexMesh, ops: AssembledOperators, v: np.ndarray) -> float:
    """Norm of the weak-divergence functional of v, scaled by the field's
    lumped L2 magnitude (zero field gives zero)."""
    r = weak_gradient_rhs(mesh, v)
    mag = lumped_l2_norm(ops.lumped_mass, np.linalg.norm(v, axis=1))
    if mag == 0.0:
        return 0.0
    return float(np.linalg.norm(r) / mag)


def project_divergence_free(
    mesh: SimplexMesh,
    ops: AssembledOperators,
    field: np.ndarray,
    gmres_tol: float = 1e-10,
    gmres_restart: int = 50,
    gmres_max_iters: int = 2000,
) -> DriftField:
    """Remove the irrotational part of a nodal field: v = V - grad(psi).

    The averaging that moves the element-constant gradient of psi back to the
    nodes re-introduces an O(h) weak divergence, so the solve/recover pass is
    repeated on the leftover functional until it is negligible against the
    field's pre-projection divergence (the contraction factor is O(h)).
    """
    field = np.asarray(field, dtype=float)
    if field.shape != (mesh.vertex_count, 3):
        raise ValueError("field must be a nodal vector field of shape (n_vertices, 3)")
    if not np.all(np.isfinite(field)):
        raise ValueError("field contains non-finite values")
    if np.allclose(field, 0.0):
        return DriftField(
            values=np.zeros_like(field),
            divergence_residual=0.0,
            tangency_residual=0.0,
            potential=np.zeros(mesh.vertex_count),
        )

    w = ops.lumped_mass
    stiffness = ops.stiffness
    # ILU of the singular stiffness would hit a zero pivot; precondition with a
    # slightly mass-shifted copy (solution unaffected, only convergence).
    eta = 1e-6 * stiffness.diagonal().mean() / w.mean()
    shifted = stiffness.scaled_add(eta, _diagonal_matrix(w))
    precond = Ilu0Preconditioner(shifted)

    v = field.copy()
    psi_total = np.zeros(mesh.vertex_count)
    b0_norm = None
    for _ in range(_MAX_DEFLATION_PASSES):
        b = weak_gradient_rhs(mesh, v)
        scale = np.abs(b).sum()
        mismatch = abs(b.sum())
        if scale > 0 and mismatch / scale > _COMPAT_TOL:
            raise NumericalConsistencyError(
                "weak-divergence right-hand side is not mean-zero "
                f"(relative mismatch {mismatch / scale:.3e})"
            )
        b = b - b.sum() / len(b)
        b_norm = np.linalg.norm(b)
        if b0_norm is None:
            b0_norm = b_norm
        if b_norm <= _DEFLATION_RTOL * b0_norm or b_norm == 0.0:
            break
        res = gmres(
            stiffness,
            b,
            precond,
            rel_tol=gmres_tol,
            restart=gmres_restart,
            max_iters=gmres_max_iters,
        )
        if not res.converged:
            raise SolverError(
                f"potential solve stalled at relative residual {res.residual:.3e} "
                f"after {res.iterations} iterations"
            )
        psi = res.x
        psi -= (w @ psi) / w.sum()
        psi_total += psi
        v -= nodal_gradient(mesh, psi)
    psi_total -= (w @ psi_total) / w.sum()

    return DriftField(
        values=v,
        divergence_residual=weak_divergence_residual(mesh, ops, v),
        tangency_residual=_tangency_residual(mesh, ops, v),
        potential=psi_total,
    )


def _diagonal_matrix(diag: np.ndarray) -> CsrMatrix:
    n = len(diag)
    idx = np.arange(n)
    return CsrMatrix.from_coo(idx, idx, diag, n)


def _tangency_residual(mesh: SimplexMesh, ops: AssembledOperators, v: np.ndarray) -> float:
    """Area-weighted RMS of the boundary-normal component, scaled by |v|."""
    if len(mesh.boundary_faces) == 0:
        return 0.0
    face_mean = v[mesh.boundary_faces].mean(axis=1)
    vn = np.einsum("fd,fd->f", face_mean, mesh.boundary_normals)
    area = mesh.boundary_areas
    rms_n = np.sqrt((area * vn**2).sum() / area.sum())
    mag = lumped_l2_norm(ops.lumped_mass, np.linalg.norm(v, axis=1)) / np.sqrt(ops.volume)
    if mag == 0.0:
        return 0.0
    return float(rms_n / mag)
