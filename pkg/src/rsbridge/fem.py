"""P1 Galerkin operators on a tetrahedral mesh.

Mass and stiffness use exact element integrals. The convection matrix uses
one-point (centroid) quadrature for the nodal velocity field, which is exact
for element-wise constant velocity and consistent at O(h) otherwise; the
velocity enters the time stepping at O(dt), so nothing finer is needed.

Lumped mass (row-sum weights, one positive volume share per node) is used
for integrals, norms, and density normalization; the consistent mass matrix
is what enters the time-stepping systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rsbridge.errors import ConfigError
from rsbridge.geometry import GaussianSpec
from rsbridge.mesh import SimplexMesh
from rsbridge.sparse import CsrMatrix

# exact P1 mass on a tet: V/10 diagonal, V/20 off-diagonal
_MASS_LOCAL = (np.ones((4, 4)) + np.eye(4)) / 20.0


@dataclass
class AssembledOperators:
    """The matrices of the semi-discrete advection-diffusion systems."""

    mass: CsrMatrix
    stiffness: CsrMatrix
    convection: CsrMatrix | None
    lumped_mass: np.ndarray

    @property
    def volume(self) -> float:
        return float(self.lumped_mass.sum())


def _scatter(mesh: SimplexMesh, local: np.ndarray) -> CsrMatrix:
    rows = np.broadcast_to(mesh.tets[:, :, None], local.shape).ravel()
    cols = np.broadcast_to(mesh.tets[:, None, :], local.shape).ravel()
    return CsrMatrix.from_coo(rows, cols, local.ravel(), mesh.vertex_count)


def assemble_mass(mesh: SimplexMesh) -> CsrMatrix:
    local = mesh.volumes[:, None, None] * _MASS_LOCAL
    return _scatter(mesh, local)


def assemble_stiffness(mesh: SimplexMesh) -> CsrMatrix:
    g = mesh.basis_gradients
    local = mesh.volumes[:, None, None] * np.einsum("tad,tbd->tab", g, g)
    return _scatter(mesh, local)


def assemble_convection(mesh: SimplexMesh, velocity: np.ndarray) -> CsrMatrix:
    """C[v] with rows i, columns j: integral of (grad phi_j . v) phi_i."""
    if velocity.shape != (mesh.vertex_count, 3):
        raise ValueError("velocity must be a nodal field of shape (n_vertices, 3)")
    vbar = velocity[mesh.tets].mean(axis=1)
    col = np.einsum("tjd,td->tj", mesh.basis_gradients, vbar) * (mesh.volumes / 4.0)[:, None]
    local = np.broadcast_to(col[:, None, :], (len(mesh.tets), 4, 4))
    return _scatter(mesh, local)


def lumped_mass_weights(mesh: SimplexMesh) -> np.ndarray:
    return np.bincount(
        mesh.tets.ravel(),
        weights=np.repeat(mesh.volumes / 4.0, 4),
        minlength=mesh.vertex_count,
    )


def assemble_operators(mesh: SimplexMesh, drift: np.ndarray | None = None) -> AssembledOperators:
    return AssembledOperators(
        mass=assemble_mass(mesh),
        stiffness=assemble_stiffness(mesh),
        convection=None if drift is None else assemble_convection(mesh, drift),
        lumped_mass=lumped_mass_weights(mesh),
    )


def lumped_integral(weights: np.ndarray, field: np.ndarray) -> float:
    if weights.shape != field.shape:
        raise ValueError("weights and field lengths differ")
    return float(weights @ field)


def lumped_l2_norm(weights: np.ndarray, field: np.ndarray) -> float:
    return float(np.sqrt(weights @ (field * field)))


def project_density(mesh: SimplexMesh, spec: GaussianSpec, weights: np.ndarray | None = None) -> np.ndarray:
    """Nodal Gaussian rescaled so its lumped-mass integral is exactly one."""
    if weights is None:
        weights = lumped_mass_weights(mesh)
    d2 = np.sum((mesh.vertices - np.asarray(spec.center)) ** 2, axis=1)
    vals = np.exp(-d2 / (2.0 * spec.sigma**2))
    total = weights @ vals
    if total <= 0.0:
        raise ConfigError(
            "density evaluates to zero on every mesh node; "
            "the Gaussian center is too far outside the domain for this sigma"
        )
    return vals / total


def skewness_ratio(c: CsrMatrix) -> float:
    """|C + C^T|_F / |C|_F; small for discretely divergence-free velocity."""
    denom = c.frobenius()
    if denom == 0.0:
        return 0.0
    sym = c.to_scipy() + c.to_scipy().T
    return float(np.sqrt((sym.data**2).sum()) / denom)
