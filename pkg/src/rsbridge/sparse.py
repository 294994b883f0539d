"""CSR matrices, ILU(0) preconditioning, and restarted GMRES.

GMRES is right-preconditioned so reported residuals are residuals of the
original system; the least-squares update uses Givens rotations and the
returned residual is recomputed from the final iterate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse as _sp

from rsbridge.accel import kernels
from rsbridge.errors import SolverError


@dataclass
class CsrMatrix:
    """Square sparse matrix in CSR form with sorted column indices."""

    row_offsets: np.ndarray
    column_indices: np.ndarray
    values: np.ndarray
    n: int

    @classmethod
    def from_coo(cls, rows, cols, vals, n: int) -> "CsrMatrix":
        """Build from triplets; duplicate entries are summed."""
        m = _sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return cls.from_scipy(m)

    @classmethod
    def from_scipy(cls, m) -> "CsrMatrix":
        m = m.tocsr()
        m.sort_indices()
        return cls(
            row_offsets=m.indptr.astype(np.int64),
            column_indices=m.indices.astype(np.int64),
            values=m.data.astype(float),
            n=m.shape[0],
        )

    @classmethod
    def from_dense(cls, a) -> "CsrMatrix":
        return cls.from_scipy(_sp.csr_matrix(np.asarray(a, dtype=float)))

    def to_scipy(self):
        return _sp.csr_matrix(
            (self.values, self.column_indices, self.row_offsets), shape=(self.n, self.n)
        )

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    @property
    def nnz(self) -> int:
        return len(self.values)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if x.shape[0] != self.n:
            raise ValueError(f"dimension mismatch: matrix is {self.n}, vector is {x.shape[0]}")
        return kernels.csr_matvec(self.row_offsets, self.column_indices, self.values, x)

    __matmul__ = matvec

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    def transpose(self) -> "CsrMatrix":
        return CsrMatrix.from_scipy(self.to_scipy().T)

    def frobenius(self) -> float:
        return float(np.sqrt(np.sum(self.values**2)))

    def scaled_add(self, alpha: float, other: "CsrMatrix") -> "CsrMatrix":
        """self + alpha * other (patterns may differ)."""
        return CsrMatrix.from_scipy(self.to_scipy() + alpha * other.to_scipy())


def spmv(a: CsrMatrix, x: np.ndarray) -> np.ndarray:
    return a.matvec(x)


class Ilu0Preconditioner:
    """Incomplete LU on the matrix's own sparsity pattern, unit lower diagonal."""

    def __init__(self, a: CsrMatrix):
        diag_pos = _diagonal_positions(a)
        lu, fail_row = kernels.ilu0_factorize(
            a.row_offsets, a.column_indices, a.values, diag_pos
        )
        if fail_row >= 0:
            raise SolverError(f"ILU(0) hit a zero pivot at row {fail_row}")
        self._indptr = a.row_offsets
        self._indices = a.column_indices
        self._lu = lu
        self._diag_pos = diag_pos
        self._aux = kernels.ilu0_prepare(a.row_offsets, a.column_indices, lu, diag_pos)
        self.nnz = len(lu)

    def apply(self, b: np.ndarray) -> np.ndarray:
        """Solve L(Ux) = b on the stored pattern."""
        return kernels.ilu0_apply(
            self._indptr, self._indices, self._lu, self._diag_pos, self._aux, b
        )


def ilu0_factor(a: CsrMatrix) -> Ilu0Preconditioner:
    return Ilu0Preconditioner(a)


def _diagonal_positions(a: CsrMatrix) -> np.ndarray:
    rows = np.repeat(np.arange(a.n), np.diff(a.row_offsets))
    is_diag = a.column_indices == rows
    present = np.bincount(rows[is_diag], minlength=a.n)
    if (present == 0).any():
        missing = int(np.flatnonzero(present == 0)[0])
        raise SolverError(f"row {missing} has no diagonal entry in the sparsity pattern")
    return np.flatnonzero(is_diag).astype(np.int64)


@dataclass
class GmresResult:
    x: np.ndarray
    iterations: int
    residual: float  # true relative residual of the returned iterate
    converged: bool
    residual_history: list[float] = field(default_factory=list)


def gmres(
    a: CsrMatrix,
    b: np.ndarray,
    preconditioner: Ilu0Preconditioner | None = None,
    rel_tol: float = 1e-10,
    restart: int = 50,
    max_iters: int = 1000,
    x0: np.ndarray | None = None,
) -> GmresResult:
    """Restarted GMRES with right preconditioning.

    Non-convergence within the iteration budget is non-fatal: the best
    iterate is returned with converged=False and the caller escalates.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    if restart < 1:
        raise ValueError("restart must be at least 1")
    n = a.n
    apply_m = preconditioner.apply if preconditioner is not None else (lambda v: v)
    x = np.zeros(n) if x0 is None else x0.copy()
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return GmresResult(x=np.zeros(n), iterations=0, residual=0.0, converged=True)

    history: list[float] = []
    total = 0
    while total < max_iters:
        r = b - a.matvec(x)
        beta = np.linalg.norm(r)
        if beta / norm_b <= rel_tol:
            return GmresResult(x, total, beta / norm_b, True, history)
        m = min(restart, max_iters - total)
        v = np.empty((m + 1, n))
        v[0] = r / beta
        h = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        k = 0
        for j in range(m):
            w = a.matvec(apply_m(v[j]))
            for i in range(j + 1):
                h[i, j] = v[i] @ w
                w -= h[i, j] * v[i]
            h[j + 1, j] = np.linalg.norm(w)
            # previously computed Givens rotations
            for i in range(j):
                t = cs[i] * h[i, j] + sn[i] * h[i + 1, j]
                h[i + 1, j] = -sn[i] * h[i, j] + cs[i] * h[i + 1, j]
                h[i, j] = t
            rho = np.hypot(h[j, j], h[j + 1, j])
            if rho == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j], sn[j] = h[j, j] / rho, h[j + 1, j] / rho
            h[j, j] = rho
            h[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            total += 1
            k = j + 1
            history.append(abs(g[j + 1]) / norm_b)
            if abs(g[j + 1]) / norm_b <= rel_tol or total >= max_iters:
                break
            w_norm = np.linalg.norm(w)
            if w_norm == 0.0:
                break  # happy breakdown: exact solution in the current subspace
            v[j + 1] = w / w_norm
        y = np.zeros(k)
        for i in range(k - 1, -1, -1):
            y[i] = (g[i] - h[i, i + 1 : k] @ y[i + 1 : k]) / h[i, i]
        x = x + apply_m(v[:k].T @ y)
        true_res = np.linalg.norm(b - a.matvec(x)) / norm_b
        if true_res <= rel_tol:
            return GmresResult(x, total, true_res, True, history)
    true_res = float(np.linalg.norm(b - a.matvec(x)) / norm_b)
    return GmresResult(x, total, true_res, converged=true_res <= rel_tol, residual_history=history)


def save_matrix_market(a: CsrMatrix, path) -> None:
    """Coordinate-format MatrixMarket dump for offline debugging."""
    with open(path, "w", encoding="ascii") as f:
        f.write("%%MatrixMarket matrix coordinate real general\n")
        f.write(f"{a.n} {a.n} {a.nnz}\n")
        for i in range(a.n):
            for p in range(a.row_offsets[i], a.row_offsets[i + 1]):
                f.write(f"{i + 1} {a.column_indices[p] + 1} {a.values[p]:.17g}\n")
