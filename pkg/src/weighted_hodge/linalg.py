"""Dense symmetric-definite eigenproblems and mass-matrix solves."""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_LIMIT = 4000
CG_TOL = 1e-12


class NotSPD(ValueError):
    pass


class ConvergenceFailure(RuntimeError):
    pass


class SolveFailure(RuntimeError):
    pass


def as_dense(A) -> np.ndarray:
    return A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)


def eig_gen_sym(A, B, k: int | None = None, check_residual: bool = True,
                residual_tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Smallest ``k`` eigenpairs of ``A v = lam B v`` with B symmetric positive definite.

    The pencil is reduced by a Cholesky factor of B to a standard symmetric
    problem, which LAPACK tridiagonalizes and diagonalizes. Eigenvectors are
    B-orthonormal.
    """
    A, B = as_dense(A), as_dense(B)
    n = A.shape[0]
    if A.shape != (n, n) or B.shape != (n, n):
        raise ValueError("A and B must be square matrices of equal size")
    k = n if k is None else int(k)
    if not 0 < k <= n:
        raise ValueError(f"k must lie in 1..{n}")
    try:
        np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise NotSPD("B is not symmetric positive definite") from exc
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    try:
        lam, V = sla.eigh(A, B, subset_by_index=[0, k - 1])
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise ConvergenceFailure(str(exc)) from exc
    if check_residual:
        res = pencil_residuals(A, B, lam, V)
        if np.any(res > residual_tol):
            raise ConvergenceFailure(f"eigenpair residual {res.max():.2e} exceeds {residual_tol:g}")
    return lam, V


def pencil_residuals(A, B, lam, V) -> np.ndarray:
    """``|A v - lam B v| / max(|B v|, |A v|, tiny)`` per column."""
    A, B = as_dense(A), as_dense(B)
    BV = B @ V
    AV = A @ V
    r = np.linalg.norm(AV - BV * lam, axis=0)
    scale = np.maximum(np.linalg.norm(BV, axis=0) * max(1.0, np.max(np.abs(lam), initial=0.0)), 1e-300)
    return r / scale


class MassSolver:
    """Solves with a symmetric positive definite (mass) matrix.

    Dense Cholesky up to ``DENSE_LIMIT`` unknowns, Jacobi-preconditioned
    conjugate gradients above.
    """

    def __init__(self, M):
        self.n = M.shape[0]
        self.sparse = sp.csr_matrix(M) if sp.issparse(M) else None
        if self.n <= DENSE_LIMIT:
            try:
                self.factor = sla.cho_factor(as_dense(M))
            except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
                raise NotSPD("mass matrix is not positive definite") from exc
        else:
            self.factor = None
            if self.sparse is None:
                self.sparse = sp.csr_matrix(M)
            diag = self.sparse.diagonal()
            if np.any(diag <= 0):
                raise NotSPD("mass matrix has a nonpositive diagonal")
            self.precond = sp.diags(1.0 / diag)

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if self.factor is not None:
            return sla.cho_solve(self.factor, b)
        if b.ndim == 2:
            return np.stack([self.solve(b[:, j]) for j in range(b.shape[1])], axis=1)
        x, info = spla.cg(self.sparse, b, rtol=CG_TOL, atol=0.0, M=self.precond, maxiter=10 * self.n)
        if info != 0:
            raise SolveFailure(f"conjugate gradients did not converge (info={info})")
        return x

    def cholesky_lower(self) -> np.ndarray:
        """Lower Cholesky factor (dense path only)."""
        if self.factor is None:
            raise SolveFailure("dense factor unavailable above the dense limit")
        c, lower = self.factor
        return np.tril(c) if lower else np.triu(c).T
