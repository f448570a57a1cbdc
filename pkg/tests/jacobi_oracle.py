"""Cyclic Jacobi eigenvalues, sharing no code with LAPACK-based solvers."""
import numpy as np


def jacobi_eigvals(A, sweeps=30, tol=1e-15):
    """Eigenvalues and eigenvectors of a symmetric matrix by parallel-ordered Jacobi rotations."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    m = n + (n % 2)
    Q = np.eye(n)
    order = list(range(m))
    for _ in range(sweeps):
        off = np.sqrt(np.sum((A - np.diag(np.diag(A))) ** 2))
        if off <= tol * np.sqrt(np.sum(A ** 2)):
            break
        for _ in range(m - 1):
            pairs = np.array([(order[i], order[m - 1 - i]) for i in range(m // 2)])
            pairs = pairs[(pairs < n).all(axis=1)]
            p, q = np.minimum(pairs[:, 0], pairs[:, 1]), np.maximum(pairs[:, 0], pairs[:, 1])
            apq = A[p, q]
            diff = A[q, q] - A[p, p]
            live = np.abs(apq) > 1e-300 + 1e-18 * np.abs(diff)
            theta = diff[live] / (2 * apq[live])
            t = np.zeros(len(p))
            t[live] = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta ** 2 + 1))
            c = 1 / np.sqrt(t ** 2 + 1)
            s = t * c
            # columns then rows; the pairs are disjoint so the updates commute
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p], A[:, q] = c * Ap - s * Aq, s * Ap + c * Aq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :], A[q, :] = c[:, None] * Ap - s[:, None] * Aq, s[:, None] * Ap + c[:, None] * Aq
            Qp, Qq = Q[:, p].copy(), Q[:, q].copy()
            Q[:, p], Q[:, q] = c * Qp - s * Qq, s * Qp + c * Qq
            order = [order[0]] + [order[-1]] + order[1:-1]
    lam = np.diag(A).copy()
    idx = np.argsort(lam)
    return lam[idx], Q[:, idx]


def jacobi_pencil(A, B):
    """Eigenvalues of ``A v = lam B v`` through B^{-1/2} built from a Jacobi eigendecomposition of B."""
    mu, U = jacobi_eigvals(B)
    Bih = U @ np.diag(mu ** -0.5) @ U.T
    C = Bih @ A @ Bih
    return jacobi_eigvals(0.5 * (C + C.T))[0]
