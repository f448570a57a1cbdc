"""Weighted Whitney-form calculus on simplicial complexes.

Cochains are plain float vectors indexed by the p-simplices of a
:class:`~weighted_hodge.mesh.SimplicialComplex`. Top-degree cochains refer to
the oriented top simplices; all lower ones to simplices with sorted vertices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import factorial
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .fields import PFormField, ScalarField, const, eval_jet2, increasing, parse_field
from .linalg import MassSolver, as_dense, eig_gen_sym
from .mesh import SimplicialComplex
from .quadrature import simplex_rule
from .smooth_ops import FormValue, evaluate_form


class SingularCell(ValueError):
    pass


class ThresholdAmbiguous(RuntimeError):
    pass


VOLUME_FLOOR = 1e-14
GAP_RATIO = 10.0


# ---------------------------------------------------------------------------
# per-cell geometry


@dataclass(frozen=True)
class CellGeometry:
    """Affine data of the top cells: vertex coordinates, volumes, barycentric gradients."""

    coords: np.ndarray      # (C, k+1, D)
    volume: np.ndarray      # (C,)
    grads: np.ndarray       # (C, k+1, D), gradients of the barycentric coordinates
    gram: np.ndarray        # (C, k+1, k+1), inner products of those gradients


def cell_geometry(K: SimplicialComplex) -> CellGeometry:
    k = K.top_dim
    X = K.simplex_coords(k)
    E = X[:, 1:, :] - X[:, :1, :]
    g = E @ np.swapaxes(E, 1, 2)
    detg = np.linalg.det(g) if k > 0 else np.ones(len(X))
    if k > 0 and np.any(detg <= VOLUME_FLOOR ** 2):
        bad = int(np.argmin(detg))
        raise SingularCell(f"cell {bad} is degenerate (volume {np.sqrt(max(detg[bad], 0)) / factorial(k):.3e})")
    vol = np.sqrt(detg) / factorial(k)
    if k > 0:
        G = np.linalg.solve(g, E)
        grads = np.concatenate([-G.sum(axis=1, keepdims=True), G], axis=1)
    else:
        grads = np.zeros((len(X), 1, K.ambient_dim))
    gram = grads @ np.swapaxes(grads, 1, 2)
    return CellGeometry(X, vol, grads, gram)


def local_faces(k: int, p: int) -> list[tuple[int, ...]]:
    return list(combinations(range(k + 1), p + 1))


def face_indices(K: SimplicialComplex, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Global p-simplex index and orientation sign of each local face of each top cell."""
    k = K.top_dim
    cells = K.simplices[k]
    faces = local_faces(k, p)
    idx = np.stack([K.index_of(p, cells[:, list(s)]) for s in faces], axis=1)
    if p == k:
        sign = K.orientation[:, None].astype(float)
    else:
        sign = np.ones(idx.shape)
    return idx, sign


def _as_field(f, dim: int) -> ScalarField:
    if f is None:
        return const(0.0)
    if isinstance(f, str):
        return parse_field(f, dim)
    if isinstance(f, (int, float)):
        return const(float(f))
    return f


def _minor_det(A: np.ndarray, rows, cols) -> np.ndarray:
    if len(rows) == 0:
        return np.ones(A.shape[0])
    return np.linalg.det(A[:, list(rows), :][:, :, list(cols)])


def _local_mass(geo: CellGeometry, B: np.ndarray, p: int) -> np.ndarray:
    """``(p!)^2 sum_{j,l} (-1)^{j+l} B[s_j, t_l] det(gram[s - s_j, t - t_l])``."""
    k = geo.coords.shape[1] - 1
    faces = local_faces(k, p)
    n = len(faces)
    out = np.zeros((len(B), n, n))
    c = float(factorial(p)) ** 2
    for a, s in enumerate(faces):
        for b in range(a, n):
            t = faces[b]
            acc = np.zeros(len(B))
            for j in range(p + 1):
                sj = s[:j] + s[j + 1:]
                for l in range(p + 1):
                    tl = t[:l] + t[l + 1:]
                    acc += (-1) ** (j + l) * B[:, s[j], t[l]] * _minor_det(geo.gram, sj, tl)
            out[:, a, b] = c * acc
            out[:, b, a] = c * acc
    return out


# ---------------------------------------------------------------------------
# weighted complex


@dataclass(frozen=True, eq=False)
class WeightedComplex:
    """A simplicial complex with weighted Whitney mass matrices in every degree."""

    complex: SimplicialComplex
    f: ScalarField
    quad_order: int
    mass: tuple
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def top_dim(self) -> int:
        return self.complex.top_dim

    def d(self, p: int) -> sp.csr_matrix:
        """Coboundary from p- to (p+1)-cochains as a float matrix."""
        key = ("d", p)
        if key not in self._cache:
            self._cache[key] = sp.csr_matrix(self.complex.coboundary[p], dtype=float)
        return self._cache[key]

    def solver(self, p: int) -> MassSolver:
        key = ("solver", p)
        if key not in self._cache:
            self._cache[key] = MassSolver(self.mass[p])
        return self._cache[key]

    def inner(self, p: int, a, b) -> float:
        return float(np.asarray(a) @ (self.mass[p] @ np.asarray(b)))

    def norm(self, p: int, a) -> float:
        return float(np.sqrt(max(self.inner(p, a, a), 0.0)))

    def describe(self) -> dict:
        return {"mesh": self.complex.describe(), "weight": str(self.f), "quad_order": self.quad_order,
                "counts": list(self.complex.counts), "h": self.complex.mesh_size()}


def assemble(K: SimplicialComplex, f=None, quad_order: int = 4) -> WeightedComplex:
    """Weighted Whitney mass matrices ``int <W_s, W_t> e^{-f}`` for every degree."""
    if quad_order < 2:
        raise ValueError("quad_order must be at least 2")
    f = _as_field(f, K.ambient_dim)
    k = K.top_dim
    geo = cell_geometry(K)
    bary, w = simplex_rule(k, quad_order)
    xq = np.einsum("qa,cad->cqd", bary, geo.coords)
    weight = np.exp(-eval_jet2(f, xq, 0).value)
    scale = geo.volume * factorial(k)
    # B[c, a, b] = int_cell lambda_a lambda_b e^{-f}
    B = np.einsum("c,q,qa,qb,cq->cab", scale, w, bary, bary, weight)
    mass = []
    for p in range(k + 1):
        loc = _local_mass(geo, B, p)
        idx, sign = face_indices(K, p)
        vals = loc * sign[:, :, None] * sign[:, None, :]
        n = len(idx[0])
        rows = np.repeat(idx, n, axis=1).ravel()
        cols = np.tile(idx, (1, n)).ravel()
        N = K.count(p)
        M = sp.csr_matrix((vals.ravel(), (rows, cols)), shape=(N, N))
        mass.append(sp.csr_matrix(0.5 * (M + M.T)))
    return WeightedComplex(K, f, quad_order, tuple(mass))


def stiffness(WC: WeightedComplex, p: int) -> sp.csr_matrix:
    """``d_p^T M_{p+1} d_p``, the weak form of ``delta_f d`` on p-cochains."""
    if p >= WC.top_dim:
        raise ValueError("no stiffness matrix in the top degree")
    d = WC.d(p)
    return sp.csr_matrix(d.T @ WC.mass[p + 1] @ d)


def discrete_delta_f(WC: WeightedComplex, p: int, c) -> np.ndarray:
    """Weighted adjoint of d: ``M_{p-1}^{-1} d_{p-1}^T M_p c``."""
    if p < 1:
        raise ValueError("codifferential of a 0-cochain")
    return WC.solver(p - 1).solve(WC.d(p - 1).T @ (WC.mass[p] @ np.asarray(c, dtype=float)))


def hodge_laplacian_matrix(WC: WeightedComplex, p: int) -> np.ndarray:
    """Dense weak weighted Hodge Laplacian ``d^T M d + M d M^{-1} d^T M`` on p-cochains."""
    n = WC.complex.count(p)
    L = np.zeros((n, n))
    if p < WC.top_dim:
        L += as_dense(stiffness(WC, p))
    if p >= 1:
        MD = as_dense(WC.mass[p] @ WC.d(p - 1))
        L += MD @ WC.solver(p - 1).solve(MD.T)
    return 0.5 * (L + L.T)


@dataclass
class HodgeParts:
    exact: np.ndarray
    coexact: np.ndarray
    harmonic: np.ndarray
    potential: np.ndarray | None
    copotential: np.ndarray | None

    def orthogonality(self, WC: WeightedComplex, p: int) -> float:
        """Largest relative weighted inner product between distinct parts."""
        parts = (self.exact, self.coexact, self.harmonic)
        scale = max(WC.inner(p, x, x) for x in parts)
        scale = max(scale, 1e-300)
        return max(abs(WC.inner(p, parts[i], parts[j])) for i in range(3) for j in range(i + 1, 3)) / scale


LSTSQ_CUTOFF = 1e-10


def _lstsq(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    # explicit cutoff: the kernel of d otherwise hovers at the LAPACK default
    return sla.lstsq(A, b, cond=LSTSQ_CUTOFF, lapack_driver="gelsd")[0]


def hodge_decompose(WC: WeightedComplex, p: int, c) -> HodgeParts:
    """``c = d a + delta_f b + h`` by two weighted least-squares solves."""
    if not WC.complex.is_closed():
        raise ValueError("Hodge decomposition is implemented for closed complexes")
    c = np.asarray(c, dtype=float)
    L = WC.solver(p).cholesky_lower()           # M_p = L L^T
    Lc = L.T @ c
    exact = np.zeros_like(c)
    a = None
    if p >= 1:
        D = as_dense(WC.d(p - 1))
        a = _lstsq(L.T @ D, Lc)
        exact = D @ a
    coexact = np.zeros_like(c)
    b = None
    if p < WC.top_dim:
        Dt = as_dense(WC.d(p)).T
        y = _lstsq(sla.solve_triangular(L, Dt, lower=True), Lc)
        coexact = WC.solver(p).solve(Dt @ y)
        b = WC.solver(p + 1).solve(y)
    return HodgeParts(exact, coexact, c - exact - coexact, a, b)


def zero_cluster(eigs: np.ndarray, rel: float = 1e-8, gap: float = GAP_RATIO) -> int:
    """Number of numerically zero eigenvalues in an ascending spectrum.

    The threshold is ``rel`` times the first clearly nonzero eigenvalue (the
    smallest one above ``1e-6`` of the largest); an eigenvalue between the
    threshold and ``gap`` times it makes the count ambiguous.
    """
    eigs = np.asarray(eigs, dtype=float)
    top = np.max(np.abs(eigs), initial=0.0)
    if top == 0.0:
        return len(eigs)
    clear = eigs[eigs > 1e-6 * top]
    ref = clear[0] if len(clear) else top
    eps = rel * ref
    n0 = int(np.sum(eigs <= eps))
    if np.any((eigs > eps) & (eigs < gap * eps)):
        raise ThresholdAmbiguous(f"eigenvalues between {eps:.3e} and {gap * eps:.3e}")
    return n0


def harmonic_dim(WC: WeightedComplex, p: int) -> int:
    """Dimension of the discrete weighted harmonic p-cochains."""
    if not WC.complex.is_closed():
        raise ValueError("harmonic dimension is defined here for closed complexes")
    lam, _ = eig_gen_sym(hodge_laplacian_matrix(WC, p), WC.mass[p], check_residual=False)
    return zero_cluster(lam)


# ---------------------------------------------------------------------------
# interpolation and reconstruction


def de_rham_interpolate(omega: PFormField, K: SimplicialComplex, order: int = 6) -> np.ndarray:
    """Integrals of ``omega`` over the oriented p-simplices of ``K``."""
    p = omega.degree
    if omega.dim != K.ambient_dim:
        raise ValueError("form and mesh live in different dimensions")
    if p > K.top_dim:
        raise ValueError("form degree exceeds the mesh dimension")
    X = K.simplex_coords(p)
    if p == 0:
        return evaluate_form(omega, X[:, 0, :], 0).comps[()].value.copy()
    order = max(order, 4)
    bary, w = simplex_rule(p, order)
    E = X[:, 1:, :] - X[:, :1, :]
    xq = np.einsum("qa,cad->cqd", bary, X)
    vals = evaluate_form(omega, xq, 0)
    out = np.zeros(len(X))
    for I in increasing(omega.dim, p):
        minor = np.linalg.det(E[:, :, list(I)])
        out += minor * (vals.comps[I].value @ w)
    if p == K.top_dim:
        out *= K.orientation
    return out


def whitney_on_cells(K: SimplicialComplex, c, p: int, cells: np.ndarray, bary: np.ndarray,
                     geo: CellGeometry | None = None) -> FormValue:
    """Whitney interpolant of cochain ``c`` at barycentric points.

    ``cells`` has shape ``S`` and ``bary`` shape ``S + (k+1,)``; the result
    holds ambient coefficients over ``S``.
    """
    geo = cell_geometry(K) if geo is None else geo
    c = np.asarray(c, dtype=float)
    cells = np.asarray(cells)
    k = K.top_dim
    D = K.ambient_dim
    idx, sign = face_indices(K, p)
    coef = c[idx[cells]] * sign[cells]              # S + (nfaces,)
    G = geo.grads[cells]                            # S + (k+1, D)
    comps = {I: np.zeros(cells.shape) for I in increasing(D, p)}
    pf = factorial(p)
    for a, s in enumerate(local_faces(k, p)):
        for j in range(p + 1):
            rest = s[:j] + s[j + 1:]
            scal = pf * (-1) ** j * coef[..., a] * bary[..., s[j]]
            for I in comps:
                if p == 0:
                    comps[I] = comps[I] + scal
                else:
                    comps[I] = comps[I] + scal * np.linalg.det(G[..., list(rest), :][..., :, list(I)])
    return FormValue(p, D, comps, cells.shape)


def locate(K: SimplicialComplex, x: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Containing top cell and barycentric coordinates of each point.

    For embedded surfaces the cell with the closest affine hull among those
    containing the projected point is chosen.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    geo = cell_geometry(K)
    X0 = geo.coords[:, 0, :]
    cells = np.empty(len(x), dtype=np.int64)
    bary = np.empty((len(x), K.top_dim + 1))
    for i, pt in enumerate(x):
        diff = pt - X0
        if K.periods is not None:
            per = np.asarray(K.periods)
            diff = diff - per * np.round(diff / per)
        lam_rest = np.einsum("cad,cd->ca", geo.grads[:, 1:, :], diff)
        lam = np.concatenate([1 - lam_rest.sum(axis=1, keepdims=True), lam_rest], axis=1)
        proj = X0 + np.einsum("ca,cad->cd", lam, geo.coords - geo.coords[:, :1, :])
        dist = np.linalg.norm((X0 + diff) - proj, axis=1)
        bad = np.maximum(-lam.min(axis=1), 0.0)
        score = bad + dist
        j = int(np.argmin(score))
        if bad[j] > tol and dist[j] <= tol:
            raise ValueError(f"point {pt} is outside the mesh")
        cells[i], bary[i] = j, lam[j]
    return cells, bary


def whitney_reconstruct(K: SimplicialComplex, c, p: int, x) -> FormValue:
    """Whitney interpolant of a p-cochain at points ``x``."""
    cells, bary = locate(K, x)
    return whitney_on_cells(K, c, p, cells, bary)


@dataclass(frozen=True)
class CellQuadrature:
    """Quadrature nodes of every top cell with weights including the cell volume."""

    cells: np.ndarray       # (C, nq)
    bary: np.ndarray        # (C, nq, k+1)
    points: np.ndarray      # (C, nq, D), unwrapped on periodic meshes
    weights: np.ndarray     # (C, nq)


def cell_quadrature(K: SimplicialComplex, order: int, geo: CellGeometry | None = None) -> CellQuadrature:
    geo = cell_geometry(K) if geo is None else geo
    k = K.top_dim
    b, w = simplex_rule(k, order)
    C = len(geo.volume)
    cells = np.repeat(np.arange(C)[:, None], len(w), axis=1)
    bary = np.broadcast_to(b, (C,) + b.shape).copy()
    pts = np.einsum("qa,cad->cqd", b, geo.coords)
    wts = (geo.volume * factorial(k))[:, None] * w[None, :]
    return CellQuadrature(cells, bary, pts, wts)


def l2_interpolation_error(K: SimplicialComplex, omega: PFormField, order: int = 6) -> float:
    """``|omega - W(I omega)|_{L^2}`` by per-cell quadrature (flat top-dimensional meshes)."""
    c = de_rham_interpolate(omega, K, order)
    geo = cell_geometry(K)
    Q = cell_quadrature(K, order, geo)
    W = whitney_on_cells(K, c, omega.degree, Q.cells, Q.bary, geo)
    ex = evaluate_form(omega, Q.points, 0)
    err2 = (W - ex.values_only()).norm2()
    return float(np.sqrt(np.sum(err2 * Q.weights)))


def dump_matrices(WC: WeightedComplex, directory) -> list[str]:
    """Write every mass and coboundary matrix as ``row col value`` text."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    mats = [(f"mass{p}", WC.mass[p]) for p in range(WC.top_dim + 1)]
    mats += [(f"d{p}", WC.d(p)) for p in range(WC.top_dim)]
    for name, M in mats:
        C = sp.coo_matrix(M)
        order = np.lexsort((C.col, C.row))
        path = out / f"{name}.txt"
        with open(path, "w") as fh:
            fh.write(f"# {C.shape[0]} {C.shape[1]} {C.nnz}\n")
            for r, cidx, v in zip(C.row[order], C.col[order], C.data[order]):
                fh.write(f"{int(r)} {int(cidx)} {float(v)!r}\n")
        written.append(str(path))
    return written
