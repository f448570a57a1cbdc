"""Weighted Hodge spectra, Steklov spectra on forms and the eigenvalue theorems."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import mesh as meshmod
from .discrete import (GAP_RATIO, WeightedComplex, assemble, cell_geometry, cell_quadrature,
                       hodge_laplacian_matrix, stiffness, whitney_on_cells)
from .fields import (PFormField, ScalarField, const, coord, cos, eval_jet2, increasing, parse_field, sin,
                     sort_sign)
from .linalg import ConvergenceFailure, NotSPD, SolveFailure, as_dense, eig_gen_sym, pencil_residuals
from .quadrature import FlatDomain, quad_boundary, quad_domain
from .smooth_ops import induced

__all__ = [
    "eig_gen_sym", "NotSPD", "ConvergenceFailure", "GapAmbiguous", "EmptyCoclosedSpace",
    "HypothesisViolated", "UnsupportedEmbedding", "CurvatureUnavailable", "SpectrumResult",
    "SteklovResult", "TheoremCheck", "kernel_dim", "coexact_spectrum", "exact_spectrum",
    "full_spectrum", "check_duality", "steklov_spectrum", "coclosed_boundary_spectrum",
    "check_theorem", "Embedding", "lp_check", "trace_identities", "richardson",
    "convergence_sweep",
]


class GapAmbiguous(RuntimeError):
    pass


class EmptyCoclosedSpace(ValueError):
    pass


class HypothesisViolated(RuntimeError):
    def __init__(self, message: str, check: "TheoremCheck | None" = None):
        super().__init__(message)
        self.check = check


class UnsupportedEmbedding(ValueError):
    pass


class CurvatureUnavailable(ValueError):
    pass


ZERO_REL = 1e-8


@dataclass
class SpectrumResult:
    degree: int
    kind: str
    eigenvalues: np.ndarray
    residuals: np.ndarray
    mesh: str
    weight: str
    h: float
    n_zero: int = 0
    vectors: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"degree": self.degree, "kind": self.kind, "eigenvalues": [float(x) for x in self.eigenvalues],
                "residuals": [float(x) for x in self.residuals], "mesh": self.mesh, "weight": self.weight,
                "h": float(self.h), "n_zero": int(self.n_zero)}


@dataclass
class SteklovResult:
    degree: int
    eigenvalues: np.ndarray
    residuals: np.ndarray
    boundary_mesh: str
    weight: str
    include_harmonic: bool
    trace_dim: int
    coclosed_dim: int

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("eigenvalues", "residuals")}
        d["eigenvalues"] = [float(x) for x in self.eigenvalues]
        d["residuals"] = [float(x) for x in self.residuals]
        return d


@dataclass
class TheoremCheck:
    """Computed quantity against a bound; ``margin`` is positive when the inequality holds."""

    theorem_id: str
    hypotheses: dict
    computed: float
    bound: float
    margin: float
    tol_rel: float
    passed: bool
    hypothesis_ok: bool = True
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _decide(theorem_id, hyps, computed, bound, tol_rel, hyp_ok=True, details=None) -> TheoremCheck:
    margin = float(computed - bound) if theorem_id in ("thm1.2", "thm1.5") else float(bound - computed)
    passed = bool(hyp_ok and margin >= -tol_rel * abs(bound))
    return TheoremCheck(theorem_id, hyps, float(computed), float(bound), margin, tol_rel, passed, hyp_ok,
                        details or {})


# ---------------------------------------------------------------------------
# Hodge spectra on closed complexes


def kernel_dim(K, p: int) -> int:
    """Dimension of the kernel of d on p-cochains, from exact Betti numbers."""
    b = meshmod.betti(K)
    rank_prev = 0
    for q in range(p + 1):
        rank_q = K.count(q) - b[q] - rank_prev if q < K.top_dim else 0
        if q == p:
            return K.count(p) - rank_q
        rank_prev = rank_q
    raise ValueError("degree out of range")


def _split_zero(lam: np.ndarray, n_zero: int) -> None:
    if n_zero == 0:
        return
    if n_zero >= len(lam):
        raise GapAmbiguous("no eigenvalue beyond the kernel was computed")
    ref = lam[n_zero]
    if ref <= 0:
        raise GapAmbiguous("first retained eigenvalue is not positive")
    eps = ZERO_REL * ref
    if np.max(np.abs(lam[:n_zero])) > eps / GAP_RATIO:
        raise GapAmbiguous(f"kernel cluster reaches {np.max(np.abs(lam[:n_zero])):.3e}, first kept {ref:.3e}")


def coexact_spectrum(WC: WeightedComplex, p: int, k: int, vectors: bool = False) -> SpectrumResult:
    """Smallest ``k`` eigenvalues of ``delta_f d`` on co-exact p-cochains.

    The pencil ``(d^T M_{p+1} d, M_p)`` is solved and the kernel of d
    (closed cochains, counted exactly) is deflated after a gap check.
    """
    K = WC.complex
    if p >= K.top_dim:
        raise ValueError("no co-exact spectrum in the top degree")
    nz = kernel_dim(K, p)
    n = K.count(p)
    want = min(n, nz + k)
    A = stiffness(WC, p)
    lam, V = eig_gen_sym(A, WC.mass[p], want)
    _split_zero(lam, nz)
    res = pencil_residuals(A, WC.mass[p], lam[nz:], V[:, nz:])
    return SpectrumResult(p, "coexact", lam[nz:], res, K.describe(), str(WC.f), K.mesh_size(), nz,
                          V[:, nz:] if vectors else None)


def _range_basis(D: np.ndarray) -> np.ndarray:
    return sla.orth(D, rcond=1e-10)


def exact_spectrum(WC: WeightedComplex, p: int, k: int, method: str = "duality") -> SpectrumResult:
    """Smallest ``k`` eigenvalues on exact p-cochains.

    ``method='duality'`` reads them off the co-exact (p-1) spectrum.
    ``method='projection'`` restricts the full weighted Hodge pencil of degree
    p to the exact subspace ``range(d_{p-1})``.
    """
    if p < 1:
        raise ValueError("exact forms start in degree 1")
    if method == "duality":
        r = coexact_spectrum(WC, p - 1, k)
        r.kind, r.degree = "exact", p
        return r
    if method != "projection":
        raise ValueError("method must be 'duality' or 'projection'")
    Z = _range_basis(as_dense(WC.d(p - 1)))
    L = hodge_laplacian_matrix(WC, p)
    M = as_dense(WC.mass[p])
    A, B = Z.T @ L @ Z, Z.T @ M @ Z
    lam, V = eig_gen_sym(A, B, min(k, Z.shape[1]))
    res = pencil_residuals(L, M, lam, Z @ V)
    return SpectrumResult(p, "exact", lam, res, WC.complex.describe(), str(WC.f), WC.complex.mesh_size())


def full_spectrum(WC: WeightedComplex, p: int, k: int) -> SpectrumResult:
    """Smallest ``k`` eigenpairs of the full weighted Hodge pencil (harmonic zeros included)."""
    L = hodge_laplacian_matrix(WC, p)
    lam, V = eig_gen_sym(L, WC.mass[p], min(k, WC.complex.count(p)))
    return SpectrumResult(p, "full", lam, pencil_residuals(L, WC.mass[p], lam, V), WC.complex.describe(),
                          str(WC.f), WC.complex.mesh_size(), 0, V)


def check_duality(WC: WeightedComplex, tol: float = 1e-7) -> list[dict]:
    """Both duality identities for the first eigenvalues across all valid degrees.

    First: co-exact p against exact p+1. Second: co-exact p against exact n-p.
    Exact eigenvalues come from the projection route.
    """
    n = WC.top_dim
    coex = {p: coexact_spectrum(WC, p, 1).eigenvalues[0] for p in range(n)}
    ex = {q: exact_spectrum(WC, q, 1, "projection").eigenvalues[0] for q in range(1, n + 1)}
    out = []
    for p in range(n):
        for ident, q in (("coexact_p=exact_p+1", p + 1), ("coexact_p=exact_n-p", n - p)):
            a, b = float(coex[p]), float(ex[q])
            rel = abs(a - b) / max(abs(a), abs(b))
            out.append({"identity": ident, "p": p, "coexact": a, "exact": b, "exact_degree": q,
                        "rel_diff": rel, "tolerance": tol, "passed": bool(rel <= tol)})
    return out


# ---------------------------------------------------------------------------
# Steklov spectrum on co-closed boundary forms


def _coclosed_basis(WB: WeightedComplex, p: int, include_harmonic: bool) -> np.ndarray:
    """Orthonormal basis of the discretely co-closed p-cochains of the boundary."""
    n = WB.top_dim
    N = WB.complex.count(p)
    M = as_dense(WB.mass[p])
    if include_harmonic:
        if p == 0:
            return np.eye(N)
        C = as_dense(WB.d(p - 1)).T @ M
        return sla.null_space(C, rcond=1e-10)
    if p >= n:
        return np.zeros((N, 0))
    # co-exact cochains: range of M^{-1} d_p^T
    return _range_basis(WB.solver(p).solve(as_dense(WB.d(p)).T))


def _boundary_complex(WC: WeightedComplex):
    bm = meshmod.boundary_complex(WC.complex)
    if bm.is_empty:
        raise ValueError("complex has no boundary")
    return bm


def steklov_spectrum(WC: WeightedComplex, p: int, k: int, include_harmonic: bool = True,
                     reg: float = 1e-8) -> SteklovResult:
    """Dirichlet-to-Neumann eigenvalues on co-closed boundary p-forms.

    The weighted stiffness is condensed onto the boundary trace unknowns
    (Schur complement; the interior block is regularized by ``reg`` times its
    mass block, relative to the trace ratio, since it is singular for p >= 1).
    The condensed form is restricted to the co-closed boundary cochains and
    solved against the weighted boundary mass.
    """
    K = WC.complex
    if p > K.top_dim - 1:
        raise ValueError("Steklov degree must be below the top degree")
    bm = _boundary_complex(WC)
    WB = assemble(bm.boundary, WC.f, WC.quad_order)
    A = stiffness(WC, p).tocsr()
    M = WC.mass[p].tocsr()
    bidx = np.asarray(bm.inclusion[p])
    bsign = np.asarray(bm.inclusion_sign[p], dtype=float)
    mask = np.ones(K.count(p), dtype=bool)
    mask[bidx] = False
    iidx = np.nonzero(mask)[0]
    Abb = as_dense(A[bidx][:, bidx])
    if len(iidx):
        Aii = A[iidx][:, iidx]
        Mii = M[iidx][:, iidx]
        eps = reg * Aii.diagonal().sum() / Mii.diagonal().sum() if p >= 1 else 0.0
        try:
            lu = spla.splu(sp.csc_matrix(Aii + eps * Mii))
        except RuntimeError as exc:
            raise SolveFailure(str(exc)) from exc
        Aib = as_dense(A[iidx][:, bidx])
        S = Abb - Aib.T @ lu.solve(Aib)
    else:
        S = Abb
    S = bsign[:, None] * S * bsign[None, :]
    S = 0.5 * (S + S.T)
    Q = _coclosed_basis(WB, p, include_harmonic)
    if Q.shape[1] == 0:
        raise EmptyCoclosedSpace(f"no co-closed boundary {p}-cochains")
    Mb = as_dense(WB.mass[p])
    SQ, MQ = Q.T @ S @ Q, Q.T @ Mb @ Q
    lam, V = eig_gen_sym(SQ, MQ, min(k, Q.shape[1]))
    res = pencil_residuals(SQ, MQ, lam, V)
    return SteklovResult(p, lam, res, bm.boundary.describe() + f"<{K.describe()}>", str(WC.f),
                         include_harmonic, len(bidx), Q.shape[1])


def coclosed_boundary_spectrum(WB: WeightedComplex, p: int, k: int, include_harmonic: bool = True) -> np.ndarray:
    """Weighted Hodge eigenvalues restricted to co-closed p-cochains of a closed complex."""
    Q = _coclosed_basis(WB, p, include_harmonic)
    if Q.shape[1] == 0:
        raise EmptyCoclosedSpace(f"no co-closed {p}-cochains")
    L = hodge_laplacian_matrix(WB, p)
    M = as_dense(WB.mass[p])
    lam, _ = eig_gen_sym(Q.T @ L @ Q, Q.T @ M @ Q, min(k, Q.shape[1]))
    return lam


# ---------------------------------------------------------------------------
# theorem checks on balls and shells


def _domain_for(name: str) -> FlatDomain:
    if name == "ball3":
        return FlatDomain.ball(3)
    if name == "annulus3":
        return FlatDomain.annulus(3)
    if name == "disc":
        return FlatDomain.ball(2)
    raise ValueError(f"unsupported domain {name!r}")


def _mesh_for(name: str, level: int):
    if name == "ball3":
        return meshmod.ball3(level)
    if name == "annulus3":
        return meshmod.annulus3(level)
    if name == "disc":
        return meshmod.disc(level)
    raise ValueError(f"unsupported domain {name!r}")


def _boundary_mesh_for(name: str, level: int):
    """Boundary complex of the domain mesh without building the interior when possible."""
    if name == "ball3":
        return meshmod.icosphere(level)
    return meshmod.boundary_complex(_mesh_for(name, level)).boundary


def sigma_p(domain: FlatDomain, p: int) -> float:
    """Smallest sum of p principal curvatures over all boundary components."""
    return min(sum(sorted(c.principal_curvatures)[:p]) for c in domain.components)


def min_curvature(domain: FlatDomain) -> float:
    return min(min(c.principal_curvatures) for c in domain.components)


def _sample_points(domain: FlatDomain, order: int = 8) -> np.ndarray:
    return quad_domain(domain, order).points


def _hessian_min_sum(f: ScalarField, x: np.ndarray, q: int) -> float:
    """Smallest sum of q Hessian eigenvalues of f over the sample points."""
    if q <= 0:
        return 0.0
    H = eval_jet2(f, x, 2).hess
    ev = np.linalg.eigvalsh(H)
    return float(np.min(np.sum(ev[:, :q], axis=1)))


def _weitzenbock_fV_min(f: ScalarField, V: ScalarField, x: np.ndarray, p: int) -> float:
    """Smallest eigenvalue of ``V (Hess f)^[p] + (Delta_f V) + (Hess V)^[p]`` over samples (flat)."""
    fj, Vj = eval_jet2(f, x, 2), eval_jet2(V, x, 2)
    lap_f_V = -np.trace(Vj.hess, axis1=-2, axis2=-1) + np.sum(fj.grad * Vj.grad, axis=-1)
    T = Vj.value[:, None, None] * fj.hess + Vj.hess
    ev = np.linalg.eigvalsh(T)
    low = np.sum(ev[:, :p], axis=1) if p > 0 else np.zeros(len(x))
    return float(np.min(low + lap_f_V))


def _inf_f_N(f: ScalarField, domain: FlatDomain, order: int = 12) -> float:
    B = quad_boundary(domain, order)
    g = eval_jet2(f, B.points, 1).grad
    return float(np.min(np.sum(g * B.normals, axis=-1)))


def _sup_grad(f: ScalarField, domain: FlatDomain, order: int = 12) -> float:
    pts = np.concatenate([quad_domain(domain, order).points, quad_boundary(domain, order).points])
    g = eval_jet2(f, pts, 1).grad
    return float(np.max(np.linalg.norm(g, axis=-1)))


def _sup_lnV_N(V: ScalarField, domain: FlatDomain, order: int = 12) -> float:
    B = quad_boundary(domain, order)
    Vj = eval_jet2(V, B.points, 1)
    return float(np.max(np.sum(Vj.grad * B.normals, axis=-1) / Vj.value))


def _parse(f, dim: int) -> ScalarField:
    if isinstance(f, ScalarField):
        return f
    return parse_field(str(f), dim)


def check_theorem(case: str, domain: str = "ball3", p: int = 1, f="0", V="1", level: int = 3,
                  k: int = 5, quad_order: int = 4, tol_rel: float = 0.02, include_harmonic: bool = True,
                  strict: bool = True) -> TheoremCheck:
    """Checks one of the boundary eigenvalue theorems on a meshed ball or shell.

    Hypothesis constants come from the smooth domain (principal curvatures
    analytic, weight quantities sampled on quadrature nodes). With
    ``strict`` a failed hypothesis raises :class:`HypothesisViolated` carrying
    the report.
    """
    dom = _domain_for(domain)
    D = dom.dim
    n = D - 1
    f = _parse(f, D)
    V = _parse(V, D)
    samples = _sample_points(dom)
    if case == "thm1.2":
        if not 1 <= p <= n:
            raise ValueError("thm1.2 needs 1 <= p <= n")
        hyps = {"sigma_p": (sigma_p(dom, p), "analytic"),
                "sigma_n-p+1": (sigma_p(dom, n - p + 1), "analytic"),
                "inf_f_N": (_inf_f_N(f, dom), "sampled"),
                "min_W_f_p": (_hessian_min_sum(f, samples, p), "sampled")}
        s1, s2, fN = hyps["sigma_p"][0], hyps["sigma_n-p+1"][0], hyps["inf_f_N"][0]
        ok = s2 + fN > 0 and hyps["min_W_f_p"][0] >= -1e-10 and s1 >= 0
        bound = s1 * (s2 + fN)
        WB = assemble(_boundary_mesh_for(domain, level), f, quad_order)
        lam = coexact_spectrum(WB, p - 1, 1).eigenvalues[0]
        details = {"lambda_exact_1p": float(lam), "ratio": float(lam / bound) if bound else None,
                   "boundary_mesh": WB.complex.describe(), "h": WB.complex.mesh_size()}
        chk = _decide(case, hyps, lam, bound, tol_rel, ok, details)
    elif case == "thm1.3":
        K = _mesh_for(domain, level)
        b = meshmod.betti(K)[p]
        hyps = {"sigma_p": (sigma_p(dom, p), "analytic"),
                "sup_lnV_N": (_sup_lnV_N(V, dom), "sampled"),
                "min_W_fV_p": (_weitzenbock_fV_min(f, V, samples, p), "sampled")}
        ok = hyps["sigma_p"][0] > hyps["sup_lnV_N"][0] and hyps["min_W_fV_p"][0] >= -1e-10
        # b_p must vanish whenever the strict hypothesis holds
        chk = TheoremCheck(case, hyps, float(b), 0.0, float(-b), 0.0, bool(ok and b == 0), bool(ok),
                           {"betti": meshmod.betti(K), "mesh": K.describe()})
    elif case in ("thm1.5", "thm1.6"):
        lo = 1
        hi = n if case == "thm1.5" else n - 1
        if not lo <= p <= hi:
            raise ValueError(f"{case} needs {lo} <= p <= {hi}")
        c = min_curvature(dom)
        hyps = {"c": (c, "analytic"), "min_W_f_p+1": (_hessian_min_sum(f, samples, p + 1), "sampled")}
        ok = c > 0 and hyps["min_W_f_p+1"][0] >= -1e-10
        WC = assemble(_mesh_for(domain, level), f, quad_order)
        st = steklov_spectrum(WC, p, max(k, 2), include_harmonic)
        sig = st.eigenvalues
        if case == "thm1.5":
            nonzero = sig[sig > ZERO_REL * max(sig.max(), 1.0)]
            first = float(nonzero[0])
            bound = (p + 1) * c
            chk = _decide(case, hyps, first, bound, tol_rel, ok,
                          {"sigma": sig, "residuals": st.residuals, "mesh": WC.complex.describe(),
                           "include_harmonic": include_harmonic})
        else:
            sg = _sup_grad(f, dom)
            hyps["sup_grad_f"] = (sg, "sampled")
            denom = (n - p) * c - sg
            ok = ok and denom > 0
            WB = assemble(meshmod.boundary_complex(WC.complex).boundary, f, quad_order)
            lam = coclosed_boundary_spectrum(WB, p, k, include_harmonic)
            factor = 1.0 / denom if denom > 0 else float("inf")
            bounds = factor * lam[:k]
            sig = sig[:k]
            margins = bounds - sig
            worst = int(np.argmin(margins / np.maximum(np.abs(bounds), 1e-300)))
            chk = _decide(case, hyps, sig[worst], bounds[worst], tol_rel, ok,
                          {"sigma": sig, "lambda": lam[:k], "factor": factor, "bounds": bounds,
                           "worst_k": worst + 1, "mesh": WC.complex.describe()})
            chk.passed = bool(ok and np.all(margins >= -tol_rel * np.abs(bounds)))
    else:
        raise ValueError(f"unknown theorem case {case!r}")
    chk.details.update({"domain": domain, "p": p, "weight": str(f), "level": level})
    if strict and not chk.hypothesis_ok:
        raise HypothesisViolated(f"{case}: hypotheses fail on {domain} for p={p}", chk)
    return chk


# ---------------------------------------------------------------------------
# closed submanifolds: Levitin-Parnovski type inequality


@dataclass(frozen=True)
class Embedding:
    """A closed isometric embedding with closed-form curvature data.

    ``chart`` gives the embedding coordinates as fields of the chart
    variables; ``mesh_coords`` says whether meshes live in the ambient space
    (curves and spheres) or in the flat chart (tori).
    """

    name: str
    m: int
    M: int
    chart: tuple
    f: ScalarField
    radii: tuple
    mesh_coords: str

    @property
    def mean_curvature2(self) -> float:
        if self.name in ("circle", "sphere"):
            return 1.0 / self.radii[0] ** 2
        if self.name == "clifford":
            r1, r2 = self.radii
            return (1 / r1 ** 2 + 1 / r2 ** 2) / 4.0
        raise CurvatureUnavailable(self.name)

    def weitzenbock_coefficient(self, p: int) -> float:
        """``W^[p] = c Id``: ``p (m-p) / R^2`` on round spheres, zero on flat tori."""
        if self.name in ("circle", "sphere"):
            return p * (self.m - p) / self.radii[0] ** 2
        if self.name == "clifford":
            return 0.0
        raise CurvatureUnavailable(self.name)

    def mesh(self, level: int):
        if self.name == "circle":
            K = meshmod.circle(level)
            return _scaled(K, self.radii[0])
        if self.name == "sphere":
            return _scaled(meshmod.icosphere(level), self.radii[0])
        if self.name == "clifford":
            r1, r2 = self.radii
            return meshmod.flat_torus(level, level, periods=(2 * np.pi * r1, 2 * np.pi * r2))
        raise UnsupportedEmbedding(self.name)

    def mesh_weight(self) -> ScalarField:
        if self.mesh_coords == "ambient":
            return self.f
        return self.f.compose(list(self.chart))

    def ambient_point(self, xm: np.ndarray) -> np.ndarray:
        """Point of the smooth submanifold associated with mesh coordinates."""
        if self.mesh_coords == "ambient":
            r = np.linalg.norm(xm, axis=-1, keepdims=True)
            return self.radii[0] * xm / r
        return np.stack([eval_jet2(X, xm, 0).value for X in self.chart], axis=-1)

    def mean_curvature_vector(self, x: np.ndarray) -> np.ndarray:
        if self.name in ("circle", "sphere"):
            return -x / self.radii[0] ** 2
        if self.name == "clifford":
            r1, r2 = self.radii
            return -0.5 * np.concatenate([x[..., :2] / r1 ** 2, x[..., 2:] / r2 ** 2], axis=-1)
        raise CurvatureUnavailable(self.name)

    def tangent_projector(self, x: np.ndarray) -> np.ndarray:
        if self.name in ("circle", "sphere"):
            u = x / np.linalg.norm(x, axis=-1, keepdims=True)
            return np.eye(self.M) - u[..., :, None] * u[..., None, :]
        if self.name == "clifford":
            P = np.zeros(x.shape[:-1] + (4, 4))
            for blk in ((0, 1), (2, 3)):
                a = x[..., list(blk)]
                t = np.stack([-a[..., 1], a[..., 0]], axis=-1) / np.linalg.norm(a, axis=-1, keepdims=True)
                for i, bi in enumerate(blk):
                    for j, bj in enumerate(blk):
                        P[..., bi, bj] = t[..., i] * t[..., j]
            return P
        raise CurvatureUnavailable(self.name)

    def intrinsic_weight_data(self, xm: np.ndarray) -> dict:
        """Intrinsic gradient norm, Hessian (in mesh coordinates) and ``Delta_f f`` of the weight."""
        if self.mesh_coords == "chart":
            fj = eval_jet2(self.mesh_weight(), xm, 2)
            grad2 = np.sum(fj.grad ** 2, axis=-1)
            H = fj.hess
        else:
            x = self.ambient_point(xm)
            fj = eval_jet2(self.f, x, 2)
            P = self.tangent_projector(x)
            g = fj.grad
            gt = np.einsum("...ab,...b->...a", P, g)
            grad2 = np.sum(gt ** 2, axis=-1)
            # Hess_M f = P Hess f P + <grad f, II>, with II(X, Y) = -<X, Y> x / R^2 on round spheres
            radial = np.sum(g * x, axis=-1) / self.radii[0] ** 2
            H = P @ fj.hess @ P - radial[..., None, None] * P
        lap = -np.trace(H, axis1=-2, axis2=-1)
        return {"grad2": grad2, "hess": H, "lap_f_f": lap + grad2}


def _scaled(K, R: float):
    if R == 1.0:
        return K
    return meshmod.build_complex(K.ambient_dim, K.vertices * R, _oriented_tops(K), shape=K.shape,
                                 level=K.level, params=K.params + (R,))


def _oriented_tops(K) -> np.ndarray:
    tops = K.simplices[K.top_dim].copy()
    flip = K.orientation < 0
    if K.top_dim >= 1:
        tops[flip, 0], tops[flip, 1] = K.simplices[K.top_dim][flip, 1], K.simplices[K.top_dim][flip, 0]
    return tops


def circle_embedding(radius: float = 1.0, f="0") -> Embedding:
    u = coord(0)
    return Embedding("circle", 1, 2, (radius * cos(u / radius), radius * sin(u / radius)),
                     _parse(f, 2), (radius,), "ambient")


def sphere_embedding(radius: float = 1.0, f="0") -> Embedding:
    th, ph = coord(0), coord(1)
    chart = (radius * sin(th) * cos(ph), radius * sin(th) * sin(ph), radius * cos(th))
    return Embedding("sphere", 2, 3, chart, _parse(f, 3), (radius,), "ambient")


def clifford_embedding(r1: float = 2 ** -0.5, r2: float = 2 ** -0.5, f="0") -> Embedding:
    u, v = coord(0), coord(1)
    chart = (r1 * cos(u / r1), r1 * sin(u / r1), r2 * cos(v / r2), r2 * sin(v / r2))
    return Embedding("clifford", 2, 4, chart, _parse(f, 4), (r1, r2), "chart")


def make_embedding(name: str, f="0", **kw) -> Embedding:
    if name == "circle":
        return circle_embedding(kw.get("radius", 1.0), f)
    if name == "sphere":
        return sphere_embedding(kw.get("radius", 1.0), f)
    if name == "clifford":
        return clifford_embedding(kw.get("r1", 2 ** -0.5), kw.get("r2", 2 ** -0.5), f)
    raise UnsupportedEmbedding(name)


def lp_check(emb: Embedding, p: int, j: int, level: int, quad_order: int = 6,
             tol_rel: float = 0.0) -> TheoremCheck:
    """Sum of m consecutive eigenvalues against the universal bound, on a mesh of the embedding."""
    if emb.name == "sphere" and p not in (0, 1):
        raise CurvatureUnavailable("round sphere support is limited to p in {0, 1}")
    if not 0 <= p <= emb.m:
        raise ValueError("degree out of range")
    m = emb.m
    K = emb.mesh(level)
    WC = assemble(K, emb.mesh_weight(), quad_order)
    spec = full_spectrum(WC, p, j + m)
    lam = spec.eigenvalues
    w = spec.vectors[:, j - 1]
    geo = cell_geometry(K)
    Q = cell_quadrature(K, quad_order, geo)
    W = whitney_on_cells(K, w, p, Q.cells, Q.bary, geo).values_only()
    wdata = emb.intrinsic_weight_data(Q.points)
    dens = np.exp(-eval_jet2(emb.mesh_weight(), Q.points, 0).value) * Q.weights
    w2 = W.norm2()
    Wf = W.scaled(emb.weitzenbock_coefficient(p))
    if p > 0:
        Wf = Wf + induced(wdata["hess"], W)
    integrand = (m * m * emb.mean_curvature2 + wdata["grad2"]) * w2 - 4.0 * Wf.inner(W)
    integral = float(np.sum(integrand * dens))
    sup_lap = float(np.max(wdata["lap_f_f"]))
    bound = (m + 4) * lam[j - 1] + 2 * sup_lap + integral
    computed = float(np.sum(lam[j:j + m]))
    # rewritten curvature term at the quadrature nodes
    x = emb.ambient_point(Q.points)
    g = eval_jet2(emb.f, x, 1).grad
    P = emb.tangent_projector(x)
    gt = np.einsum("...ab,...b->...a", P, g)
    Hv = emb.mean_curvature_vector(x)
    Hf = Hv + (g - gt) / m
    rewrite = np.max(np.abs(np.sum((m * Hf - g) ** 2, axis=-1) - (m * m * emb.mean_curvature2 + np.sum(gt ** 2, axis=-1))))
    hyps = {"m": (m, "analytic"), "mean_curvature2": (emb.mean_curvature2, "analytic"),
            "sup_lap_f_f": (sup_lap, "sampled"), "W_coefficient": (emb.weitzenbock_coefficient(p), "analytic")}
    chk = _decide("thm1.7", hyps, computed, bound, tol_rel, True,
                  {"eigenvalues": lam, "j": j, "p": p, "integral": integral, "norm_omega_j": float(np.sum(w2 * dens)),
                   "rewrite_residual": float(rewrite), "mesh": K.describe(), "embedding": emb.name,
                   "weight": str(emb.f), "residuals": spec.residuals})
    return chk


def _chart_metric_data(emb: Embedding, u: np.ndarray):
    """Metric, inverse, Christoffel symbols and embedding jets at chart points."""
    jets = [eval_jet2(X, u, 2) for X in emb.chart]
    dX = np.stack([j.grad for j in jets], axis=-2)        # (..., M, m)
    d2X = np.stack([j.hess for j in jets], axis=-3)       # (..., M, m, m)
    g = np.einsum("...li,...lj->...ij", dX, dX)
    ginv = np.linalg.inv(g)
    # Gamma^k_ij = g^{kl} <d_l X, d_ij X>
    Gam = np.einsum("...kl,...al,...aij->...kij", ginv, dX, d2X)
    return jets, dX, d2X, g, ginv, Gam


def trace_identities(emb: Embedding, omega: PFormField | None = None, points=None, seed: int = 0,
                     n_points: int = 40) -> dict:
    """The three trace identities behind the universal inequality, pointwise in chart coordinates."""
    m = emb.m
    rng = np.random.default_rng(seed)
    if points is None:
        if emb.name == "sphere":
            points = np.stack([np.arccos(rng.uniform(-0.9, 0.9, n_points)), rng.uniform(0, 2 * np.pi, n_points)], 1)
        else:
            scale = 2 * np.pi * np.asarray(emb.radii[:m])
            points = rng.uniform(0, 1, (n_points, m)) * scale
    u = np.asarray(points, dtype=float)
    jets, dX, d2X, g, ginv, Gam = _chart_metric_data(emb, u)
    fc = emb.f.compose(list(emb.chart))
    fj = eval_jet2(fc, u, 1)
    # sum_l |grad X_l|^2 = m
    grad_sq = np.einsum("...ij,...li,...lj->...", ginv, dX, dX)
    r1 = float(np.max(np.abs(grad_sq - m)))
    # sum_l (Delta_f X_l)^2 = m^2 |H|^2 + |grad f|^2
    lapX = -np.einsum("...ij,...lij->...l", ginv, d2X) + np.einsum("...ij,...kij,...lk->...l", ginv, Gam, dX)
    lapfX = lapX + np.einsum("...ij,...i,...lj->...l", ginv, fj.grad, dX)
    lhs2 = np.sum(lapfX ** 2, axis=-1)
    rhs2 = m * m * emb.mean_curvature2 + np.einsum("...ij,...i,...j->...", ginv, fj.grad, fj.grad)
    r2 = float(np.max(np.abs(lhs2 - rhs2)))
    # sum_l |nabla_{grad X_l} w|^2 = |nabla w|^2 for a chart form
    if omega is None:
        uu = [coord(i) for i in range(m)]
        comps = {(0,): sin(uu[0]) + 0.5 * cos(uu[m - 1]) + const(0.3)}
        if m > 1:
            comps[(1,)] = cos(uu[0]) * sin(uu[1]) + const(0.2)
        omega = PFormField(1, m, comps)
    p = omega.degree
    idx = increasing(m, p)
    comps = [eval_jet2(omega.component(I), u, 1) for I in idx]

    def comp_full(J):
        s, key = sort_sign(J)
        if s == 0:
            return None
        return s, idx.index(key)

    # covariant derivative components nab[..., i, I]
    nab = np.zeros(u.shape[:-1] + (m, len(idx)))
    for a, I in enumerate(idx):
        for i in range(m):
            val = comps[a].grad[..., i].copy()
            for slot, js in enumerate(I):
                for kk in range(m):
                    J = I[:slot] + (kk,) + I[slot + 1:]
                    cf = comp_full(J)
                    if cf is None:
                        continue
                    val = val - Gam[..., kk, i, js] * cf[0] * comps[cf[1]].value
            nab[..., i, a] = val
    # metric on p-forms
    Gp = np.zeros(u.shape[:-1] + (len(idx), len(idx)))
    for a, I in enumerate(idx):
        for b, J in enumerate(idx):
            Gp[..., a, b] = np.linalg.det(ginv[..., list(I), :][..., :, list(J)]) if p else 1.0
    rhs3 = np.einsum("...ik,...ia,...ab,...kb->...", ginv, nab, Gp, nab)
    gradX = np.einsum("...ij,...lj->...li", ginv, dX)      # (..., M, m): components of grad X_l
    dirs = np.einsum("...li,...ia->...la", gradX, nab)
    lhs3 = np.einsum("...la,...ab,...lb->...", dirs, Gp, dirs)
    r3 = float(np.max(np.abs(lhs3 - rhs3)))
    return {"embedding": emb.name, "weight": str(emb.f), "n_points": int(len(u)), "seed": seed,
            "grad_X_sum_minus_m": r1, "lap_f_X_squares": r2, "directional_sum": r3,
            "max_residual": max(r1, r2, r3)}


# ---------------------------------------------------------------------------
# refinement studies


def richardson(hs, values, rate: float | None = 2.0) -> float:
    """Richardson extrapolation of the finest values to ``h -> 0``.

    With ``rate=None`` the rate is estimated from the last three levels.
    """
    hs, vals = np.asarray(hs, dtype=float), np.asarray(values, dtype=float)
    if rate is None:
        if len(vals) < 3:
            raise ValueError("rate estimation needs three levels")
        d1, d2 = vals[-2] - vals[-3], vals[-1] - vals[-2]
        rate = float(np.log(abs(d1 / d2)) / np.log(hs[-2] / hs[-1]))
    r = (hs[-2] / hs[-1]) ** rate
    return float(vals[-1] + (vals[-1] - vals[-2]) / (r - 1.0))


def convergence_sweep(shape: str, levels, p: int = 0, k: int = 5, f="0", quad_order: int = 4,
                      kind: str = "coexact") -> list[dict]:
    """One row per level: mesh size and the first ``k`` eigenvalues."""
    rows = []
    for lev in levels:
        K = meshmod.generate(shape, lev)
        WC = assemble(K, f, quad_order)
        if kind == "coexact":
            r = coexact_spectrum(WC, p, k)
        else:
            r = full_spectrum(WC, p, k)
        rows.append({"level": int(lev), "h": K.mesh_size(), "eigenvalues": [float(x) for x in r.eigenvalues]})
    return rows
