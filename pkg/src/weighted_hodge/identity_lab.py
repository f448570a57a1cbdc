"""Numerical verification of the pointwise and integral identities.

Each check evaluates the two sides of an identity along separate code paths
(operator composition on jets versus direct coefficient formulas, interior
quadrature versus boundary quadrature, ambient jets versus intrinsic chart
calculus) and reports the residual.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .fields import (Jet, PFormField, ScalarField, eval_jet2, increasing,
                     random_form, random_polynomial)
from .quadrature import FlatDomain, QuadratureRule, quad_boundary, quad_domain
from .smooth_ops import (FormValue, SphereChart, chart_boundary_calculus,
                         directional, evaluate_form, ext_d, frame_components, gradient,
                         hodge_laplacian_value, hodge_star, induced, interior,
                         laplacian_f_scalar, rough_laplacian_value, tangent_frame,
                         weighted_codiff, wedge, NonpositiveV)

DEFAULT_TOL = 1e-8


@dataclass
class IdentityReport:
    """Both sides of one identity and their residual.

    For pointwise checks ``lhs``/``rhs`` are the largest absolute coefficients
    of each side over the sample points and ``abs_residual`` the largest
    coefficient of their difference.
    """

    identity_id: str
    lhs: float
    rhs: float
    abs_residual: float
    rel_residual: float
    tolerance: float
    passed: bool
    domain: str = "R^D"
    quad_order: int | None = None
    seed: int | None = None
    n_points: int | None = None
    terms: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def make_report(identity_id: str, lhs: float, rhs: float, abs_residual: float | None = None,
                tol: float = DEFAULT_TOL, **kw) -> IdentityReport:
    lhs, rhs = float(lhs), float(rhs)
    res = abs(lhs - rhs) if abs_residual is None else float(abs_residual)
    rel = res / max(1.0, abs(lhs), abs(rhs))
    return IdentityReport(identity_id, lhs, rhs, res, rel, tol, bool(rel <= tol), **kw)


def _pointwise(identity_id: str, L: FormValue, R: FormValue, tol: float, points, seed=None) -> IdentityReport:
    a, b = L.array(), R.array()
    if a.size == 0:
        return make_report(identity_id, 0.0, 0.0, 0.0, tol, n_points=len(points), seed=seed,
                           domain=f"R^{np.shape(points)[-1]}")
    return make_report(identity_id, np.max(np.abs(a)), np.max(np.abs(b)), np.max(np.abs(a - b)), tol,
                       n_points=len(points), seed=seed, domain=f"R^{np.shape(points)[-1]}")


def _vector_jets(F: Sequence[ScalarField], x, order=2) -> list[Jet]:
    return [eval_jet2(Fa, x, order) for Fa in F]


def _vals(js: Sequence[Jet]) -> list[np.ndarray]:
    return [j.value for j in js]


# ---------------------------------------------------------------------------
# pointwise identities


def check_bochner(omega: PFormField, f: ScalarField, points, tol: float = 1e-10, seed=None) -> IdentityReport:
    """Weighted Hodge Laplacian against rough Laplacian plus Hessian term."""
    x = np.atleast_2d(points)
    w, fj = evaluate_form(omega, x, 2), eval_jet2(f, x, 2)
    L = hodge_laplacian_value(w, fj)
    R = rough_laplacian_value(w, fj) + induced(fj.hess, w.values_only())
    return _pointwise("bochner", L, R, tol, x, seed)


def check_scalar_bochner(omega: PFormField, f: ScalarField, points, tol: float = 1e-10, seed=None) -> IdentityReport:
    """``1/2 Delta_f |w|^2 = <Delta_f^H w, w> - <W_f w, w> - |nabla w|^2``."""
    x = np.atleast_2d(points)
    w, fj = evaluate_form(omega, x, 2), eval_jet2(f, x, 2)
    sq = None
    for c in w.comps.values():
        sq = c * c if sq is None else sq + c * c
    lhs = 0.5 * laplacian_f_scalar(sq, fj)
    wv = w.values_only()
    grad_sq = sum(np.sum(c.grad ** 2, axis=-1) for c in w.comps.values())
    rhs = hodge_laplacian_value(w, fj).inner(wv) - induced(fj.hess, wv).inner(wv) - grad_sq
    return make_report("scalar_bochner", np.max(np.abs(lhs)), np.max(np.abs(rhs)),
                       np.max(np.abs(lhs - rhs)), tol, n_points=len(x), seed=seed, domain=f"R^{x.shape[-1]}")


def check_cartan(omega: PFormField, f: ScalarField, points, tol: float = 1e-10, seed=None) -> IdentityReport:
    """``d i_grad f + i_grad f d = nabla_grad f + (Hess f)^[p]``."""
    x = np.atleast_2d(points)
    w, fj = evaluate_form(omega, x, 2), eval_jet2(f, x, 2)
    gf = gradient(fj)
    D, p = omega.dim, omega.degree
    L = FormValue(p, D, {}, w.shape)
    if p >= 1:
        L = L + ext_d(interior(gf, w))
    if p < D:
        L = L + interior(_vals(gf), ext_d(w))
    R = directional(_vals(gf), w) + induced(fj.hess, w.values_only())
    return _pointwise("cartan", L.values_only(), R.values_only(), tol, x, seed)


def check_contraction(omega: PFormField, F: Sequence[ScalarField], points, tol: float = 1e-10,
                      seed=None) -> IdentityReport:
    """``d(i_F w) = -i_F(dw) + nabla_F w + (nabla F)(w)``."""
    x = np.atleast_2d(points)
    w = evaluate_form(omega, x, 2)
    Fj = _vector_jets(F, x, 2)
    D, p = omega.dim, omega.degree
    if p == 0:
        raise ValueError("contraction identity needs p >= 1")
    L = ext_d(interior(Fj, w))
    R = directional(_vals(Fj), w) + induced([[Fj[a].grad[..., b] for b in range(D)] for a in range(D)],
                                            w.values_only())
    if p < D:
        R = R - interior(_vals(Fj), ext_d(w))
    return _pointwise("contraction", L.values_only(), R.values_only(), tol, x, seed)


def check_wedge(omega: PFormField, f: ScalarField, V: ScalarField, points, tol: float = 1e-10,
                seed=None) -> list[IdentityReport]:
    """The two wedge identities for ``dV ^ w`` (interior product and weighted codifferential)."""
    x = np.atleast_2d(points)
    w, fj, Vj = evaluate_form(omega, x, 2), eval_jet2(f, x, 2), eval_jet2(V, x, 2)
    D, p = omega.dim, omega.degree
    if p >= D:
        raise ValueError("wedge identities need p < D")
    gf, gV = gradient(fj), gradient(Vj)
    dV = FormValue(1, D, {(A,): gV[A] for A in range(D)}, w.shape)
    dVw = wedge(dV, w)
    wv = w.values_only()
    # interior identity
    L1 = interior(_vals(gf), dVw.values_only())
    R1 = wv.scaled(np.sum(Vj.grad * fj.grad, axis=-1))
    if p >= 1:
        R1 = R1 - wedge(dV.values_only(), interior(_vals(gf), wv))
    rep1 = _pointwise("wedge_interior", L1, R1.values_only(), tol, x, seed)
    # weighted codifferential identity
    L2 = weighted_codiff(dVw, gf).values_only()
    R2 = (wv.scaled(laplacian_f_scalar(Vj, fj)) - directional(_vals(gV), w)
          + induced(Vj.hess, wv))
    if p >= 1:
        R2 = R2 - wedge(dV.values_only(), weighted_codiff(w, _vals(gf)).values_only())
    rep2 = _pointwise("wedge_codiff", L2, R2.values_only(), tol, x, seed)
    return [rep1, rep2]


def check_commutator(G: ScalarField, omega: PFormField, f: ScalarField, points, tol: float = 1e-10,
                     seed=None) -> IdentityReport:
    """``[Delta_f^H, G] w = (Delta_f G) w - 2 nabla_grad G w``."""
    x = np.atleast_2d(points)
    w, fj, Gj = evaluate_form(omega, x, 2), eval_jet2(f, x, 2), eval_jet2(G, x, 2)
    L = hodge_laplacian_value(w.scaled(Gj), fj) - hodge_laplacian_value(w, fj).scaled(Gj.value)
    R = w.values_only().scaled(laplacian_f_scalar(Gj, fj)) - directional(list(Gj.grad[..., a] for a in range(omega.dim)), w).scaled(2.0)
    return _pointwise("commutator", L, R.values_only(), tol, x, seed)


# ---------------------------------------------------------------------------
# random cases


@dataclass(frozen=True)
class PointwiseCase:
    dim: int
    degree: int
    omega: PFormField
    f: ScalarField
    V: ScalarField
    G: ScalarField
    F: tuple
    points: np.ndarray
    seed: int


def random_pointwise_case(seed: int, dim: int, degree: int | None = None, poly_degree: int = 3,
                          n_points: int = 10) -> PointwiseCase:
    rng = np.random.default_rng(seed)
    p = int(rng.integers(0, dim + 1)) if degree is None else degree
    omega = random_form(rng, p, dim, poly_degree, 0.5)
    f = random_polynomial(rng, dim, 2, 0.5)
    V = random_polynomial(rng, dim, 2, 0.3) + 2.0
    G = random_polynomial(rng, dim, 3, 0.5)
    F = tuple(random_polynomial(rng, dim, 2, 0.5) for _ in range(dim))
    pts = rng.uniform(-1.0, 1.0, size=(n_points, dim))
    return PointwiseCase(dim, p, omega, f, V, G, F, pts, seed)


def pointwise_suite(case: PointwiseCase, tol: float = 1e-10) -> list[IdentityReport]:
    c = case
    reps = [check_bochner(c.omega, c.f, c.points, tol, c.seed),
            check_scalar_bochner(c.omega, c.f, c.points, tol, c.seed),
            check_cartan(c.omega, c.f, c.points, tol, c.seed),
            check_commutator(c.G, c.omega, c.f, c.points, tol, c.seed)]
    if c.degree >= 1:
        reps.append(check_contraction(c.omega, c.F, c.points, tol, c.seed))
    if c.degree < c.dim:
        reps.extend(check_wedge(c.omega, c.f, c.V, c.points, tol, c.seed))
    return reps


# ---------------------------------------------------------------------------
# integral identities


def _weight(f: ScalarField, x) -> np.ndarray:
    return np.exp(-eval_jet2(f, x, 0).value)


def check_green(omega: PFormField, psi: PFormField, f: ScalarField, domain: FlatDomain, order: int,
                tol: float = DEFAULT_TOL) -> IdentityReport:
    """``int <dw, psi> = int <w, delta_f psi> - oint <J*w, i_N psi>`` (weighted)."""
    if psi.degree != omega.degree + 1:
        raise ValueError("psi must have degree deg(omega) + 1")
    Q, B = quad_domain(domain, order), quad_boundary(domain, order)
    x = Q.points
    w, ps = evaluate_form(omega, x, 1), evaluate_form(psi, x, 1)
    gf = eval_jet2(f, x, 1).grad
    lhs = Q.integrate(ext_d(w).values_only().inner(ps.values_only()) * _weight(f, x))
    delta_psi = weighted_codiff(ps, [gf[..., a] for a in range(domain.dim)]).values_only()
    interior_term = Q.integrate(w.values_only().inner(delta_psi) * _weight(f, x))
    y = B.points
    E = tangent_frame(B.normals)
    wb, pb = evaluate_form(omega, y, 0), evaluate_form(psi, y, 0)
    Jw = frame_components(wb, E)
    iNpsi = frame_components(interior(list(B.normals.T), pb), E)
    bdry = B.integrate(sum(Jw[I] * iNpsi[I] for I in Jw) * _weight(f, y))
    return make_report("green", lhs, interior_term - bdry, tol=tol, domain=domain.describe(), quad_order=order,
                       terms={"int_dw_psi": lhs, "int_w_delta_f_psi": interior_term, "bdry_Jw_iNpsi": bdry})


def check_green_laplacian(omega: PFormField, f: ScalarField, domain: FlatDomain, order: int,
                          tol: float = DEFAULT_TOL) -> IdentityReport:
    """``int |dw|^2 + |delta_f w|^2 = int <Delta_f^H w, w> + oint <i_N w, J* delta_f w> - <J* w, i_N dw>``."""
    Q, B = quad_domain(domain, order), quad_boundary(domain, order)
    D, p = domain.dim, omega.degree
    x = Q.points
    w, fj = evaluate_form(omega, x, 2), eval_jet2(f, x, 2)
    gf = [fj.grad[..., a] for a in range(D)]
    wt = _weight(f, x)
    energy = np.zeros(len(x))
    if p < D:
        energy = energy + ext_d(w).values_only().norm2()
    if p >= 1:
        energy = energy + weighted_codiff(w, gf).values_only().norm2()
    lhs = Q.integrate(energy * wt)
    lap = Q.integrate(hodge_laplacian_value(w, fj).inner(w.values_only()) * wt)
    y = B.points
    E = tangent_frame(B.normals)
    Nl = list(B.normals.T)
    wb, fb = evaluate_form(omega, y, 1), eval_jet2(f, y, 1)
    gfb = [fb.grad[..., a] for a in range(D)]
    b1 = np.zeros(len(y))
    b2 = np.zeros(len(y))
    if p >= 1:
        iNw = frame_components(interior(Nl, wb), E)
        Jdelta = frame_components(weighted_codiff(wb, gfb).values_only(), E)
        b1 = sum(iNw[I] * Jdelta[I] for I in iNw)
    if p < D:
        Jw = frame_components(wb, E)
        iNdw = frame_components(interior(Nl, ext_d(wb).values_only()), E)
        b2 = sum(Jw[I] * iNdw[I] for I in Jw)
    bdry = B.integrate((b1 - b2) * _weight(f, y))
    return make_report("green_laplacian", lhs, lap + bdry, tol=tol, domain=domain.describe(), quad_order=order,
                       terms={"int_energy": lhs, "int_laplacian": lap, "bdry": bdry})


def div_f(F: Sequence[ScalarField], f: ScalarField, x) -> np.ndarray:
    """Weighted divergence ``sum_A F_A,A - <grad f, F>``."""
    Fj = _vector_jets(F, x, 1)
    fj = eval_jet2(f, x, 1)
    return sum(Fj[a].grad[..., a] - fj.grad[..., a] * Fj[a].value for a in range(len(F)))


def check_pohozhaev(omega: PFormField, F: Sequence[ScalarField], f: ScalarField, domain: FlatDomain,
                    order: int, tol: float = DEFAULT_TOL) -> IdentityReport:
    """Pohozhaev-type identity for ``|dw|^2 div_f F``."""
    D, p = domain.dim, omega.degree
    if p >= D:
        raise ValueError("Pohozhaev identity needs p < D")
    Q, B = quad_domain(domain, order), quad_boundary(domain, order)
    x = Q.points
    w, fj = evaluate_form(omega, x, 2), eval_jet2(f, x, 2)
    Fj = _vector_jets(F, x, 1)
    dw = ext_d(w)  # 1-jets
    dwv = dw.values_only()
    wt = _weight(f, x)
    lhs = Q.integrate(dwv.norm2() * div_f(F, f, x) * wt)
    gradF = [[Fj[a].grad[..., b] for b in range(D)] for a in range(D)]
    t1 = induced(gradF, dwv).inner(dwv)
    t2 = interior(_vals(Fj), dwv).inner(weighted_codiff(dw, [fj.grad[..., a] for a in range(D)]).values_only())
    inner_part = 2.0 * Q.integrate((t1 - t2) * wt)
    y = B.points
    E = tangent_frame(B.normals)
    Nl = list(B.normals.T)
    wb = evaluate_form(omega, y, 1)
    dwb = ext_d(wb).values_only()
    Fb = np.stack([eval_jet2(Fa, y, 0).value for Fa in F], axis=-1)
    b1 = -dwb.norm2() * np.sum(Fb * B.normals, axis=-1)
    JiF = frame_components(interior(list(Fb.T), dwb), E)
    iNd = frame_components(interior(Nl, dwb), E)
    b2 = 2.0 * sum(JiF[I] * iNd[I] for I in JiF)
    bdry = B.integrate((b1 + b2) * _weight(f, y))
    return make_report("pohozhaev", lhs, inner_part + bdry, tol=tol, domain=domain.describe(), quad_order=order,
                       terms={"lhs": lhs, "interior": inner_part, "boundary": bdry})


def _chart_inner(a: FormValue, b: FormValue, ginv: np.ndarray) -> np.ndarray:
    """Metric inner product of chart forms from coordinate components."""
    if a.degree == 0:
        return a.comps[()].value * b.comps[()].value
    out = np.zeros(a.shape)
    idx = increasing(a.dim, a.degree)
    for I in idx:
        for J in idx:
            out = out + a.comps[I].value * b.comps[J].value * np.linalg.det(ginv[..., list(I), :][..., :, list(J)])
    return out


def _charts_for(domain: FlatDomain) -> list[SphereChart]:
    if domain.kind == "box" or domain.dim < 2:
        raise ValueError("chart calculus needs a round domain in R^2 or R^3")
    return [SphereChart(domain.dim - 1, c.radius, c.side) for c in domain.components]


def boundary_codiff_pairing(omega: PFormField, f: ScalarField, domain: FlatDomain, rule: QuadratureRule,
                            derivative: str = "jet") -> np.ndarray:
    """``<delta_f^{bdry}(J* w), i_N w>`` at boundary nodes via intrinsic chart calculus."""
    p = omega.degree
    out = np.zeros(len(rule.weights))
    if p == 0 or p > domain.dim - 1:
        return out
    for k, chart in enumerate(_charts_for(domain)):
        sel = rule.component == k
        u = rule.chart[sel]
        Jw = chart.pullback(omega)
        iN = chart.pullback_interior_normal(omega)
        calc = chart_boundary_calculus(Jw, chart.restrict(f), chart, u, derivative)
        iNv = evaluate_form(iN, u, 0)
        out[sel] = _chart_inner(calc.delta_f, iNv, np.linalg.inv(chart.metric(u)))
    return out


def check_reilly(omega: PFormField, f: ScalarField, V: ScalarField, domain: FlatDomain, order: int,
                 b_form: str = "normal", tol: float = DEFAULT_TOL) -> IdentityReport:
    """The weighted Reilly formula with each of its seven terms integrated separately.

    ``b_form='normal'`` evaluates the boundary form through ``n H_f |i_N w|^2``;
    ``b_form='star'`` evaluates it through the Hodge star of ``w``.
    """
    D, p = domain.dim, omega.degree
    n = D - 1
    Q, B = quad_domain(domain, order), quad_boundary(domain, order)
    x = Q.points
    w, fj, Vj = evaluate_form(omega, x, 2), eval_jet2(f, x, 2), eval_jet2(V, x, 2)
    if np.any(Vj.value <= 0):
        raise NonpositiveV("V must be positive on the domain")
    wt = _weight(f, x)
    wv = w.values_only()
    gf = [fj.grad[..., a] for a in range(D)]
    gV = [Vj.grad[..., a] for a in range(D)]
    delta2 = weighted_codiff(w, gf).values_only().norm2() if p >= 1 else 0.0
    dwv = ext_d(w).values_only() if p < D else None
    d2 = dwv.norm2() if p < D else 0.0
    nab2 = sum(np.sum(c.grad ** 2, axis=-1) for c in w.comps.values())
    lhs = Q.integrate(Vj.value * (delta2 + d2 - nab2) * wt)
    t_grad_v = Q.integrate(-2.0 * wv.inner(interior(gV, dwv)) * wt) if p < D else 0.0
    # V W_{f,V} = V (Hess f)^[p] + (Delta_f V) Id + (Hess V)^[p]
    VW = induced(fj.hess, wv).scaled(Vj.value) + wv.scaled(laplacian_f_scalar(Vj, fj)) + induced(Vj.hess, wv)
    t_weitz = Q.integrate(VW.inner(wv) * wt)

    y = B.points
    wb = evaluate_form(omega, y, 0)
    fb, Vb = eval_jet2(f, y, 1), eval_jet2(V, y, 1)
    N = B.normals
    E = tangent_frame(N)
    wtb = np.exp(-fb.value)
    Jw = frame_components(wb, E)
    J2 = sum(Jw[I] ** 2 for I in Jw)
    V_N = np.sum(Vb.grad * N, axis=-1)
    f_N = np.sum(fb.grad * N, axis=-1)
    eta = np.repeat(B.eta[:, None], n, axis=1)
    t_vn = B.integrate(-V_N * J2 * wtb)
    pairing = boundary_codiff_pairing(omega, f, domain, B)
    t_codiff = B.integrate(2.0 * Vb.value * pairing * wtb)
    SJ = sum(Jw[I] ** 2 * sum(eta[:, i] for i in I) for I in Jw) if p >= 1 else 0.0 * J2
    if p >= 1:
        iN = frame_components(interior(list(N.T), wb), E)
        iN2 = sum(iN[I] ** 2 for I in iN)
    else:
        iN, iN2 = {}, 0.0 * J2
    if b_form == "normal":
        H_f = B.eta + f_N / n
        SiN = sum(iN[I] ** 2 * sum((eta[:, i] for i in I), np.zeros(len(y))) for I in iN) if p >= 1 else 0.0
        Bf = SJ + n * H_f * iN2 - SiN
    elif b_form == "star":
        Js = frame_components(hodge_star(wb), E)
        Sstar = sum(Js[I] ** 2 * sum((eta[:, i] for i in I), np.zeros(len(y))) for I in Js)
        Bf = SJ + Sstar + f_N * iN2
    else:
        raise ValueError("b_form must be 'normal' or 'star'")
    t_bf = B.integrate(Vb.value * Bf * wtb)
    rhs = t_grad_v + t_weitz + t_vn + t_codiff + t_bf
    terms = {"lhs_energy": lhs, "grad_V_term": t_grad_v, "weitzenbock_term": t_weitz,
             "V_N_term": t_vn, "boundary_codiff_term": t_codiff, "B_f_term": t_bf}
    return make_report(f"reilly[{b_form}]", lhs, rhs, tol=tol, domain=domain.describe(),
                       quad_order=order, terms=terms)


def check_boundary_split(omega: PFormField, f: ScalarField, domain: FlatDomain, n_points: int = 50,
                         seed: int = 0, derivative: str = "fd", tol: float = 1e-8) -> list[IdentityReport]:
    """Both boundary-splitting identities at seeded boundary points.

    Left sides by intrinsic chart calculus on the restricted forms (jet or
    finite-difference derivatives), right sides by ambient jets and the shape
    operator.
    """
    D, p = domain.dim, omega.degree
    n = D - 1
    if not 1 <= p <= n:
        raise ValueError("boundary splitting needs 1 <= p <= n")
    rng = np.random.default_rng(seed)
    charts = _charts_for(domain)
    resid1, resid2 = [], []
    mags1, mags2 = [0.0, 0.0], [0.0, 0.0]
    for chart in charts:
        if n == 1:
            u = rng.uniform(0.0, 2 * np.pi, size=(n_points, 1))
        else:
            u = np.stack([np.arccos(rng.uniform(-0.95, 0.95, n_points)),
                          rng.uniform(0.0, 2 * np.pi, n_points)], axis=1)
        X = chart.point(u)
        N = chart.inner_normal(u)
        Tv = chart.tangent_vectors(u)
        Nl = list(N.T)
        w, fj = evaluate_form(omega, X, 2), eval_jet2(f, X, 1)
        gf = [fj.grad[..., a] for a in range(D)]
        f_N = np.sum(fj.grad * N, axis=-1)
        P = np.eye(D) - N[:, :, None] * N[:, None, :]
        S = chart.eta * P
        nab_N = directional(Nl, w).values_only()
        wv = w.values_only()
        iNw = interior(Nl, wv)

        def pull(theta: FormValue) -> np.ndarray:
            comps = frame_components(theta, Tv)
            return np.stack([comps[I] for I in increasing(n, theta.degree)], axis=-1)

        calc_J = chart_boundary_calculus(chart.pullback(omega), chart.restrict(f), chart, u, derivative)
        lhs1 = calc_J.delta_f.array()
        rhs1 = (pull(weighted_codiff(w, gf).values_only()) + pull(interior(Nl, nab_N))
                + pull(induced(S, iNw)) - (n * chart.eta + f_N)[:, None] * pull(iNw))
        calc_N = chart_boundary_calculus(chart.pullback_interior_normal(omega), None, chart, u, derivative)
        lhs2 = calc_N.d.array()
        rhs2 = -pull(interior(Nl, ext_d(w).values_only())) + pull(nab_N) - pull(induced(S, wv))
        resid1.append(np.max(np.abs(lhs1 - rhs1)))
        resid2.append(np.max(np.abs(lhs2 - rhs2)))
        mags1 = [max(mags1[0], np.max(np.abs(lhs1))), max(mags1[1], np.max(np.abs(rhs1)))]
        mags2 = [max(mags2[0], np.max(np.abs(lhs2))), max(mags2[1], np.max(np.abs(rhs2)))]
    common = dict(domain=domain.describe(), seed=seed, n_points=n_points * len(charts))
    return [make_report(f"boundary_split_codiff[{derivative}]", mags1[0], mags1[1], max(resid1), tol, **common),
            make_report(f"boundary_split_d[{derivative}]", mags2[0], mags2[1], max(resid2), tol, **common)]


def reports_to_json(reports: Sequence[IdentityReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)
