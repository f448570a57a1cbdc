"""Pointwise exterior calculus on flat space and on round-sphere charts.

Forms are evaluated as :class:`FormValue` objects whose coefficients are
batched jets, so derivative operators compose: ``ext_d`` and ``codiff`` drop
one jet order, which is exactly what the weighted Hodge Laplacian needs from
2-jets of the coefficients.

Sign conventions: ``Delta u = -sum u_AA``, ``delta_f = delta + i_grad f``,
``N`` is the inner unit normal and ``S(X) = -nabla_X N``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Sequence

import numpy as np

from .fields import (Jet, PFormField, ScalarField, const, coords, cos, eval_jet2,
                     increasing, sin, sort_sign)
from .quadrature import FlatDomain, NotOnBoundary


class DegreeError(ValueError):
    pass


class NonpositiveV(ValueError):
    pass


class PoleProximity(ValueError):
    pass


# ---------------------------------------------------------------------------
# form values


class FormValue:
    """Coefficients of a p-form on R^dim at a batch of points.

    ``comps`` maps every increasing multi-index to a :class:`Jet` (or to a
    plain array, which is treated as a 0-jet).
    """

    __slots__ = ("degree", "dim", "comps", "shape")

    def __init__(self, degree: int, dim: int, comps: dict, shape=None):
        self.degree = degree
        self.dim = dim
        out = {}
        for I in increasing(dim, degree):
            c = comps.get(I)
            if c is None:
                continue
            out[I] = c if isinstance(c, Jet) else Jet(c)
        if shape is None:
            if not out:
                raise ValueError("shape needed for an all-zero form")
            shape = next(iter(out.values())).value.shape
        self.shape = tuple(shape)
        for I in increasing(dim, degree):
            if I not in out:
                out[I] = Jet(np.zeros(self.shape))
        self.comps = out

    def __getitem__(self, idx) -> Jet:
        sign, key = sort_sign(idx)
        if sign == 0:
            return Jet(np.zeros(self.shape))
        c = self.comps[key]
        return c if sign > 0 else -c

    def value(self, idx) -> np.ndarray:
        return self[idx].value

    def array(self) -> np.ndarray:
        """Coefficient values, shape ``batch + (C(dim, p),)`` in increasing order."""
        return np.stack([self.comps[I].value for I in increasing(self.dim, self.degree)], axis=-1)

    def _like(self, other: "FormValue"):
        if (other.degree, other.dim) != (self.degree, self.dim):
            raise DegreeError("forms of different type")

    def __add__(self, other: "FormValue") -> "FormValue":
        self._like(other)
        return FormValue(self.degree, self.dim, {I: self.comps[I] + other.comps[I] for I in self.comps}, self.shape)

    def __sub__(self, other: "FormValue") -> "FormValue":
        self._like(other)
        return FormValue(self.degree, self.dim, {I: self.comps[I] - other.comps[I] for I in self.comps}, self.shape)

    def __neg__(self) -> "FormValue":
        return FormValue(self.degree, self.dim, {I: -c for I, c in self.comps.items()}, self.shape)

    def scaled(self, c) -> "FormValue":
        """Multiply by a scalar jet or array."""
        if isinstance(c, Jet):
            return FormValue(self.degree, self.dim, {I: v * c for I, v in self.comps.items()}, self.shape)
        return FormValue(self.degree, self.dim, {I: v * np.asarray(c, float) for I, v in self.comps.items()}, self.shape)

    def inner(self, other: "FormValue") -> np.ndarray:
        self._like(other)
        return np.sum(self.array() * other.array(), axis=-1)

    def norm2(self) -> np.ndarray:
        return self.inner(self)

    def values_only(self) -> "FormValue":
        return FormValue(self.degree, self.dim, {I: Jet(c.value) for I, c in self.comps.items()}, self.shape)

    def __repr__(self):
        return f"FormValue(degree={self.degree}, dim={self.dim}, shape={self.shape})"


@dataclass(frozen=True)
class CovariantDerivativeValue:
    """``components[..., i, A]`` is the derivative of the i-th increasing component along ``e_A``."""

    degree: int
    dim: int
    components: np.ndarray

    @property
    def norm2(self) -> np.ndarray:
        return np.sum(self.components ** 2, axis=(-2, -1))


def _zero(shape) -> Jet:
    return Jet(np.zeros(shape))


def _total(terms, shape) -> Jet:
    out = None
    for t in terms:
        out = t if out is None else out + t
    return _zero(shape) if out is None else out


def evaluate_form(omega: PFormField, x, order: int = 2) -> FormValue:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != omega.dim:
        raise DegreeError(f"form lives on R^{omega.dim}, points are {x.shape[-1]}-dimensional")
    comps = {I: eval_jet2(c, x, order) for I, c in omega.components.items()}
    shape = x.shape[:-1]
    for I in increasing(omega.dim, omega.degree):
        comps.setdefault(I, Jet.constant(0.0, shape, omega.dim, order))
    return FormValue(omega.degree, omega.dim, comps, shape)


def scalar_form(u: Jet, dim: int) -> FormValue:
    return FormValue(0, dim, {(): u}, u.value.shape)


def gradient(u: Jet) -> list[Jet]:
    return [u.partial(a) for a in range(u.grad.shape[-1])]


# ---------------------------------------------------------------------------
# algebraic and differential operators on FormValues


def ext_d(w: FormValue) -> FormValue:
    """``(dw)_K = sum_a (-1)^a d_{K_a} w_{K without K_a}``."""
    if w.degree >= w.dim:
        raise DegreeError("d of a top-degree form")
    out = {}
    for K in increasing(w.dim, w.degree + 1):
        terms = (w[K[:a] + K[a + 1:]].partial(K[a]) for a in range(len(K)))
        out[K] = _total((t if a % 2 == 0 else -t for a, t in enumerate(terms)), w.shape)
    return FormValue(w.degree + 1, w.dim, out, w.shape)


def codiff(w: FormValue) -> FormValue:
    """Flat codifferential ``(delta w)_J = -sum_A d_A w_{AJ}``."""
    if w.degree == 0:
        raise DegreeError("codifferential of a function")
    out = {}
    for J in increasing(w.dim, w.degree - 1):
        out[J] = -_total((w[(A,) + J].partial(A) for A in range(w.dim) if A not in J), w.shape)
    return FormValue(w.degree - 1, w.dim, out, w.shape)


def interior(X: Sequence, w: FormValue) -> FormValue:
    """``(i_X w)_J = sum_A X_A w_{AJ}``; ``X`` entries are jets or arrays."""
    if w.degree == 0:
        raise DegreeError("interior product of a function")
    out = {}
    for J in increasing(w.dim, w.degree - 1):
        out[J] = _total((w[(A,) + J] * X[A] for A in range(w.dim) if A not in J), w.shape)
    return FormValue(w.degree - 1, w.dim, out, w.shape)


def wedge(a: FormValue, b: FormValue) -> FormValue:
    p, q = a.degree, b.degree
    if p + q > a.dim:
        raise DegreeError("wedge product exceeds the top degree")
    out = {}
    for K in increasing(a.dim, p + q):
        terms = []
        for S in combinations(range(p + q), p):
            Is = tuple(K[i] for i in S)
            Js = tuple(K[i] for i in range(p + q) if i not in S)
            sign, _ = sort_sign(Is + Js)
            t = a[Is] * b[Js]
            terms.append(t if sign > 0 else -t)
        out[K] = _total(terms, a.shape)
    return FormValue(p + q, a.dim, out, a.shape)


def _entry(T, a: int, b: int):
    if isinstance(T, np.ndarray):
        return T[..., a, b]
    return T[a][b]


def induced(T, w: FormValue) -> FormValue:
    """Extension of the (1,1)-tensor ``T`` to p-forms, acting slot by slot.

    ``T[a][b]`` is the a-th component of ``T(e_b)``.
    """
    out = {}
    for I in increasing(w.dim, w.degree):
        terms = []
        for alpha, i in enumerate(I):
            for a in range(w.dim):
                J = I[:alpha] + (a,) + I[alpha + 1:]
                terms.append(w[J] * _entry(T, a, i))
        out[I] = _total(terms, w.shape)
    return FormValue(w.degree, w.dim, out, w.shape)


def directional(X: Sequence, w: FormValue) -> FormValue:
    """Flat covariant derivative ``nabla_X w`` (componentwise directional derivative)."""
    out = {}
    for I, c in w.comps.items():
        out[I] = _total((c.partial(A) * X[A] for A in range(w.dim)), w.shape)
    return FormValue(w.degree, w.dim, out, w.shape)


def hodge_star(w: FormValue) -> FormValue:
    """Euclidean Hodge star with the standard orientation of R^dim."""
    D, p = w.dim, w.degree
    out = {}
    for I in increasing(D, p):
        Ic = tuple(a for a in range(D) if a not in I)
        sign, _ = sort_sign(I + Ic)
        out[Ic] = w.comps[I] if sign > 0 else -w.comps[I]
    return FormValue(D - p, D, out, w.shape)


def weighted_codiff(w: FormValue, grad_f: Sequence) -> FormValue:
    """``delta_f w = delta w + i_grad f w``."""
    return codiff(w) + interior(grad_f, w)


def _check_degree(omega: PFormField, lo: int | None = None, hi: int | None = None):
    if lo is not None and omega.degree < lo:
        raise DegreeError(f"degree {omega.degree} < {lo}")
    if hi is not None and omega.degree > hi:
        raise DegreeError(f"degree {omega.degree} > {hi}")


# ---------------------------------------------------------------------------
# public pointwise operators (flat ambient space)


def d_form(omega: PFormField, x) -> FormValue:
    _check_degree(omega, hi=omega.dim - 1)
    return ext_d(evaluate_form(omega, x, order=1)).values_only()


def delta_f_form(omega: PFormField, f: ScalarField, x) -> FormValue:
    _check_degree(omega, lo=1)
    w = evaluate_form(omega, x, order=1)
    fj = eval_jet2(f, x, order=1)
    return weighted_codiff(w, [g.value for g in gradient(fj)]).values_only()


def nabla_form(omega: PFormField, x) -> CovariantDerivativeValue:
    w = evaluate_form(omega, x, order=1)
    arr = np.stack([w.comps[I].grad for I in increasing(omega.dim, omega.degree)], axis=-2)
    return CovariantDerivativeValue(omega.degree, omega.dim, arr)


def hodge_laplacian_value(w: FormValue, fj: Jet) -> FormValue:
    """``(d delta_f + delta_f d) w`` from 2-jets of ``w`` and of ``f``."""
    grad_f = gradient(fj)
    p, D = w.degree, w.dim
    total = FormValue(p, D, {}, w.shape)
    if p >= 1:
        total = total + ext_d(weighted_codiff(w, grad_f)) if p - 1 < D else total
    if p < D:
        total = total + weighted_codiff(ext_d(w), grad_f)
    return total.values_only()


def weighted_hodge_laplacian(omega: PFormField, f: ScalarField, x) -> FormValue:
    return hodge_laplacian_value(evaluate_form(omega, x, 2), eval_jet2(f, x, 2))


def rough_laplacian_value(w: FormValue, fj: Jet) -> FormValue:
    """``-sum_A d_AA w_I + sum_A f_A d_A w_I`` read directly off the jets."""
    out = {}
    for I, c in w.comps.items():
        out[I] = -np.trace(c.hess, axis1=-2, axis2=-1) + np.sum(fj.grad * c.grad, axis=-1)
    return FormValue(w.degree, w.dim, out, w.shape)


def rough_laplacian_f(omega: PFormField, f: ScalarField, x) -> FormValue:
    return rough_laplacian_value(evaluate_form(omega, x, 2), eval_jet2(f, x, 2))


def weitzenbock_f(omega: PFormField, f: ScalarField, x) -> FormValue:
    """``(Hess f)^[p] omega``: the weighted Weitzenbock term on flat space."""
    w = evaluate_form(omega, x, 0)
    return induced(eval_jet2(f, x, 2).hess, w).values_only()


def laplacian_f_scalar(u: Jet, fj: Jet) -> np.ndarray:
    """``Delta_f u = -sum u_AA + <grad f, grad u>``."""
    return -np.trace(u.hess, axis1=-2, axis2=-1) + np.sum(fj.grad * u.grad, axis=-1)


def weitzenbock_fV(omega: PFormField, f: ScalarField, V: ScalarField, x) -> FormValue:
    """``W_f w + V^{-1} [(Delta_f V) w + (Hess V)^[p] w]``."""
    x = np.asarray(x, dtype=float)
    Vj = eval_jet2(V, x, 2)
    if np.any(Vj.value <= 0):
        raise NonpositiveV("V must be positive")
    fj = eval_jet2(f, x, 2)
    w = evaluate_form(omega, x, 0)
    extra = w.scaled(laplacian_f_scalar(Vj, fj)) + induced(Vj.hess, w)
    return (induced(fj.hess, w) + extra.scaled(1.0 / Vj.value)).values_only()


# ---------------------------------------------------------------------------
# boundary operators


def tangent_frame(N: np.ndarray) -> np.ndarray:
    """Orthonormal tangent frame ``(..., n, D)`` orthogonal to unit normals ``N``.

    2D: the rotation of N by +90 degrees. 3D: Gram-Schmidt of the coordinate
    axis least aligned with N, completed by a cross product.
    """
    N = np.asarray(N, dtype=float)
    D = N.shape[-1]
    if D == 2:
        return np.stack([-N[..., 1], N[..., 0]], axis=-1)[..., None, :]
    if D == 3:
        axis = np.argmin(np.abs(N), axis=-1)
        seed = np.eye(3)[axis]
        v1 = seed - np.sum(seed * N, axis=-1, keepdims=True) * N
        v1 /= np.linalg.norm(v1, axis=-1, keepdims=True)
        v2 = np.cross(N, v1)
        return np.stack([v1, v2], axis=-2)
    raise NotOnBoundary("boundary frames need D in {2, 3}")


def frame_components(w: FormValue, vectors: np.ndarray) -> dict:
    """``w(v_{I_1}, ..., v_{I_p})`` for increasing I over the given vectors ``(..., k, D)``.

    Returns a dict of value arrays keyed by increasing multi-indices in range(k).
    """
    k = vectors.shape[-2]
    p = w.degree
    out = {}
    for I in increasing(k, p):
        if p == 0:
            out[I] = w.comps[()].value
            continue
        acc = np.zeros(w.shape)
        for K in increasing(w.dim, p):
            minor = vectors[..., list(I), :][..., :, list(K)]
            acc = acc + w.comps[K].value * np.linalg.det(minor)
        out[I] = acc
    return out


def _frame_dot(a: dict, b: dict) -> np.ndarray:
    return sum(a[I] * b[I] for I in a)


@dataclass
class BoundaryValues:
    """Boundary data at a batch of points, tangential forms in frame components."""

    normal: np.ndarray
    frame: np.ndarray
    eta: np.ndarray
    J_omega: dict
    iN_omega: dict
    S_J_omega: dict
    S_iN_omega: dict
    H: np.ndarray
    H_f: np.ndarray
    f_N: np.ndarray
    V_N: np.ndarray | None
    degree: int


def _shape_on_frame(theta: dict, eta: np.ndarray) -> dict:
    """S^[q] in a principal frame: multiply each component by the sum of its curvatures."""
    return {I: theta[I] * sum((eta[..., i] for i in I), np.zeros(eta.shape[:-1])) for I in theta}


def _boundary_geometry(domain: FlatDomain, x: np.ndarray):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    comps = [domain.component_at(xi) for xi in x]
    N = np.stack([c.inner_normal(xi) for c, xi in zip(comps, x)])
    eta = np.stack([c.principal_curvatures for c in comps])
    return x, N, eta


def boundary_ops(omega: PFormField, domain: FlatDomain, x, f: ScalarField | None = None,
                 V: ScalarField | None = None) -> BoundaryValues:
    """Restriction, normal contraction and shape-operator terms at boundary points."""
    x, N, eta = _boundary_geometry(domain, x)
    E = tangent_frame(N)
    n = E.shape[-2]
    w = evaluate_form(omega, x, 0)
    J = frame_components(w, E)
    p = omega.degree
    iN = frame_components(interior(list(N.T), w), E) if p >= 1 else {}
    f_N = np.zeros(len(x)) if f is None else np.sum(eval_jet2(f, x, 1).grad * N, axis=-1)
    V_N = None if V is None else np.sum(eval_jet2(V, x, 1).grad * N, axis=-1)
    H = eta.mean(axis=-1)
    return BoundaryValues(N, E, eta, J, iN, _shape_on_frame(J, eta), _shape_on_frame(iN, eta),
                          H, H + f_N / n, f_N, V_N, p)


def b_f_form(omega: PFormField, f: ScalarField, domain: FlatDomain, x) -> tuple[np.ndarray, np.ndarray]:
    """The boundary form B_f computed two ways.

    First via the normal contraction and ``n H_f``; second via the Hodge star
    of the ambient form restricted to the boundary.
    """
    bv = boundary_ops(omega, domain, x, f)
    n = bv.frame.shape[-2]
    tang = _frame_dot(bv.S_J_omega, bv.J_omega)
    if omega.degree >= 1:
        iN2 = _frame_dot(bv.iN_omega, bv.iN_omega)
        first = tang + n * bv.H_f * iN2 - _frame_dot(bv.S_iN_omega, bv.iN_omega)
    else:
        iN2 = 0.0
        first = tang
    star = hodge_star(evaluate_form(omega, np.atleast_2d(np.asarray(x, float)), 0))
    Js = frame_components(star, bv.frame)
    second = tang + _frame_dot(_shape_on_frame(Js, bv.eta), Js) + bv.f_N * iN2
    return first, second


# ---------------------------------------------------------------------------
# round-sphere charts


class SphereChart:
    """Angle chart of the round sphere of radius ``radius`` in R^(dim+1).

    ``dim = 1``: ``theta -> R (cos theta, sin theta)``.
    ``dim = 2``: ``(theta, phi) -> R (sin theta cos phi, sin theta sin phi, cos theta)``.
    ``side`` is +1 when the sphere bounds a domain lying inside it and -1 for
    the inner sphere of an annulus; it fixes the inner normal ``-side X / R``.
    """

    POLE_TOL = 1e-3

    def __init__(self, dim: int, radius: float = 1.0, side: int = 1):
        if dim not in (1, 2):
            raise ValueError("sphere charts exist here for dimension 1 and 2")
        self.dim = dim
        self.radius = float(radius)
        self.side = int(side)
        u = coords(dim)
        R = self.radius
        if dim == 1:
            (t,) = u
            self.embedding = (R * cos(t), R * sin(t))
            self.tangents = ((-R * sin(t), R * cos(t)),)
        else:
            t, p = u
            self.embedding = (R * sin(t) * cos(p), R * sin(t) * sin(p), R * cos(t))
            self.tangents = ((R * cos(t) * cos(p), R * cos(t) * sin(p), -R * sin(t)),
                             (-R * sin(t) * sin(p), R * sin(t) * cos(p), const(0.0)))

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1

    @property
    def eta(self) -> float:
        return self.side / self.radius

    def check(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if u.shape[-1] != self.dim:
            raise ValueError("chart coordinates have the wrong dimension")
        if self.dim == 2:
            th = u[..., 0]
            if np.any(np.minimum(np.mod(th, 2 * math.pi), np.abs(math.pi - np.mod(th, 2 * math.pi))) < self.POLE_TOL):
                raise PoleProximity("chart point within 1e-3 of a pole")
        return u

    def point(self, u) -> np.ndarray:
        u = self.check(u)
        return np.stack([eval_jet2(X, u, 0).value for X in self.embedding], axis=-1)

    def tangent_vectors(self, u) -> np.ndarray:
        """``(..., dim, D)`` coordinate tangent vectors d X / d u_k."""
        u = self.check(u)
        return np.stack([np.stack([eval_jet2(c, u, 0).value for c in T], axis=-1)
                         for T in self.tangents], axis=-2)

    def inner_normal(self, u) -> np.ndarray:
        return -self.side * self.point(u) / self.radius

    def metric(self, u) -> np.ndarray:
        u = self.check(u)
        R2 = self.radius ** 2
        if self.dim == 1:
            return np.full(u.shape[:-1] + (1, 1), R2)
        g = np.zeros(u.shape[:-1] + (2, 2))
        g[..., 0, 0] = R2
        g[..., 1, 1] = R2 * np.sin(u[..., 0]) ** 2
        return g

    def christoffel(self, u) -> np.ndarray:
        """``G[..., l, i, j] = Gamma^l_{ij}`` in closed form."""
        u = self.check(u)
        G = np.zeros(u.shape[:-1] + (self.dim,) * 3)
        if self.dim == 2:
            th = u[..., 0]
            G[..., 0, 1, 1] = -np.sin(th) * np.cos(th)
            G[..., 1, 0, 1] = G[..., 1, 1, 0] = np.cos(th) / np.sin(th)
        return G

    def metric_from_jets(self, u) -> np.ndarray:
        u = self.check(u)
        Xj = [eval_jet2(X, u, 1) for X in self.embedding]
        T = np.stack([j.grad for j in Xj], axis=-2)  # (..., D, m)
        return np.einsum("...ai,...aj->...ij", T, T)

    def christoffel_from_jets(self, u) -> np.ndarray:
        """``g^{lk} <d_k X, d_i d_j X>`` from 2-jets of the embedding."""
        u = self.check(u)
        Xj = [eval_jet2(X, u, 2) for X in self.embedding]
        T = np.stack([j.grad for j in Xj], axis=-2)
        Hs = np.stack([j.hess for j in Xj], axis=-3)  # (..., D, m, m)
        g = np.einsum("...ai,...aj->...ij", T, T)
        low = np.einsum("...ak,...aij->...kij", T, Hs)
        return np.einsum("...lk,...kij->...lij", np.linalg.inv(g), low)

    # pullbacks --------------------------------------------------------------
    def _minor(self, I: tuple, K: tuple) -> ScalarField:
        """det of d X_I / d u_K as an expression."""
        if len(I) == 0:
            return const(1.0)
        if len(I) == 1:
            return self.tangents[K[0]][I[0]]
        if len(I) == 2:
            a, b = I
            k, l = K
            return self.tangents[k][a] * self.tangents[l][b] - self.tangents[k][b] * self.tangents[l][a]
        raise DegreeError("chart forms of degree > 2")

    def pullback(self, omega: PFormField) -> PFormField:
        """J* omega in chart coordinates, as an expression-valued form."""
        if omega.dim != self.ambient_dim:
            raise DegreeError("form does not live on the ambient space of this chart")
        p = omega.degree
        if p > self.dim:
            raise DegreeError(f"no {p}-forms on a {self.dim}-dimensional chart")
        comps = {}
        for K in increasing(self.dim, p):
            acc = None
            for I, c in omega.components.items():
                term = c.compose(self.embedding) * self._minor(I, K)
                acc = term if acc is None else acc + term
            comps[K] = acc if acc is not None else const(0.0)
        return PFormField(p, self.dim, comps)

    def normal_field(self) -> tuple[ScalarField, ...]:
        """Inner normal as an ambient expression, valid on the sphere."""
        return tuple(-self.side * xa / self.radius for xa in coords(self.ambient_dim))

    def pullback_interior_normal(self, omega: PFormField) -> PFormField:
        """J*(i_N omega) in chart coordinates."""
        if omega.degree == 0:
            raise DegreeError("i_N of a function")
        N = self.normal_field()
        comps = {}
        for J in increasing(omega.dim, omega.degree - 1):
            acc = None
            for A in range(omega.dim):
                if A in J:
                    continue
                c = omega.component((A,) + J)
                if c.is_const() and c.args[0] == 0.0:
                    continue
                term = N[A] * c
                acc = term if acc is None else acc + term
            if acc is not None:
                comps[J] = acc
        return self.pullback(PFormField(omega.degree - 1, omega.dim, comps))

    def restrict(self, f: ScalarField) -> ScalarField:
        return f.compose(self.embedding)


def _antisym_array(w: FormValue, use: str):
    """Full antisymmetric coefficient array of values ('v') or gradients ('g')."""
    m, p = w.dim, w.degree
    shape = w.shape + (m,) * p + ((m,) if use == "g" else ())
    T = np.zeros(shape)
    for idx in product(range(m), repeat=p):
        sign, key = sort_sign(idx)
        if sign == 0:
            continue
        c = w.comps[key]
        T[(Ellipsis,) + idx + ((slice(None),) if use == "g" else ())] = sign * (c.value if use == "v" else c.grad)
    return T


def chart_codiff(w: FormValue, g: np.ndarray, G: np.ndarray, df: np.ndarray | None = None) -> FormValue:
    """Intrinsic weighted codifferential on a chart.

    ``(delta_f T)_J = -g^{ik} nabla_k T_{iJ} + g^{ik} f_k T_{iJ}`` with the
    Levi-Civita connection given by Christoffel symbols ``G[l, i, j]``.
    ``w`` must carry first derivatives in its jets.
    """
    m, p = w.dim, w.degree
    if p == 0:
        raise DegreeError("codifferential of a function")
    T = _antisym_array(w, "v")
    dT = _antisym_array(w, "g")  # last axis: derivative direction k
    b = len(w.shape)
    nab = np.moveaxis(dT, -1, b).copy()  # (..., k, i1..ip)
    for slot in range(p):
        nab -= _christoffel_term(G, T, slot, b)
    ginv = np.linalg.inv(g)
    out_arr = -_contract(ginv, nab, b, p)
    if df is not None:
        out_arr = out_arr + _first_slot(np.einsum("...ik,...k->...i", ginv, df), T, b, p)
    comps = {J: out_arr[(Ellipsis,) + J] for J in increasing(m, p - 1)}
    return FormValue(p - 1, m, comps, w.shape)


def _christoffel_term(G: np.ndarray, T: np.ndarray, slot: int, b: int) -> np.ndarray:
    """``sum_l Gamma^l_{k i_slot} T_{i_1..l..i_p}`` arranged as (..., k, i_1..i_p)."""
    m = G.shape[-1]
    p = T.ndim - b
    out = np.zeros(T.shape[:b] + (m,) * (p + 1))
    for k in range(m):
        for idx in product(range(m), repeat=p):
            acc = np.zeros(T.shape[:b])
            for l in range(m):
                src = idx[:slot] + (l,) + idx[slot + 1:]
                acc = acc + G[..., l, k, idx[slot]] * T[(Ellipsis,) + src]
            out[(Ellipsis, k) + idx] = acc
    return out


def _contract(ginv: np.ndarray, nab: np.ndarray, b: int, p: int) -> np.ndarray:
    """``sum_{i,k} g^{ik} nab[k, i, J]`` -> array over J (p-1 indices)."""
    m = ginv.shape[-1]
    out = np.zeros(nab.shape[:b] + (m,) * (p - 1))
    for J in product(range(m), repeat=p - 1):
        acc = np.zeros(nab.shape[:b])
        for i in range(m):
            for k in range(m):
                acc = acc + ginv[..., i, k] * nab[(Ellipsis, k, i) + J]
        out[(Ellipsis,) + J] = acc
    return out


def _first_slot(v: np.ndarray, T: np.ndarray, b: int, p: int) -> np.ndarray:
    m = v.shape[-1]
    out = np.zeros(T.shape[:b] + (m,) * (p - 1))
    for J in product(range(m), repeat=p - 1):
        out[(Ellipsis,) + J] = sum(v[..., i] * T[(Ellipsis, i) + J] for i in range(m))
    return out


@dataclass
class ChartCalculus:
    d: FormValue | None
    delta_f: FormValue | None


def chart_boundary_calculus(eta: PFormField, f: ScalarField | None, chart: SphereChart, u,
                            derivative: str = "jet", step: float = 1e-3) -> ChartCalculus:
    """Intrinsic ``d`` and ``delta_f`` of a chart form at chart points ``u``.

    ``f`` is a weight already expressed in chart coordinates (see
    :meth:`SphereChart.restrict`). ``derivative='fd'`` replaces jet
    derivatives of the chart coefficients by fourth-order central differences
    with the given step, which serves as an independent oracle.
    """
    u = chart.check(u)
    m, p = chart.dim, eta.degree
    if eta.dim != m:
        raise DegreeError("chart form dimension mismatch")
    if derivative == "jet":
        w = evaluate_form(eta, u, 1)
        fj = None if f is None else eval_jet2(f, u, 1)
    elif derivative == "fd":
        w = _fd_form(eta, u, step)
        fj = None if f is None else _fd_scalar(f, u, step)
    else:
        raise ValueError("derivative must be 'jet' or 'fd'")
    d = ext_d(w).values_only() if p < m else None
    delta = None
    if p >= 1:
        delta = chart_codiff(w, chart.metric(u), chart.christoffel(u), None if fj is None else fj.grad)
    return ChartCalculus(d, delta)


def _fd_scalar(f: ScalarField, u: np.ndarray, h: float) -> Jet:
    val = eval_jet2(f, u, 0).value
    grads = []
    for k in range(u.shape[-1]):
        e = np.zeros(u.shape[-1])
        e[k] = h
        fp1, fm1 = eval_jet2(f, u + e, 0).value, eval_jet2(f, u - e, 0).value
        fp2, fm2 = eval_jet2(f, u + 2 * e, 0).value, eval_jet2(f, u - 2 * e, 0).value
        grads.append((8 * (fp1 - fm1) - (fp2 - fm2)) / (12 * h))
    return Jet(val, np.stack(grads, axis=-1))


def _fd_form(eta: PFormField, u: np.ndarray, h: float) -> FormValue:
    comps = {}
    for I in increasing(eta.dim, eta.degree):
        comps[I] = _fd_scalar(eta.component(I), u, h)
    return FormValue(eta.degree, eta.dim, comps, u.shape[:-1])
