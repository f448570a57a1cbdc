"""Quadrature on flat balls, annuli, boxes, round spheres and simplices.

Ball and annulus rules are tensor products in polar/spherical coordinates:
Gauss-Legendre in the radius (Jacobian included), Gauss-Legendre in the
cosine of the polar angle, and the uniform trapezoid rule in the azimuth.
Boundary rules carry the inner unit normal and the principal curvature of
the component they sample.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .fields import ScalarField, eval_jet2


class UnsupportedDimension(ValueError):
    pass


class NotOnBoundary(ValueError):
    pass


MAX_ORDER = 40


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights; boundary rules also carry normals and curvatures.

    ``normals`` are inner unit normals, ``eta`` the (umbilic) principal
    curvature with respect to that normal, ``component`` the boundary
    component index and ``chart`` the sphere angles of each node.
    """

    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int
    normals: np.ndarray | None = None
    eta: np.ndarray | None = None
    component: np.ndarray | None = None
    chart: np.ndarray | None = None

    def __len__(self):
        return len(self.weights)

    def integrate(self, values) -> float:
        return float(np.sum(self.weights * np.asarray(values, dtype=float)))


@dataclass(frozen=True)
class SphereComponent:
    """A round boundary component of radius ``radius`` centred at the origin.

    ``side`` is +1 when the domain lies inside the sphere and -1 when it lies
    outside (inner boundary of an annulus). The inner normal is
    ``-side * x / |x|`` and every principal curvature equals ``side / radius``.
    """

    radius: float
    side: int
    dim: int

    @property
    def eta(self) -> float:
        return self.side / self.radius

    @property
    def principal_curvatures(self) -> np.ndarray:
        return np.full(self.dim - 1, self.eta)

    @property
    def mean_curvature(self) -> float:
        return self.eta

    def inner_normal(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return -self.side * x / np.linalg.norm(x, axis=-1, keepdims=True)


@dataclass(frozen=True)
class FlatDomain:
    """``kind`` is ``ball``, ``annulus`` or ``box``.

    Balls and annuli are centred at the origin. Boxes are ``[lo, hi]^dim``.
    """

    kind: str
    dim: int
    radius: float = 1.0
    inner_radius: float = 0.0
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise UnsupportedDimension(f"dimension {self.dim} not in 1..3")
        if self.kind not in ("ball", "annulus", "box"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "annulus" and not 0 < self.inner_radius < self.radius:
            raise ValueError("annulus needs 0 < inner_radius < radius")

    @classmethod
    def ball(cls, dim: int, radius: float = 1.0) -> "FlatDomain":
        return cls("ball", dim, radius=radius)

    @classmethod
    def annulus(cls, dim: int, inner_radius: float = 0.5, radius: float = 1.0) -> "FlatDomain":
        return cls("annulus", dim, radius=radius, inner_radius=inner_radius)

    @classmethod
    def box(cls, dim: int, lo: float = 0.0, hi: float = 1.0) -> "FlatDomain":
        return cls("box", dim, lo=lo, hi=hi)

    @property
    def components(self) -> list[SphereComponent]:
        if self.kind == "box":
            return []
        comps = [SphereComponent(self.radius, +1, self.dim)]
        if self.kind == "annulus":
            comps.append(SphereComponent(self.inner_radius, -1, self.dim))
        return comps

    def component_at(self, x, tol: float = 1e-9) -> SphereComponent:
        """Boundary component containing ``x`` (round domains only)."""
        r = float(np.linalg.norm(x))
        for comp in self.components:
            if abs(r - comp.radius) <= tol * max(1.0, comp.radius):
                return comp
        raise NotOnBoundary(f"|x| = {r!r} is not on a boundary sphere of {self.describe()}")

    def volume(self) -> float:
        if self.kind == "box":
            return (self.hi - self.lo) ** self.dim
        unit = math.pi ** (self.dim / 2) / math.gamma(self.dim / 2 + 1)
        return unit * (self.radius ** self.dim - self.inner_radius ** self.dim)

    def describe(self) -> str:
        if self.kind == "ball":
            return f"ball(R={self.radius!r},D={self.dim})"
        if self.kind == "annulus":
            return f"annulus(r={self.inner_radius!r},R={self.radius!r},D={self.dim})"
        return f"box([{self.lo!r},{self.hi!r}]^{self.dim})"


# ---------------------------------------------------------------------------
# one-dimensional building blocks


@lru_cache(maxsize=None)
def gauss_legendre(n: int, a: float = 0.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    t, w = roots_legendre(n)
    return 0.5 * (b - a) * t + 0.5 * (b + a), 0.5 * (b - a) * w


@lru_cache(maxsize=None)
def gauss_jacobi01(n: int, a: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on [0, 1] for the weight (1 - s)^a."""
    if a == 0:
        return gauss_legendre(n)
    t, w = roots_jacobi(n, a, 0)
    return 0.5 * (1.0 + t), w / 2.0 ** (a + 1)


def _npts(degree: int) -> int:
    return max(1, (degree + 2) // 2)


def _check_order(order: int):
    if order < 0 or order > MAX_ORDER:
        raise ValueError(f"quadrature order {order} outside 0..{MAX_ORDER}")


def _azimuth(order: int) -> tuple[np.ndarray, np.ndarray]:
    n = order + 1
    phi = 2.0 * math.pi * (np.arange(n) + 0.5) / n
    return phi, np.full(n, 2.0 * math.pi / n)


def _radial(order: int, dim: int, r0: float, r1: float) -> tuple[np.ndarray, np.ndarray]:
    r, w = gauss_legendre(_npts(order + dim - 1), r0, r1)
    return r, w * r ** (dim - 1)


def sphere_rule(dim: int, radius: float, order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rule on the sphere of radius ``radius`` in R^dim: (points, weights, angles)."""
    _check_order(order)
    if dim == 1:
        pts = np.array([[radius], [-radius]])
        return pts, np.ones(2), np.array([[0.0], [math.pi]])
    if dim == 2:
        th, w = _azimuth(order)
        pts = radius * np.stack([np.cos(th), np.sin(th)], axis=-1)
        return pts, radius * w, th[:, None]
    if dim == 3:
        t, wt = gauss_legendre(_npts(order), -1.0, 1.0)
        ph, wp = _azimuth(order)
        T, P = np.meshgrid(t, ph, indexing="ij")
        W = np.outer(wt, wp)
        theta = np.arccos(T)
        s = np.sqrt(1.0 - T * T)
        pts = radius * np.stack([s * np.cos(P), s * np.sin(P), T], axis=-1)
        angles = np.stack([theta, P], axis=-1)
        return pts.reshape(-1, 3), radius ** 2 * W.ravel(), angles.reshape(-1, 2)
    raise UnsupportedDimension(f"sphere in R^{dim}")


def quad_domain(domain: FlatDomain, order: int) -> QuadratureRule:
    """Interior rule exact for polynomials of total degree <= ``order``."""
    _check_order(order)
    D = domain.dim
    if domain.kind == "box":
        x, w = gauss_legendre(_npts(order), domain.lo, domain.hi)
        grids = np.meshgrid(*([x] * D), indexing="ij")
        wgrid = np.ones_like(grids[0])
        for g in np.meshgrid(*([w] * D), indexing="ij"):
            wgrid = wgrid * g
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        return QuadratureRule(pts, wgrid.ravel(), order)
    r0 = domain.inner_radius if domain.kind == "annulus" else 0.0
    if D == 1:
        if domain.kind == "ball":
            x, w = gauss_legendre(_npts(order), -domain.radius, domain.radius)
            return QuadratureRule(x[:, None], w, order)
        xr, wr = gauss_legendre(_npts(order), r0, domain.radius)
        x = np.concatenate([-xr[::-1], xr])
        w = np.concatenate([wr[::-1], wr])
        return QuadratureRule(x[:, None], w, order)
    r, wr = _radial(order, D, r0, domain.radius)
    dirs, wd, _ = sphere_rule(D, 1.0, order)
    pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, D)
    w = np.outer(wr, wd).ravel()
    return QuadratureRule(pts, w, order)


def quad_boundary(domain: FlatDomain, order: int) -> QuadratureRule:
    """Boundary rule with inner normals and principal curvatures."""
    _check_order(order)
    D = domain.dim
    if domain.kind == "box":
        return _box_boundary(domain, order)
    pts, wts, nrm, eta, comp, chart = [], [], [], [], [], []
    for k, c in enumerate(domain.components):
        p, w, a = sphere_rule(D, c.radius, order)
        pts.append(p)
        wts.append(w)
        nrm.append(c.inner_normal(p))
        eta.append(np.full(len(w), c.eta))
        comp.append(np.full(len(w), k))
        chart.append(a)
    return QuadratureRule(np.concatenate(pts), np.concatenate(wts), order,
                          normals=np.concatenate(nrm), eta=np.concatenate(eta),
                          component=np.concatenate(comp), chart=np.concatenate(chart))


def _box_boundary(domain: FlatDomain, order: int) -> QuadratureRule:
    D = domain.dim
    lo, hi = domain.lo, domain.hi
    if D == 1:
        return QuadratureRule(np.array([[lo], [hi]]), np.ones(2), order,
                              normals=np.array([[1.0], [-1.0]]), eta=np.zeros(2),
                              component=np.array([0, 1]))
    face = quad_domain(FlatDomain.box(D - 1, lo, hi), order)
    pts, wts, nrm, comp = [], [], [], []
    k = 0
    for axis in range(D):
        for side, val in ((+1.0, lo), (-1.0, hi)):
            p = np.insert(face.points, axis, val, axis=1)
            n = np.zeros_like(p)
            n[:, axis] = side
            pts.append(p)
            wts.append(face.weights)
            nrm.append(n)
            comp.append(np.full(len(face.weights), k))
            k += 1
    w = np.concatenate(wts)
    return QuadratureRule(np.concatenate(pts), w, order, normals=np.concatenate(nrm),
                          eta=np.zeros(len(w)), component=np.concatenate(comp))


def simplex_rule(k: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss-Jacobi rule on the reference k-simplex.

    Returns barycentric coordinates ``(n, k+1)`` and weights summing to
    ``1/k!`` (the reference volume). Exact for total degree <= ``order``.
    """
    if k == 0:
        return np.ones((1, 1)), np.ones(1)
    n = _npts(order)
    rules = [gauss_jacobi01(n, k - 1 - i) for i in range(k)]
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrid = np.ones_like(grids[0])
    for g in np.meshgrid(*[r[1] for r in rules], indexing="ij"):
        wgrid = wgrid * g
    xi = [g.ravel() for g in grids]
    cart = []
    rest = np.ones_like(xi[0])
    for s in xi:
        cart.append(rest * s)
        rest = rest * (1.0 - s)
    cart = np.stack(cart, axis=-1)
    bary = np.concatenate([1.0 - cart.sum(axis=1, keepdims=True), cart], axis=1)
    return bary, wgrid.ravel()


def integrate_weighted(rule: QuadratureRule, integrand, f: ScalarField | None = None) -> float:
    """Sum of ``w_i * integrand(x_i) * exp(-f(x_i))``.

    ``integrand`` may be a callable on the point array or precomputed values.
    """
    vals = integrand(rule.points) if callable(integrand) else integrand
    vals = np.broadcast_to(np.asarray(vals, dtype=float), rule.weights.shape)
    if f is None:
        return rule.integrate(vals)
    fv = eval_jet2(f, rule.points, order=0).value
    return rule.integrate(vals * np.exp(-fv))
