import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weighted_hodge import identity_lab as lab
from weighted_hodge.fields import PFormField, coord, parse_field, random_form, random_polynomial
from weighted_hodge.quadrature import FlatDomain
from weighted_hodge.smooth_ops import NonpositiveV


def form(p, D, comps):
    return PFormField.parse(p, D, comps)


def pts(D, n=50, seed=0):
    return np.random.default_rng(seed).uniform(-1, 1, size=(n, D))


ZERO2 = parse_field("0", 2)
ZERO3 = parse_field("0", 3)


def test_report_relative_residual():
    r = lab.make_report("x", 10.0, 10.5, tol=1e-3)
    assert r.abs_residual == 0.5 and r.rel_residual == pytest.approx(0.5 / 10.5) and not r.passed
    r = lab.make_report("x", 1e-3, 0.0, tol=1e-2)
    assert r.rel_residual == 1e-3 and r.passed
    json.loads(lab.reports_to_json([r]))


# pointwise -----------------------------------------------------------------

def test_bochner_examples():
    assert lab.check_bochner(form(1, 2, {(0,): "2", (1,): "-1"}), ZERO2, pts(2)).abs_residual == 0.0
    r = lab.check_bochner(form(1, 2, {(1,): "x1^2"}), parse_field("x1 + x2", 2), pts(2), tol=1e-11)
    assert r.passed
    # du for u = x1^2 x2 + sin(x1)
    du = form(1, 2, {(0,): "2*x1*x2 + cos(x1)", (1,): "x1^2"})
    assert lab.check_bochner(du, parse_field("r2/2", 2), pts(2), tol=1e-11).passed


def test_scalar_bochner_examples():
    r = lab.check_scalar_bochner(form(1, 2, {(1,): "x1"}), ZERO2, pts(2), tol=1e-11)
    assert r.passed
    # both sides equal -1 everywhere
    assert abs(r.lhs - 1.0) < 1e-12 and abs(r.rhs - 1.0) < 1e-12
    assert lab.check_scalar_bochner(form(2, 3, {(0, 1): "3"}), ZERO3, pts(3)).abs_residual == 0.0


def test_commutator_examples():
    x = pts(2)
    assert lab.check_commutator(parse_field("4", 2), form(1, 2, {(1,): "x1"}), ZERO2, x).abs_residual < 1e-14
    r = lab.check_commutator(coord(0), form(1, 2, {(1,): "1"}), ZERO2, x)
    assert r.lhs == 0.0 and r.rhs == 0.0


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("seed", range(5))
def test_pointwise_suite_random(dim, seed):
    case = lab.random_pointwise_case(seed, dim)
    for r in lab.pointwise_suite(case, 1e-10):
        assert r.passed, (r.identity_id, r.rel_residual)


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6), st.sampled_from([2, 3]), st.integers(1, 3))
def test_pointwise_suite_property(seed, dim, poly_degree):
    case = lab.random_pointwise_case(seed, dim, poly_degree=poly_degree, n_points=4)
    assert all(r.passed for r in lab.pointwise_suite(case, 1e-10))


def test_pointwise_detects_wrong_form():
    """Pairing the weighted Laplacian for f with the Weitzenbock term for 2f leaves a visible gap."""
    case = lab.random_pointwise_case(1, 3, degree=1)
    from weighted_hodge import smooth_ops as so
    L = so.weighted_hodge_laplacian(case.omega, case.f, case.points)
    R = so.rough_laplacian_f(case.omega, case.f, case.points) + so.weitzenbock_f(case.omega, case.f * 2, case.points)
    assert np.max(np.abs((L - R).array())) > 1e-3


# integral -------------------------------------------------------------------

def test_green_examples():
    B2 = FlatDomain.ball(2)
    om = form(0, 2, {(): "x1"})
    r0 = lab.check_green(om, form(1, 2, {}), ZERO2, B2, 6)
    assert r0.lhs == 0.0 and r0.abs_residual == 0.0
    r = lab.check_green(om, form(1, 2, {(0,): "1"}), ZERO2, B2, 6, tol=1e-12)
    assert abs(r.lhs - np.pi) < 1e-13 and r.passed
    rng = np.random.default_rng(4)
    A = FlatDomain.annulus(3)
    r = lab.check_green(random_form(rng, 1, 3, 2), random_form(rng, 2, 3, 2), parse_field("r2/4", 3), A, 24, 1e-9)
    assert r.passed, r.rel_residual


def test_green_laplacian_examples():
    B2 = FlatDomain.ball(2)
    r = lab.check_green_laplacian(form(1, 2, {(0,): "2", (1,): "1"}), ZERO2, B2, 6)
    assert r.lhs == 0.0 and r.abs_residual < 1e-14
    r = lab.check_green_laplacian(form(1, 2, {(1,): "x1"}), ZERO2, B2, 6, tol=1e-12)
    assert abs(r.lhs - np.pi) < 1e-13 and r.passed
    rng = np.random.default_rng(8)
    r = lab.check_green_laplacian(random_form(rng, 2, 3, 3), parse_field("r2/4 + x1", 3), FlatDomain.ball(3), 28, 1e-9)
    assert r.passed, r.rel_residual


def test_pohozhaev_examples():
    B2 = FlatDomain.ball(2)
    F2 = [coord(0), coord(1)]
    r = lab.check_pohozhaev(form(1, 2, {(0,): "2*x1*x2", (1,): "x1^2"}), F2, ZERO2, B2, 8)
    assert r.lhs == pytest.approx(0.0, abs=1e-13) and r.abs_residual < 1e-13
    assert lab.check_pohozhaev(form(1, 2, {(1,): "x1"}), F2, ZERO2, B2, 8, tol=1e-10).passed
    rng = np.random.default_rng(9)
    F3 = [random_polynomial(rng, 3, 2) for _ in range(3)]
    r = lab.check_pohozhaev(random_form(rng, 1, 3, 2), F3, parse_field("r2/4", 3), FlatDomain.ball(3), 26, 1e-8)
    assert r.passed, r.rel_residual


def test_div_f_sign():
    """F = grad u must give div_f F = -Delta_f u."""
    u = parse_field("x1^2*x2 + sin(x3)", 3)
    f = parse_field("x1 + x2^2", 3)
    F = [parse_field("2*x1*x2", 3), parse_field("x1^2", 3), parse_field("cos(x3)", 3)]
    x = pts(3, 10)
    from weighted_hodge.fields import eval_jet2
    from weighted_hodge.smooth_ops import laplacian_f_scalar
    ref = -laplacian_f_scalar(eval_jet2(u, x), eval_jet2(f, x))
    assert np.allclose(lab.div_f(F, f, x), ref, atol=1e-13)


def test_reilly_zero_form():
    r = lab.check_reilly(form(1, 3, {}), ZERO3, parse_field("1", 3), FlatDomain.ball(3), 6)
    assert r.lhs == 0.0 and r.abs_residual == 0.0


def test_reilly_classical_functions():
    du = form(1, 2, {(0,): "3*x1^2*x2 + 1", (1,): "x1^3 - 2*x2"})
    r = lab.check_reilly(du, parse_field("0.3", 2), parse_field("1", 2), FlatDomain.ball(2), 10, tol=1e-10)
    assert r.passed, r.rel_residual


@pytest.mark.parametrize("b_form", ["normal", "star"])
def test_reilly_reference_case(b_form):
    om = form(1, 3, {(1,): "x1", (0,): "x3^2"})
    r = lab.check_reilly(om, parse_field("r2/4", 3), parse_field("1+x1*x1/2", 3), FlatDomain.ball(3), 12,
                         b_form, tol=1e-8)
    assert r.passed, r.rel_residual
    assert set(r.terms) >= {"lhs_energy", "grad_V_term", "weitzenbock_term", "V_N_term",
                            "boundary_codiff_term", "B_f_term"}


def test_reilly_nonpositive_potential():
    with pytest.raises(NonpositiveV):
        lab.check_reilly(form(1, 2, {(0,): "1"}), ZERO2, parse_field("x1", 2), FlatDomain.ball(2), 6)


def test_reilly_constant_potential_kills_gradient_term():
    rng = np.random.default_rng(2)
    r = lab.check_reilly(random_form(rng, 1, 3, 2), parse_field("x1", 3), parse_field("2", 3),
                         FlatDomain.ball(3), 10)
    assert r.terms["grad_V_term"] == 0.0


def test_reilly_weight_shift():
    rng = np.random.default_rng(12)
    om, f, V = random_form(rng, 2, 3, 2), random_polynomial(rng, 3, 2, 0.4), parse_field("1.5 + x2^2", 3)
    dom = FlatDomain.annulus(3)
    a = lab.check_reilly(om, f, V, dom, 24)
    c = 0.7
    b = lab.check_reilly(om, f + c, V, dom, 24)
    for key in a.terms:
        assert b.terms[key] == pytest.approx(np.exp(-c) * a.terms[key], rel=1e-12, abs=1e-300)
    assert a.passed and b.passed


def test_residual_decreases_with_order():
    om = form(2, 3, {(0, 1): "x1*x3^2", (1, 2): "x2^3"})
    f, V = parse_field("r2/4", 3), parse_field("1 + x1*x1/2", 3)
    res = [lab.check_reilly(om, f, V, FlatDomain.ball(3), k).rel_residual for k in (2, 4, 8, 16)]
    assert res[-1] < 1e-9
    assert res[0] > res[-1]


@pytest.mark.parametrize("dom", [FlatDomain.ball(2), FlatDomain.ball(3), FlatDomain.annulus(3),
                                 FlatDomain.annulus(2)])
@pytest.mark.parametrize("p", [0, 1, 2])
def test_reilly_random(dom, p):
    if p > dom.dim:
        return
    rng = np.random.default_rng(100 + p)
    om = random_form(rng, p, dom.dim, 2, 0.5)
    f = random_polynomial(rng, dom.dim, 2, 0.3)
    V = random_polynomial(rng, dom.dim, 2, 0.1) + 1.5
    for b in ("normal", "star"):
        r = lab.check_reilly(om, f, V, dom, 28, b)
        assert r.passed, (b, r.rel_residual)


# boundary splitting ------------------------------------------------------------

def test_boundary_split_tangential_circle():
    om = form(1, 2, {(0,): "-x2", (1,): "x1"})
    for route in ("jet", "fd"):
        for r in lab.check_boundary_split(om, ZERO2, FlatDomain.ball(2), 50, 0, route, 1e-9):
            assert r.passed, (r.identity_id, r.abs_residual)


def test_boundary_split_constant_form():
    for r in lab.check_boundary_split(form(1, 3, {(2,): "1"}), ZERO3, FlatDomain.ball(3), 50, 0, "jet", 1e-12):
        assert r.passed, (r.identity_id, r.abs_residual)


@pytest.mark.parametrize("p", [1, 2])
@pytest.mark.parametrize("dom", [FlatDomain.ball(3), FlatDomain.annulus(3)])
def test_boundary_split_random(p, dom):
    rng = np.random.default_rng(p)
    om, f = random_form(rng, p, 3, 3, 0.5), random_polynomial(rng, 3, 2, 0.5)
    for route in ("jet", "fd"):
        for r in lab.check_boundary_split(om, f, dom, 50, 3, route, 1e-8):
            assert r.passed, (route, r.identity_id, r.abs_residual)


def test_boundary_split_degree_guard():
    with pytest.raises(ValueError):
        lab.check_boundary_split(form(0, 3, {(): "x1"}), ZERO3, FlatDomain.ball(3))
