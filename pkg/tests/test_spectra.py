import numpy as np
import pytest
import scipy.sparse as sp

from weighted_hodge import mesh as M
from weighted_hodge import spectra as S
from weighted_hodge.discrete import assemble
from weighted_hodge.linalg import DENSE_LIMIT, MassSolver, NotSPD, eig_gen_sym, pencil_residuals

from jacobi_oracle import jacobi_pencil


# generalized eigensolver ------------------------------------------------------

def test_eig_diagonal():
    lam, V = eig_gen_sym(np.diag([3.0, 1.0, 2.0]), np.eye(3))
    assert np.allclose(lam, [1, 2, 3])


def test_eig_identical_pencil():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 40))
    B = X @ X.T + 40 * np.eye(40)
    lam, V = eig_gen_sym(B, B)
    assert np.max(np.abs(lam - 1)) < 1e-12
    assert np.allclose(V.T @ B @ V, np.eye(40), atol=1e-10)


def test_eig_against_jacobi_oracle():
    rng = np.random.default_rng(200)
    X = rng.normal(size=(200, 200))
    Y = rng.normal(size=(200, 200))
    A, B = X + X.T, Y @ Y.T / 200 + np.eye(200)
    lam, V = eig_gen_sym(A, B)
    assert np.max(np.abs(lam - jacobi_pencil(A, B))) < 1e-9
    assert np.max(pencil_residuals(A, B, lam, V)) < 1e-12


def test_eig_subset_and_errors():
    A = np.diag(np.arange(1.0, 11.0))
    lam, V = eig_gen_sym(A, np.eye(10), k=3)
    assert np.allclose(lam, [1, 2, 3]) and V.shape == (10, 3)
    with pytest.raises(NotSPD):
        eig_gen_sym(A, -np.eye(10))
    with pytest.raises(ValueError):
        eig_gen_sym(A, np.eye(10), k=11)


def test_mass_solver_paths():
    n = DENSE_LIMIT + 500
    main = 4.0 + np.linspace(0, 1, n)
    T = sp.diags([main, -np.ones(n - 1), -np.ones(n - 1)], [0, 1, -1], format="csr")
    b = np.random.default_rng(0).normal(size=n)
    x = MassSolver(T).solve(b)
    assert np.linalg.norm(T @ x - b) < 1e-10 * np.linalg.norm(b)
    small = MassSolver(T[:50, :50])
    assert np.allclose(T[:50, :50] @ small.solve(b[:50]), b[:50])
    L = small.cholesky_lower()
    assert np.allclose(L @ L.T, T[:50, :50].toarray())


# Hodge spectra ---------------------------------------------------------------

def test_circle_spectrum():
    r = S.coexact_spectrum(assemble(M.circle(256), "0", 4), 0, 4)
    assert np.max(np.abs(r.eigenvalues / np.array([1, 1, 4, 4]) - 1)) < 1e-3
    assert np.all(r.residuals <= 1e-8)
    assert r.n_zero == 1


def test_sphere_spectrum_converges():
    vals, hs = [], []
    for lev in (2, 3, 4):
        r = S.coexact_spectrum(assemble(M.icosphere(lev), "0", 4), 0, 3)
        assert np.ptp(r.eigenvalues) < 1e-8 * r.eigenvalues[0]   # multiplicity 3
        vals.append(r.eigenvalues[0])
        hs.append(r.h)
    assert abs(vals[-1] - 2) < 0.02 * 2
    assert abs(S.richardson(hs, vals) - 2) < 0.005 * 2
    assert vals[0] > vals[1] > vals[2]


def test_torus_spectrum():
    r = S.coexact_spectrum(assemble(M.flat_torus(24, 24), "0", 4), 0, 5)
    four_pi2 = 4 * np.pi ** 2
    assert np.max(np.abs(r.eigenvalues[:4] / four_pi2 - 1)) < 0.02
    assert r.eigenvalues[4] > 1.5 * four_pi2


def test_monotone_convergence_first_five():
    rows = S.convergence_sweep("icosphere", [1, 2, 3, 4], 0, 5)
    ev = np.array([r["eigenvalues"] for r in rows])
    steps = np.abs(np.diff(ev, axis=0))
    assert np.all(steps[1:] < steps[:-1])


def test_spectra_weight_shift_invariant():
    K = M.icosphere(2)
    a = S.coexact_spectrum(assemble(K, "0.3*x1", 4), 1, 4).eigenvalues
    b = S.coexact_spectrum(assemble(K, "0.3*x1 + 2.5", 4), 1, 4).eigenvalues
    assert np.max(np.abs(a - b)) < 1e-10 * np.max(a)


def test_exact_spectrum_two_routes():
    WC = assemble(M.icosphere(2), "0", 4)
    d = S.exact_spectrum(WC, 1, 3, "duality").eigenvalues
    p = S.exact_spectrum(WC, 1, 3, "projection").eigenvalues
    c = S.coexact_spectrum(WC, 0, 3).eigenvalues
    assert np.max(np.abs(d - c)) < 1e-12 and np.max(np.abs(p - c)) < 1e-8 * c[0]
    assert abs(c[0] - 2) < 0.05


def test_first_duality_torus_sine_weight():
    WC = assemble(M.flat_torus(8, 8), "sin(2*pi*x1)", 4)
    a = S.coexact_spectrum(WC, 0, 1).eigenvalues[0]
    b = S.exact_spectrum(WC, 1, 1, "projection").eigenvalues[0]
    assert abs(a - b) < 1e-8 * a


def test_degree_guards():
    WC = assemble(M.icosphere(1), "0", 4)
    with pytest.raises(ValueError):
        S.coexact_spectrum(WC, 2, 1)
    with pytest.raises(ValueError):
        S.exact_spectrum(WC, 0, 1)


def test_duality_first_identity_exact_second_converges():
    """The first identity holds to solver precision on every mesh; the second
    pairs different discrete spaces and closes at second order in h."""
    defects = []
    for lev in (1, 2, 3):
        out = S.check_duality(assemble(M.icosphere(lev), "0.3*x1", 4))
        first = [r for r in out if r["identity"] == "coexact_p=exact_p+1"]
        assert all(r["rel_diff"] < 1e-9 for r in first)
        defects.append(max(r["rel_diff"] for r in out if r["identity"] == "coexact_p=exact_n-p"))
    assert defects[0] > defects[1] > defects[2]
    assert defects[1] / defects[2] > 3.0


def test_kernel_dim_matches_betti():
    K = M.flat_torus(5, 5)
    assert [S.kernel_dim(K, p) for p in range(3)] == [1, K.count(0) - 1 + 2, K.count(2)]


# Steklov -----------------------------------------------------------------------

def test_disc_steklov_machinery():
    r = S.steklov_spectrum(assemble(M.disc(5), "0", 4), 0, 5)
    ref = np.array([0, 1, 1, 2, 2])
    assert abs(r.eigenvalues[0]) < 1e-8
    assert np.max(np.abs(r.eigenvalues[1:] / ref[1:] - 1)) < 0.02
    assert np.all(r.eigenvalues >= -1e-10)


def test_ball_steklov_one_forms():
    r = S.steklov_spectrum(assemble(M.ball3(2), "0", 4), 1, 3)
    assert abs(r.eigenvalues[0] / 2 - 1) < 0.05
    assert np.all(r.residuals <= 1e-8)


def test_ball_steklov_functions():
    r = S.steklov_spectrum(assemble(M.ball3(2), "0", 4), 0, 4)
    assert abs(r.eigenvalues[0]) < 1e-8
    assert np.max(np.abs(r.eigenvalues[1:4] - 1)) < 0.05


def test_steklov_weight_shift():
    K = M.ball3(1)
    a = S.steklov_spectrum(assemble(K, "0.2*x1", 4), 1, 4).eigenvalues
    b = S.steklov_spectrum(assemble(K, "0.2*x1 - 1.3", 4), 1, 4).eigenvalues
    assert np.max(np.abs(a - b)) < 1e-10 * np.max(a)


def test_steklov_harmonic_modes():
    WC = assemble(M.ball3(1), "0", 4)
    a = S.steklov_spectrum(WC, 1, 3, include_harmonic=True).eigenvalues
    b = S.steklov_spectrum(WC, 1, 3, include_harmonic=False).eigenvalues
    assert np.allclose(a, b, rtol=1e-8)      # S^2 carries no harmonic 1-forms
    with pytest.raises(S.EmptyCoclosedSpace):
        S.steklov_spectrum(WC, 2, 1, include_harmonic=False)


def test_steklov_needs_boundary():
    with pytest.raises(ValueError):
        S.steklov_spectrum(assemble(M.icosphere(1), "0", 4), 0, 2)


# theorem checks ------------------------------------------------------------------

def test_hypothesis_constants():
    from weighted_hodge.quadrature import FlatDomain
    B = FlatDomain.ball(3)
    assert S.sigma_p(B, 1) == 1.0 and S.sigma_p(B, 2) == 2.0
    assert S.min_curvature(B) == 1.0
    A = FlatDomain.annulus(3, 0.5)
    assert S.sigma_p(A, 1) == -2.0


def test_thm12_sharp():
    chk = S.check_theorem("thm1.2", "ball3", 1, "0", level=3)
    assert chk.bound == 2.0
    assert 0.98 <= chk.computed / chk.bound <= 1.05
    assert abs(chk.margin) / chk.bound < 0.05
    assert chk.passed


@pytest.mark.parametrize("a", [0.25, 0.5])
def test_thm12_radial_weight(a):
    chk = S.check_theorem("thm1.2", "ball3", 1, f"{a}*r2/2", level=3)
    assert chk.hypotheses["inf_f_N"][0] == pytest.approx(-a, abs=1e-12)
    assert chk.bound == pytest.approx(2 - a, abs=1e-12)
    assert chk.passed and chk.margin >= a - 0.02 * chk.bound


def test_thm12_hypothesis_violation():
    with pytest.raises(S.HypothesisViolated) as info:
        S.check_theorem("thm1.2", "ball3", 1, "3*r2/2", level=2)
    assert info.value.check is not None and not info.value.check.hypothesis_ok
    chk = S.check_theorem("thm1.2", "ball3", 1, "3*r2/2", level=2, strict=False)
    assert not chk.passed


def test_thm13():
    chk = S.check_theorem("thm1.3", "ball3", 1, "0", "1", level=1)
    assert chk.passed and chk.computed == 0.0
    with pytest.raises(S.HypothesisViolated):
        S.check_theorem("thm1.3", "annulus3", 1, "0", "1", level=1)


def test_thm15_equality():
    chk = S.check_theorem("thm1.5", "ball3", 1, "0", level=2)
    assert chk.bound == 2.0 and chk.passed
    assert abs(chk.computed / 2 - 1) < 0.05


def test_thm16():
    chk = S.check_theorem("thm1.6", "ball3", 1, "0.2*x1", level=2, k=5)
    assert chk.details["factor"] == pytest.approx(1.25)
    assert chk.passed
    assert len(chk.details["sigma"]) == 5
    assert np.all(np.asarray(chk.details["sigma"]) <= 1.25 * np.asarray(chk.details["lambda"]) * 1.02)


def test_theorem_check_json():
    import json
    chk = S.check_theorem("thm1.5", "ball3", 1, "0", level=1)
    json.dumps(chk.to_dict())


def test_unknown_case():
    with pytest.raises(ValueError):
        S.check_theorem("thm9.9", "ball3")


# Levitin-Parnovski -------------------------------------------------------------

def test_lp_circle_equality():
    chk = S.lp_check(S.make_embedding("circle"), 1, 1, 256)
    assert abs(chk.computed - chk.bound) < 1e-3
    assert chk.details["rewrite_residual"] < 1e-12


def test_lp_circle_weighted_functions():
    emb = S.make_embedding("circle", "0.2*x1")
    for j in (1, 2, 3):
        chk = S.lp_check(emb, 0, j, 256)
        assert chk.margin > 0


def test_lp_sphere_one_forms():
    chk = S.lp_check(S.make_embedding("sphere"), 1, 1, 3)
    assert chk.passed


@pytest.mark.parametrize("f", ["0", "0.2*x1"])
def test_lp_clifford(f):
    emb = S.make_embedding("clifford", f)
    for p in (1, 2):
        chk = S.lp_check(emb, p, 1, 12)
        assert chk.margin >= 0


def test_lp_unsupported():
    with pytest.raises(S.UnsupportedEmbedding):
        S.make_embedding("hyperboloid")
    with pytest.raises(S.CurvatureUnavailable):
        S.lp_check(S.make_embedding("sphere"), 2, 1, 2)


@pytest.mark.parametrize("name,f", [("circle", "0"), ("circle", "0.2*x1"), ("sphere", "0"),
                                    ("clifford", "0"), ("clifford", "0.2*x1")])
def test_trace_identities(name, f):
    out = S.trace_identities(S.make_embedding(name, f))
    assert out["max_residual"] < 1e-9


def test_richardson_exact_on_model():
    hs = np.array([0.4, 0.2, 0.1])
    vals = 2.0 + 0.7 * hs ** 2
    assert abs(S.richardson(hs, vals) - 2.0) < 1e-13
    assert abs(S.richardson(hs, vals, rate=None) - 2.0) < 1e-10


def test_star_duality_reverses_the_weight():
    """Hodge star sends exact 2-forms for weight f to co-exact functions for weight -f,
    so without an f -> -f symmetry the second duality relation does not hold."""
    K = M.icosphere(2)
    exact2 = S.exact_spectrum(assemble(K, "x1^2", 4), 2, 1, "projection").eigenvalues[0]
    coex_f = S.coexact_spectrum(assemble(K, "x1^2", 4), 0, 1).eigenvalues[0]
    coex_minus = S.coexact_spectrum(assemble(K, "-x1^2", 4), 0, 1).eigenvalues[0]
    assert abs(exact2 - coex_minus) < 0.01 * coex_minus
    assert abs(exact2 - coex_f) > 0.15 * coex_f
