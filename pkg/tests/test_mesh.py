import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from weighted_hodge import mesh as M


def dd_zero(K):
    for k in range(K.top_dim - 1):
        prod = (K.coboundary[k + 1] @ K.coboundary[k])
        assert abs(prod).sum() == 0


def test_triangle_and_tetrahedron():
    tri = M.build_complex(2, [(0, 0), (1, 0), (0, 1)], [[0, 1, 2]])
    dd_zero(tri)
    assert tri.euler_characteristic() == 1
    tet = M.build_complex(3, [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)], [[0, 1, 2, 3]])
    dd_zero(tet)
    assert tet.counts == (4, 6, 4, 1)
    assert tet.euler_characteristic() == 1


def test_torus_grid_counts():
    T = M.flat_torus(8, 8)
    assert T.euler_characteristic() == 0
    assert M.flat_torus(4, 4).counts == (16, 48, 32)


def test_icosphere_counts():
    assert M.icosphere(0).counts == (12, 30, 20)
    R = M.refine(M.icosphere(0))
    assert R.counts == (42, 120, 80)
    assert np.max(np.abs(np.linalg.norm(R.vertices, axis=1) - 1)) < 1e-14


def test_circle_hexagon_perimeter():
    C = M.circle(6)
    e = C.simplex_coords(1)
    assert C.count(1) == 6
    assert abs(np.linalg.norm(e[:, 1] - e[:, 0], axis=1).sum() - 6.0) < 1e-14
    assert np.max(np.abs(np.linalg.norm(C.vertices, axis=1) - 1)) < 1e-14


def test_refinement_multiplies_top_cells():
    D = M.disc(1)
    assert M.refine(D).count(2) == 4 * D.count(2)
    B = M.ball3(1)
    assert M.refine(B).count(3) == 8 * B.count(3)


@pytest.mark.parametrize("make,betti", [
    (lambda: M.icosphere(0), [1, 0, 1]),
    (lambda: M.icosphere(2), [1, 0, 1]),
    (lambda: M.flat_torus(5, 7), [1, 2, 1]),
    (lambda: M.ball3(1), [1, 0, 0, 0]),
    (lambda: M.disc(2), [1, 0, 0]),
    (lambda: M.circle(9), [1, 1]),
    (lambda: M.annulus3(1), [1, 0, 1, 0]),
])
def test_betti(make, betti):
    K = make()
    assert M.betti(K) == betti
    assert K.euler_characteristic() == sum((-1) ** i * b for i, b in enumerate(betti))


@pytest.mark.parametrize("shape,args", [("icosphere", (1,)), ("disc", (1,)), ("ball3", (1,)),
                                        ("flat_torus", (3, 4)), ("circle", (7,)), ("annulus3", (1,))])
def test_refinement_invariants(shape, args):
    K = M.generate(shape, *args)
    R = M.refine(K)
    dd_zero(K)
    dd_zero(R)
    assert K.euler_characteristic() == R.euler_characteristic()
    assert M.betti(K) == M.betti(R)


@pytest.mark.parametrize("shape", ["disc", "ball3", "annulus3"])
def test_boundary_normals_inward(shape):
    K = M.generate(shape, 1)
    bm = M.boundary_complex(K)
    B = bm.boundary
    assert B.is_closed()
    assert np.allclose(np.linalg.norm(bm.inner_normal, axis=1), 1.0)
    n = K.top_dim
    deg = K.ridge_degree()
    ridge = K.coboundary[n - 1].tocsc()
    facet_ids = bm.inclusion[n - 1]
    for normal, fid in zip(bm.inner_normal, facet_ids):
        assert deg[fid] == 1
        cell = ridge.indices[ridge.indptr[fid]]
        fb = K.simplex_coords(n - 1)[fid].mean(axis=0)
        cb = K.simplex_coords(n)[cell].mean(axis=0)
        assert normal @ (cb - fb) > 0
    # boundary of the boundary is empty
    assert M.boundary_complex(B).is_empty


def test_boundary_shapes():
    bm = M.boundary_complex(M.disc(2))
    rim = np.sum(np.isclose(np.linalg.norm(M.disc(2).vertices, axis=1), 1.0))
    assert bm.boundary.count(0) == rim == bm.boundary.count(1)
    S = M.boundary_complex(M.ball3(2)).boundary
    assert S.euler_characteristic() == 2
    assert M.boundary_complex(M.flat_torus(4, 4)).is_empty


def test_ball3_boundary_is_icosphere():
    S = M.boundary_complex(M.ball3(2)).boundary
    assert S.counts == M.icosphere(2).counts
    assert np.allclose(np.linalg.norm(S.vertices, axis=1), 1.0)


def test_nonmanifold_and_nonorientable():
    with pytest.raises(M.NonManifold):
        M.build_complex(3, np.random.default_rng(0).normal(size=(5, 3)), [[0, 1, 2], [0, 1, 3], [0, 1, 4]])
    # Moebius strip from a 5-vertex triangulation
    verts = np.random.default_rng(1).normal(size=(5, 3))
    mob = [[0, 1, 2], [1, 2, 3], [2, 3, 4], [3, 4, 0], [4, 0, 1]]
    with pytest.raises(M.NonOrientable):
        M.build_complex(3, verts, mob)


def test_unsupported_shape():
    with pytest.raises(M.UnsupportedShape):
        M.generate("klein_bottle", 2)


@pytest.mark.parametrize("shape,args", [("ball3", (1,)), ("flat_torus", (3, 5)), ("icosphere", (1,))])
def test_dump_load_bit_exact(shape, args):
    K = M.generate(shape, *args)
    buf = io.StringIO()
    M.dump(K, buf)
    K2 = M.load(io.StringIO(buf.getvalue()))
    assert np.array_equal(K.vertices, K2.vertices)
    for a, b in zip(K.simplices, K2.simplices):
        assert np.array_equal(a, b)
    assert np.array_equal(K.orientation, K2.orientation)
    assert K.periods == K2.periods
    buf2 = io.StringIO()
    M.dump(K2, buf2)
    assert buf.getvalue() == buf2.getvalue()


def test_load_rejects_garbage():
    with pytest.raises(M.MeshFormatError):
        M.load(io.StringIO("dim 3 2\nvertices x\n"))


@given(st.integers(3, 9), st.integers(3, 9))
def test_torus_cohomology_any_grid(nx, ny):
    T = M.flat_torus(nx, ny)
    assert M.betti(T) == [1, 2, 1]
    assert T.is_closed()
