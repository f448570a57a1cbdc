"""Oriented simplicial complexes, shape generators, refinement and Betti numbers.

Every k-simplex with k below the top dimension is stored as a sorted vertex
tuple and oriented by that order. Top simplices carry an extra orientation sign
relative to their sorted order. Coboundary matrices are integer sparse
matrices built from these orientations.
"""
from __future__ import annotations

import math
import os
from collections import deque
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse as sp


class NonManifold(ValueError):
    pass


class NonOrientable(ValueError):
    pass


class UnsupportedShape(ValueError):
    pass


class MeshFormatError(ValueError):
    pass


def _row_keys(rows: np.ndarray) -> np.ndarray:
    """Void view of integer rows whose byte order matches numeric lexicographic order."""
    rows = np.ascontiguousarray(rows, dtype=">i8")
    return rows.view(np.dtype((np.void, 8 * rows.shape[1]))).ravel()


def _unique_rows(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lexicographically sorted unique rows and the inverse index."""
    keys = _row_keys(rows)
    uniq, inverse = np.unique(keys, return_inverse=True)
    out = np.frombuffer(uniq.tobytes(), dtype=">i8").reshape(-1, rows.shape[1]).astype(np.int64)
    return out, inverse.ravel()


def _lookup(table: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Indices of ``rows`` in the sorted unique ``table`` (all must be present)."""
    tk, rk = _row_keys(table), _row_keys(rows)
    idx = np.searchsorted(tk, rk)
    if np.any(idx >= len(tk)) or np.any(tk[np.minimum(idx, len(tk) - 1)] != rk):
        raise KeyError("simplex not found in complex")
    return idx


def _perm_sign(rows: np.ndarray) -> np.ndarray:
    """Parity of the permutation sorting each row (rows have distinct entries)."""
    rows = np.asarray(rows)
    sign = np.ones(len(rows), dtype=np.int64)
    m = rows.shape[1]
    for i in range(m):
        for j in range(i + 1, m):
            sign = np.where(rows[:, i] > rows[:, j], -sign, sign)
    return sign


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """An oriented simplicial manifold (with or without boundary).

    ``vertices`` are ambient coordinates, or chart coordinates in the
    fundamental domain when ``periods`` is set (flat torus).
    """

    ambient_dim: int
    vertices: np.ndarray
    simplices: tuple
    orientation: np.ndarray
    coboundary: tuple
    periods: tuple | None = None
    shape: str = "custom"
    level: int = 0
    params: tuple = ()

    @property
    def top_dim(self) -> int:
        return len(self.simplices) - 1

    def count(self, k: int) -> int:
        return len(self.simplices[k])

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.simplices)

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * n for k, n in enumerate(self.counts))

    def simplex_coords(self, k: int) -> np.ndarray:
        """Vertex coordinates per k-simplex, shape ``(N_k, k+1, D)``.

        On periodic complexes coordinates are unwrapped relative to the first
        vertex so that each simplex is a genuine affine simplex in the chart.
        """
        pts = self.vertices[self.simplices[k]]
        if self.periods is not None:
            per = np.asarray(self.periods, dtype=float)
            diff = pts - pts[:, :1, :]
            pts = pts[:, :1, :] + diff - per * np.round(diff / per)
        return pts

    def mesh_size(self) -> float:
        e = self.simplex_coords(1)
        return float(np.max(np.linalg.norm(e[:, 1] - e[:, 0], axis=1)))

    def describe(self) -> str:
        args = ",".join(repr(p) for p in self.params)
        return f"{self.shape}({args})" if self.shape != "custom" else f"custom(top_dim={self.top_dim})"

    def index_of(self, k: int, rows) -> np.ndarray:
        rows = np.sort(np.atleast_2d(np.asarray(rows, dtype=np.int64)), axis=1)
        return _lookup(self.simplices[k], rows)

    def ridge_degree(self) -> np.ndarray:
        """Number of top simplices incident to each (top-1)-simplex."""
        d = self.coboundary[self.top_dim - 1]
        return np.asarray(abs(d).sum(axis=0)).ravel().astype(int)

    def is_closed(self) -> bool:
        return bool(np.all(self.ridge_degree() == 2))


def build_complex(ambient_dim: int, vertex_coords, top_simplices, periods=None,
                  shape: str = "custom", level: int = 0, params: tuple = ()) -> SimplicialComplex:
    """Build all faces and coboundaries; the vertex order of each top simplex
    gives its initial orientation.

    Inconsistent orientations are repaired by propagation from the first cell
    of each connected component; :class:`NonOrientable` is raised when no
    consistent choice exists.
    """
    verts = np.asarray(vertex_coords, dtype=float)
    if verts.ndim == 1:
        verts = verts[:, None]
    if verts.shape[1] != ambient_dim:
        raise ValueError(f"vertices have dimension {verts.shape[1]}, expected {ambient_dim}")
    tops = np.asarray(top_simplices, dtype=np.int64)
    if tops.ndim != 2 or len(tops) == 0:
        raise ValueError("need a non-empty array of top simplices")
    if tops.min() < 0 or tops.max() >= len(verts):
        raise ValueError("top simplices reference missing vertices")
    n = tops.shape[1] - 1
    if np.any(np.diff(np.sort(tops, axis=1), axis=1) == 0):
        raise ValueError("degenerate simplex with a repeated vertex")
    sign = _perm_sign(tops)
    tops_sorted = np.sort(tops, axis=1)
    tops_unique, inv = _unique_rows(tops_sorted)
    if len(tops_unique) != len(tops_sorted):
        raise NonManifold("duplicate top simplex")
    order = np.argsort(inv)
    sign = sign[order]
    tops_sorted = tops_unique

    simplices = []
    for k in range(n):
        faces = np.concatenate([tops_sorted[:, list(c)] for c in combinations(range(n + 1), k + 1)])
        simplices.append(_unique_rows(faces)[0])
    simplices.append(tops_sorted)

    def incidence(k: int) -> sp.csr_matrix:
        hi = simplices[k + 1]
        rows, cols, vals = [], [], []
        for i in range(k + 2):
            face = np.delete(hi, i, axis=1)
            cols.append(_lookup(simplices[k], face))
            rows.append(np.arange(len(hi)))
            vals.append(np.full(len(hi), (-1) ** i, dtype=np.int64))
        rows, cols, vals = map(np.concatenate, (rows, cols, vals))
        return sp.csr_matrix((vals, (rows, cols)), shape=(len(hi), len(simplices[k])), dtype=np.int64)

    cob = [incidence(k) for k in range(n)]
    if n >= 1:
        ridge = cob[n - 1]
        deg = np.asarray(abs(ridge).sum(axis=0)).ravel()
        if np.any(deg > 2):
            raise NonManifold(f"{int(np.sum(deg > 2))} ridges shared by more than two cells")
        sign = _orient(ridge, sign)
        cob[n - 1] = sp.csr_matrix(sp.diags(sign) @ ridge)
    return SimplicialComplex(ambient_dim, verts, tuple(simplices), sign.astype(np.int64),
                             tuple(cob), None if periods is None else tuple(float(p) for p in periods),
                             shape, level, tuple(params))


def _orient(ridge: sp.csr_matrix, sign: np.ndarray) -> np.ndarray:
    """Make the induced orientations of every interior ridge cancel."""
    signed = sp.diags(sign) @ ridge
    if np.all(np.asarray(signed.sum(axis=0)).ravel()[np.asarray(abs(ridge).sum(axis=0)).ravel() == 2] == 0):
        return sign
    csc = ridge.tocsc()
    n_cells = ridge.shape[0]
    # adjacency through shared ridges: (cell a, cell b, relative incidence product)
    pairs = {}
    for r in range(csc.shape[1]):
        lo, hi = csc.indptr[r], csc.indptr[r + 1]
        if hi - lo == 2:
            a, b = csc.indices[lo:hi]
            va, vb = csc.data[lo:hi]
            pairs.setdefault(a, []).append((b, va, vb))
            pairs.setdefault(b, []).append((a, vb, va))
    new = np.zeros(n_cells, dtype=np.int64)
    for start in range(n_cells):
        if new[start]:
            continue
        new[start] = sign[start]
        queue = deque([start])
        while queue:
            a = queue.popleft()
            for b, va, vb in pairs.get(a, ()):
                want = -new[a] * va * vb  # s_a*va + s_b*vb == 0
                if new[b] == 0:
                    new[b] = want
                    queue.append(b)
                elif new[b] != want:
                    raise NonOrientable("no consistent orientation exists")
    return new


# ---------------------------------------------------------------------------
# boundary


@dataclass(frozen=True, eq=False)
class BoundaryMap:
    """Boundary complex with inclusion maps and inner normals.

    ``inclusion[k][i]`` is the parent index of boundary k-simplex ``i``;
    ``inclusion_sign[k][i]`` relates the two orientations (always +1 below
    the boundary's top degree). ``inner_normal[i]`` belongs to boundary top
    simplex ``i``. ``boundary`` is ``None`` for closed complexes.
    """

    boundary: SimplicialComplex | None
    inclusion: tuple
    inclusion_sign: tuple
    inner_normal: np.ndarray
    vertex_map: np.ndarray

    @property
    def is_empty(self) -> bool:
        return self.boundary is None


def boundary_complex(K: SimplicialComplex) -> BoundaryMap:
    n = K.top_dim
    deg = K.ridge_degree()
    bfacets = np.nonzero(deg == 1)[0]
    if len(bfacets) == 0:
        return BoundaryMap(None, (), (), np.zeros((0, K.ambient_dim)), np.zeros(0, dtype=np.int64))
    ridge = K.coboundary[n - 1].tocsc()
    # induced orientation (Stokes): sign of the incident cell's coboundary entry
    induced = np.array([ridge.data[ridge.indptr[r]] for r in bfacets], dtype=np.int64)
    cells = np.array([ridge.indices[ridge.indptr[r]] for r in bfacets], dtype=np.int64)
    facets = K.simplices[n - 1][bfacets]
    vmap = np.unique(facets)
    local = np.searchsorted(vmap, facets)
    oriented = local.copy()
    flip = induced < 0
    if n - 1 >= 1:
        oriented[flip, 0], oriented[flip, 1] = local[flip, 1], local[flip, 0]
    if n - 1 == 0:
        # a 0-dimensional boundary: orientation lives in the sign only
        B = SimplicialComplex(K.ambient_dim, K.vertices[vmap], (local,), induced, (),
                              K.periods, "boundary", K.level, ())
    else:
        B = build_complex(K.ambient_dim, K.vertices[vmap], oriented, periods=K.periods,
                          shape="boundary", level=K.level)
    inclusion, inc_sign = [], []
    for k in range(n):
        rows = vmap[B.simplices[k]]
        inclusion.append(K.index_of(k, rows))
        # parent k-simplices are oriented by sorted order; only B's top ones carry a sign
        s = B.orientation.copy() if k == n - 1 else np.ones(len(rows), dtype=np.int64)
        inc_sign.append(s)
    # inner normals, one per boundary top simplex (in B's ordering)
    parent_facet = inclusion[n - 1]
    order = np.searchsorted(bfacets, parent_facet)
    cell_of = cells[order]
    fc = K.simplex_coords(n - 1)[parent_facet]
    cc = K.simplex_coords(n)[cell_of]
    if K.periods is not None:
        raise UnsupportedShape("periodic complexes have no boundary support")
    normals = _inner_normals(fc, cc)
    return BoundaryMap(B, tuple(inclusion), tuple(inc_sign), normals, vmap)


def _inner_normals(facets: np.ndarray, cells: np.ndarray) -> np.ndarray:
    fb = facets.mean(axis=1)
    v = cells.mean(axis=1) - fb
    if facets.shape[1] > 1:
        E = facets[:, 1:, :] - facets[:, :1, :]
        Q, _ = np.linalg.qr(np.swapaxes(E, 1, 2))
        v = v - np.einsum("nij,nj->ni", Q, np.einsum("nij,ni->nj", Q, v))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# generators

_ROUND = {"circle", "icosphere", "disc", "ball3", "annulus3", "sphere_shell"}


def _orient_rows(shape: str, verts: np.ndarray, tops: np.ndarray, periods=None) -> np.ndarray:
    """Reorder top simplices so that their orientation matches the shape convention.

    Solid shapes use positive ambient volume; closed hypersurfaces around the
    origin use the outward normal; the torus uses positive chart area.
    """
    pts = verts[tops]
    if periods is not None:
        per = np.asarray(periods, dtype=float)
        diff = pts - pts[:, :1, :]
        pts = pts[:, :1, :] + diff - per * np.round(diff / per)
    E = pts[:, 1:, :] - pts[:, :1, :]
    k, D = E.shape[1], E.shape[2]
    if k == D:
        s = np.sign(np.linalg.det(E))
    elif k == D - 1:
        # outward normal first: counterclockwise circles, outward-normal spheres
        s = np.sign(np.linalg.det(np.concatenate([pts.mean(axis=1)[:, None, :], E], axis=1)))
    else:
        raise UnsupportedShape("cannot orient a simplex of this codimension")
    if np.any(s == 0):
        raise ValueError("degenerate simplex in generated mesh")
    tops = tops.copy()
    flip = s < 0
    tops[flip, 0], tops[flip, 1] = tops[flip, 1].copy(), tops[flip, 0].copy()
    return tops


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    t = (1.0 + math.sqrt(5.0)) / 2.0
    v = np.array([[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
                  [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
                  [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]], dtype=float)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    f = np.array([[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
                  [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
                  [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
                  [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    return v, f


def _make(shape: str, D: int, verts, tops, level: int, params: tuple, periods=None) -> SimplicialComplex:
    tops = _orient_rows(shape, np.asarray(verts, dtype=float), np.asarray(tops, dtype=np.int64), periods)
    return build_complex(D, verts, tops, periods=periods, shape=shape, level=level, params=params)


def interval(n: int = 2) -> SimplicialComplex:
    """[-1, 1] split into ``n`` equal segments."""
    if n < 1:
        raise UnsupportedShape("interval needs at least one segment")
    x = np.linspace(-1.0, 1.0, n + 1)[:, None]
    tops = np.stack([np.arange(n), np.arange(1, n + 1)], axis=1)
    return _make("interval", 1, x, tops, 0, (n,))


def circle(n: int) -> SimplicialComplex:
    if n < 3:
        raise UnsupportedShape("circle needs at least 3 segments")
    th = 2.0 * math.pi * np.arange(n) / n
    x = np.stack([np.cos(th), np.sin(th)], axis=1)
    tops = np.stack([np.arange(n), (np.arange(n) + 1) % n], axis=1)
    return _make("circle", 2, x, tops, 0, (n,))


def icosphere(level: int) -> SimplicialComplex:
    v, f = _icosahedron()
    K = _make("icosphere", 3, v, f, 0, (0,))
    for _ in range(level):
        K = refine(K)
    return K


def disc(level: int) -> SimplicialComplex:
    """Unit disc: a hexagon fan refined ``level`` times with round shells."""
    th = 2.0 * math.pi * np.arange(6) / 6
    v = np.vstack([[0.0, 0.0], np.stack([np.cos(th), np.sin(th)], axis=1)])
    f = np.array([[0, 1 + i, 1 + (i + 1) % 6] for i in range(6)])
    K = _make("disc", 2, v, f, 0, (0,))
    for _ in range(level):
        K = refine(K)
    return K


def ball3(level: int) -> SimplicialComplex:
    """Unit ball: the icosahedral cone refined ``level`` times.

    Edge midpoints are placed at the mean radius of their endpoints, so the
    vertices lie on concentric spheres and the boundary is exactly
    ``icosphere(level)``.
    """
    v, f = _icosahedron()
    verts = np.vstack([v, np.zeros((1, 3))])
    tops = np.hstack([f, np.full((len(f), 1), 12)])
    K = _make("ball3", 3, verts, tops, 0, (0,))
    for _ in range(level):
        K = refine(K)
    return K


def annulus3(level: int, inner_radius: float = 0.5, layers: int | None = None) -> SimplicialComplex:
    """Spherical shell ``inner_radius <= |x| <= 1`` by prism layering over an icosphere."""
    if not 0.0 < inner_radius < 1.0:
        raise UnsupportedShape("annulus3 needs 0 < inner_radius < 1")
    S = icosphere(level)
    L = layers if layers is not None else max(1, 2 ** level // 2)
    nv = len(S.vertices)
    radii = np.linspace(inner_radius, 1.0, L + 1)
    verts = np.vstack([r * S.vertices for r in radii])
    tris = S.simplices[2]
    tets = []
    for j in range(L):
        lo, hi = j * nv, (j + 1) * nv
        for a, b, c in tris:  # sorted, so the staircase split is conforming
            tets += [[lo + a, lo + b, lo + c, hi + c],
                     [lo + a, lo + b, hi + b, hi + c],
                     [lo + a, hi + a, hi + b, hi + c]]
    return _make("annulus3", 3, verts, np.array(tets), level, (level, inner_radius, L))


def flat_torus(nx: int, ny: int | None = None, periods=(1.0, 1.0)) -> SimplicialComplex:
    """Periodic triangulation of ``[0, Lx) x [0, Ly)`` with chart coordinates."""
    ny = nx if ny is None else ny
    if nx < 3 or ny < 3:
        raise UnsupportedShape("flat_torus needs nx, ny >= 3")
    Lx, Ly = map(float, periods)
    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    verts = np.stack([I.ravel() * Lx / nx, J.ravel() * Ly / ny], axis=1)
    idx = lambda i, j: (i % nx) + nx * (j % ny)
    tops = []
    for j in range(ny):
        for i in range(nx):
            v00, v10, v11, v01 = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            tops += [[v00, v10, v11], [v00, v11, v01]]
    return _make("flat_torus", 2, verts, np.array(tops), 0, (nx, ny, Lx, Ly), periods=(Lx, Ly))


def generate(shape: str, *args, **kwargs) -> SimplicialComplex:
    """Dispatch by shape name: ``interval, circle, disc, ball3, annulus3, icosphere, flat_torus``."""
    gens = {"interval": interval, "circle": circle, "disc": disc, "ball3": ball3,
            "annulus3": annulus3, "icosphere": icosphere, "flat_torus": flat_torus}
    if shape not in gens:
        raise UnsupportedShape(f"unknown shape {shape!r}")
    return gens[shape](*args, **kwargs)


# ---------------------------------------------------------------------------
# refinement

_OCTA_EQUATOR = {  # axis (local edge ids) -> equator in cyclic order
    (0, 5): (1, 2, 4, 3),
    (1, 4): (0, 2, 5, 3),
    (2, 3): (0, 1, 5, 4),
}


def _midpoints(K: SimplicialComplex) -> np.ndarray:
    pts = K.simplex_coords(1)
    a, b = pts[:, 0], pts[:, 1]
    mid = 0.5 * (a + b)
    if K.shape in _ROUND:
        ra, rb = np.linalg.norm(a, axis=1), np.linalg.norm(b, axis=1)
        nm = np.linalg.norm(mid, axis=1)
        ok = nm > 0
        mid[ok] = mid[ok] / nm[ok, None] * (0.5 * (ra + rb))[ok, None]
    if K.periods is not None:
        mid = np.mod(mid, np.asarray(K.periods))
    return mid


def refine(K: SimplicialComplex) -> SimplicialComplex:
    """Regular midpoint subdivision (2^n children per top simplex).

    Round shapes keep their shells: each new vertex sits at the mean radius of
    its edge endpoints, which projects boundary midpoints onto the sphere.
    """
    n = K.top_dim
    nv = len(K.vertices)
    verts = np.vstack([K.vertices, _midpoints(K)])
    tops = K.simplices[n].copy()
    flip = K.orientation < 0
    if n >= 1:
        tops[flip, 0], tops[flip, 1] = tops[flip, 1].copy(), tops[flip, 0].copy()
    pairs = list(combinations(range(n + 1), 2))
    mids = np.stack([nv + K.index_of(1, tops[:, list(p)]) for p in pairs], axis=1)
    m = {p: mids[:, i] for i, p in enumerate(pairs)}
    if n == 1:
        kids = [np.stack([tops[:, 0], m[(0, 1)]], 1), np.stack([m[(0, 1)], tops[:, 1]], 1)]
    elif n == 2:
        a, b, c = tops.T
        ab, ac, bc = m[(0, 1)], m[(0, 2)], m[(1, 2)]
        kids = [np.stack(x, 1) for x in ((a, ab, ac), (ab, b, bc), (ac, bc, c), (ab, bc, ac))]
    elif n == 3:
        a, b, c, d = tops.T
        e = [m[p] for p in pairs]  # ab ac ad bc bd cd
        kids = [np.stack(x, 1) for x in ((a, e[0], e[1], e[2]), (e[0], b, e[3], e[4]),
                                         (e[1], e[3], c, e[5]), (e[2], e[4], e[5], d))]
        # octahedron: split along its shortest diagonal
        P = verts
        if K.periods is not None:
            raise UnsupportedShape("3D periodic refinement is not supported")
        lens = np.stack([np.linalg.norm(P[e[i]] - P[e[j]], axis=1) for i, j in _OCTA_EQUATOR], 1)
        choice = np.argmin(lens, axis=1)
        octa = []
        for t, ((i, j), eq) in enumerate(_OCTA_EQUATOR.items()):
            sel = choice == t
            for q in range(4):
                octa.append(np.stack([e[i][sel], e[j][sel], e[eq[q]][sel], e[eq[(q + 1) % 4]][sel]], 1))
        kids += octa
    else:
        raise UnsupportedShape("refinement needs top dimension 1..3")
    new_tops = np.concatenate(kids)
    if K.shape in ("custom", "boundary"):
        # keep the parent's orientation: children inherit it through the vertex order
        return build_complex(K.ambient_dim, verts, new_tops, K.periods, K.shape, K.level + 1, K.params)
    params = K.params
    if K.shape in ("icosphere", "disc", "ball3"):
        params = (K.level + 1,)
    elif K.shape == "circle":
        params = (len(K.simplices[1]) * 2,)
    elif K.shape == "flat_torus":
        nx, ny, Lx, Ly = K.params
        params = (2 * nx, 2 * ny, Lx, Ly)
    elif K.shape == "interval":
        params = (len(K.simplices[1]) * 2,)
    return _make(K.shape, K.ambient_dim, verts, new_tops, K.level + 1, params, K.periods)


# ---------------------------------------------------------------------------
# cohomology


def rational_rank(M: sp.spmatrix) -> int:
    """Exact rank over Q of an integer sparse matrix."""
    from sympy import QQ, ZZ
    from sympy.polys.matrices import DomainMatrix

    M = sp.coo_matrix(M)
    if M.shape[0] == 0 or M.shape[1] == 0 or M.nnz == 0:
        return 0
    rows: dict[int, dict[int, object]] = {}
    for i, j, v in zip(M.row.tolist(), M.col.tolist(), M.data.tolist()):
        if v:
            rows.setdefault(i, {})[j] = ZZ(int(v))
    dm = DomainMatrix(rows, M.shape, ZZ).to_sparse().convert_to(QQ)
    return int(dm.rank())


def betti(K: SimplicialComplex) -> list[int]:
    """Betti numbers b_0..b_top from exact rational ranks of the coboundaries."""
    n = K.top_dim
    ranks = [rational_rank(K.coboundary[k]) for k in range(n)]
    out = []
    for p in range(n + 1):
        kernel = K.count(p) - (ranks[p] if p < n else 0)
        image = ranks[p - 1] if p >= 1 else 0
        out.append(kernel - image)
    return out


# ---------------------------------------------------------------------------
# text dump / load


def dump(K: SimplicialComplex, path_or_file) -> None:
    """Plain text: ``dim D n``, ``vertices NV`` + rows, ``simplices NT`` + rows
    ``i j ... sign``, optional ``periods`` and ``shape`` lines."""
    lines = [f"dim {K.ambient_dim} {K.top_dim}", f"vertices {len(K.vertices)}"]
    lines += [" ".join(repr(float(c)) for c in row) for row in K.vertices]
    tops = K.simplices[K.top_dim]
    lines.append(f"simplices {len(tops)}")
    lines += [" ".join(str(int(i)) for i in row) + f" {int(s)}" for row, s in zip(tops, K.orientation)]
    if K.periods is not None:
        lines.append("periods " + " ".join(repr(p) for p in K.periods))
    lines.append(f"shape {K.shape} {K.level} " + " ".join(repr(p) for p in K.params))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
        return
    tmp = f"{path_or_file}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path_or_file)


def load(path_or_file) -> SimplicialComplex:
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        with open(path_or_file) as fh:
            text = fh.read()
    lines = text.splitlines()
    pos = 0

    def take(prefix: str) -> list[str]:
        nonlocal pos
        if pos >= len(lines) or not lines[pos].startswith(prefix):
            raise MeshFormatError(f"line {pos + 1}: expected '{prefix} ...'")
        parts = lines[pos].split()
        pos += 1
        return parts[1:]

    try:
        D, n = map(int, take("dim"))
        nv = int(take("vertices")[0])
        verts = np.array([[float(t) for t in lines[pos + i].split()] for i in range(nv)]).reshape(nv, D)
        pos += nv
        nt = int(take("simplices")[0])
        rows = np.array([[int(t) for t in lines[pos + i].split()] for i in range(nt)], dtype=np.int64)
        pos += nt
    except (ValueError, IndexError) as exc:
        raise MeshFormatError(f"malformed mesh near line {pos + 1}: {exc}") from None
    if rows.shape[1] != n + 2:
        raise MeshFormatError("simplex rows must list n+1 vertices and a sign")
    periods, shape, level, params = None, "custom", 0, ()
    while pos < len(lines) and lines[pos].strip():
        head = lines[pos].split()
        if head[0] == "periods":
            periods = tuple(float(t) for t in head[1:])
        elif head[0] == "shape":
            shape, level = head[1], int(head[2])
            params = tuple(_num(t) for t in head[3:])
        else:
            raise MeshFormatError(f"line {pos + 1}: unknown section {head[0]!r}")
        pos += 1
    tops, signs = rows[:, :-1].copy(), rows[:, -1]
    flip = signs < 0
    if n >= 1:
        tops[flip, 0], tops[flip, 1] = rows[flip, 1], rows[flip, 0]
    return build_complex(D, verts, tops, periods, shape, level, params)


def _num(tok: str):
    try:
        return int(tok)
    except ValueError:
        return float(tok)
