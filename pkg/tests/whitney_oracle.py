"""Exact Whitney mass matrices on a single simplex, by symbolic integration.

Independent of the package: barycentric coordinates from a sympy linear
solve, Whitney forms built componentwise, integrals over the reference
simplex with exact arithmetic.
"""
from itertools import combinations
from math import factorial

import sympy as sp


def whitney_mass(vertices, weight_exponent=0, degree=0):
    """Mass matrix of Whitney ``degree``-forms on the simplex ``vertices``.

    ``weight_exponent`` is a sympy expression in x1..xD (the weight is its
    negative exponential). Faces are the sorted vertex subsets, oriented by
    increasing vertex index.
    """
    V = [sp.Matrix(v) for v in vertices]
    D = len(V[0])
    k = len(V) - 1
    xs = sp.symbols(f"x1:{D + 1}")
    ts = sp.symbols(f"t1:{k + 1}")
    # affine map from the reference simplex
    J = sp.Matrix.hstack(*[V[i] - V[0] for i in range(1, k + 1)])
    X = V[0] + J * sp.Matrix(ts)
    lam = [1 - sum(ts)] + list(ts)
    # gradients of barycentric coordinates: rows of the pseudo-inverse
    Jp = (J.T * J).inv() * J.T
    grads = [-sum((Jp.row(i) for i in range(k)), sp.zeros(1, D))] + [Jp.row(i) for i in range(k)]
    vol_factor = sp.sqrt((J.T * J).det())
    w = sp.exp(-sp.sympify(weight_exponent).subs(dict(zip(xs, X))))
    faces = list(combinations(range(k + 1), degree + 1))
    slots = list(combinations(range(D), degree))

    def component(face, I):
        total = 0
        for j, i in enumerate(face):
            rest = [face[m] for m in range(len(face)) if m != j]
            G = sp.Matrix([[grads[r][c] for c in I] for r in rest]) if rest else sp.Matrix([[1]])
            total += (-1) ** j * lam[i] * (G.det() if rest else 1)
        return factorial(degree) * total

    comps = {(s, I): sp.expand(component(s, I)) for s in faces for I in slots}

    def integrate(expr):
        out = expr * w
        for m in reversed(range(k)):
            upper = 1 - sum(ts[:m])
            out = sp.integrate(out, (ts[m], 0, upper))
        return sp.simplify(out * vol_factor)

    n = len(faces)
    M = sp.zeros(n, n)
    for a in range(n):
        for b in range(a, n):
            val = integrate(sum(comps[(faces[a], I)] * comps[(faces[b], I)] for I in slots))
            M[a, b] = M[b, a] = val
    return faces, M
