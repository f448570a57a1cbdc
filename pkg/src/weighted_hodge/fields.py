"""Closed-form fields with exact second-order derivative evaluation.

Scalar fields are small expression trees over ambient coordinates. Evaluation
is forward mode on truncated 2-jets (value, gradient, Hessian), batched over
points with numpy so that quadrature sweeps stay vectorized.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field as dc_field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np


class DomainError(ValueError):
    """Raised when a field is evaluated outside its domain of definition."""


class FieldSyntaxError(ValueError):
    """Raised by :func:`parse_field` with a line/column diagnostic."""

    def __init__(self, message: str, text: str, lineno: int = 1, col: int = 0):
        self.lineno = lineno
        self.col = col
        self.text = text
        super().__init__(f"{message} (line {lineno}, column {col + 1}): {text!r}")


# ---------------------------------------------------------------------------
# jets


class Jet:
    """Truncated Taylor data of a scalar at a batch of points.

    ``value`` has the batch shape ``S``, ``grad`` shape ``S + (D,)`` and
    ``hess`` shape ``S + (D, D)``. Missing orders are ``None``; differentiating
    a jet drops one order.
    """

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad=None, hess=None):
        self.value = np.asarray(value, dtype=float)
        self.grad = None if grad is None else np.asarray(grad, dtype=float)
        self.hess = None if hess is None or grad is None else np.asarray(hess, dtype=float)

    @property
    def order(self) -> int:
        if self.grad is None:
            return 0
        return 1 if self.hess is None else 2

    @property
    def dim(self) -> int | None:
        return None if self.grad is None else self.grad.shape[-1]

    @classmethod
    def constant(cls, c, shape, dim: int, order: int = 2) -> "Jet":
        value = np.broadcast_to(np.asarray(c, dtype=float), shape).copy()
        grad = np.zeros(tuple(shape) + (dim,)) if order >= 1 else None
        hess = np.zeros(tuple(shape) + (dim, dim)) if order >= 2 else None
        return cls(value, grad, hess)

    @classmethod
    def variable(cls, x: np.ndarray, i: int, order: int = 2) -> "Jet":
        x = np.asarray(x, dtype=float)
        shape, dim = x.shape[:-1], x.shape[-1]
        grad = np.zeros(x.shape)
        grad[..., i] = 1.0
        hess = np.zeros(tuple(shape) + (dim, dim)) if order >= 2 else None
        return cls(x[..., i].copy(), grad if order >= 1 else None, hess)

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        if order == 1:
            return Jet(self.value, self.grad)
        return Jet(self.value)

    def partial(self, a: int) -> "Jet":
        if self.grad is None:
            raise ValueError("cannot differentiate a 0-jet")
        hess_row = None if self.hess is None else self.hess[..., a, :]
        return Jet(self.grad[..., a], hess_row)

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        shape = self.value.shape
        dim = self.dim or 1
        return Jet.constant(other, shape, dim, self.order)

    def __add__(self, other):
        o = self._coerce(other)
        k = min(self.order, o.order)
        grad = self.grad + o.grad if k >= 1 else None
        hess = self.hess + o.hess if k >= 2 else None
        return Jet(self.value + o.value, grad, hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.value,
                   None if self.grad is None else -self.grad,
                   None if self.hess is None else -self.hess)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            return Jet(self.value * c,
                       None if self.grad is None else self.grad * c[..., None],
                       None if self.hess is None else self.hess * c[..., None, None])
        o = other
        k = min(self.order, o.order)
        value = self.value * o.value
        grad = hess = None
        if k >= 1:
            grad = self.grad * o.value[..., None] + o.grad * self.value[..., None]
        if k >= 2:
            cross = self.grad[..., :, None] * o.grad[..., None, :]
            hess = (self.hess * o.value[..., None, None]
                    + o.hess * self.value[..., None, None]
                    + (cross + np.swapaxes(cross, -1, -2)))
        return Jet(value, grad, hess)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def chain(self, g0, g1, g2) -> "Jet":
        """Compose with a scalar function given its value and first two derivatives at ``value``."""
        grad = hess = None
        if self.grad is not None:
            grad = g1[..., None] * self.grad
            if self.hess is not None:
                outer = self.grad[..., :, None] * self.grad[..., None, :]
                hess = g2[..., None, None] * outer + g1[..., None, None] * self.hess
        return Jet(g0, grad, hess)

    def reciprocal(self) -> "Jet":
        u = self.value
        if np.any(u == 0):
            raise DomainError("division by zero")
        r = 1.0 / u
        return self.chain(r, -r * r, 2.0 * r * r * r)

    def __repr__(self):
        return f"Jet(value={self.value!r}, order={self.order})"


Jet2 = Jet


def _jet_exp(u: Jet) -> Jet:
    e = np.exp(u.value)
    return u.chain(e, e, e)


def _jet_sin(u: Jet) -> Jet:
    s, c = np.sin(u.value), np.cos(u.value)
    return u.chain(s, c, -s)


def _jet_cos(u: Jet) -> Jet:
    s, c = np.sin(u.value), np.cos(u.value)
    return u.chain(c, -s, -c)


def _jet_sqrt(u: Jet) -> Jet:
    if np.any(u.value < 0):
        raise DomainError("sqrt of a negative number")
    s = np.sqrt(u.value)
    if u.order > 0 and np.any(s == 0):
        raise DomainError("sqrt is not differentiable at 0")
    with np.errstate(divide="ignore"):
        return u.chain(s, 0.5 / s, -0.25 / (s * s * s))


def _jet_log(u: Jet) -> Jet:
    if np.any(u.value <= 0):
        raise DomainError("log of a non-positive number")
    r = 1.0 / u.value
    return u.chain(np.log(u.value), r, -r * r)


def _jet_powc(u: Jet, c: float) -> Jet:
    v = u.value
    if float(c).is_integer():
        n = int(c)
        if n < 0 and np.any(v == 0):
            raise DomainError("division by zero in pow")
        if n == 0:
            return u.chain(np.ones_like(v), np.zeros_like(v), np.zeros_like(v))
        if n == 1:
            return u
        g2 = n * (n - 1) * v ** (n - 2) if n != 2 else np.full_like(v, 2.0)
        return u.chain(v ** n, n * v ** (n - 1), g2)
    if np.any(v < 0) or (np.any(v == 0) and c < 2):
        raise DomainError("pow with non-integer exponent outside its domain")
    return u.chain(v ** c, c * v ** (c - 1), c * (c - 1) * v ** (c - 2))


_UNARY_JET = {"exp": _jet_exp, "sin": _jet_sin, "cos": _jet_cos,
              "sqrt": _jet_sqrt, "log": _jet_log}
_UNARY_NUM = {"exp": math.exp, "sin": math.sin, "cos": math.cos,
              "sqrt": math.sqrt, "log": math.log}


# ---------------------------------------------------------------------------
# expression trees


class ScalarField:
    """Immutable expression node.

    ``op`` is one of ``const, coord, r2, add, sub, mul, div, neg, pow, exp,
    sin, cos, sqrt, log``. Build fields with the module helpers (``coord``,
    ``const``, ``exp`` ...) and ordinary Python operators, or parse them from
    strings with :func:`parse_field`.
    """

    __slots__ = ("op", "args")

    def __init__(self, op: str, args: tuple = ()):
        self.op = op
        self.args = args

    # arithmetic ----------------------------------------------------------
    @staticmethod
    def _lift(x) -> "ScalarField":
        if isinstance(x, ScalarField):
            return x
        if isinstance(x, (int, float, np.floating, np.integer)):
            return ScalarField("const", (float(x),))
        raise TypeError(f"cannot use {type(x).__name__} in a field expression")

    def __add__(self, o):
        return ScalarField("add", (self, self._lift(o)))

    def __radd__(self, o):
        return ScalarField("add", (self._lift(o), self))

    def __sub__(self, o):
        return ScalarField("sub", (self, self._lift(o)))

    def __rsub__(self, o):
        return ScalarField("sub", (self._lift(o), self))

    def __mul__(self, o):
        return ScalarField("mul", (self, self._lift(o)))

    def __rmul__(self, o):
        return ScalarField("mul", (self._lift(o), self))

    def __truediv__(self, o):
        return ScalarField("div", (self, self._lift(o)))

    def __rtruediv__(self, o):
        return ScalarField("div", (self._lift(o), self))

    def __neg__(self):
        return ScalarField("neg", (self,))

    def __pow__(self, o):
        return ScalarField("pow", (self, self._lift(o)))

    # introspection -------------------------------------------------------
    def is_const(self) -> bool:
        return self.op == "const"

    def max_coord(self) -> int:
        """Largest coordinate index referenced (-1 if none)."""
        if self.op == "coord":
            return self.args[0]
        if self.op in ("const", "r2"):
            return -1
        return max(a.max_coord() for a in self.args)

    def uses_r2(self) -> bool:
        if self.op == "r2":
            return True
        if self.op in ("const", "coord"):
            return False
        return any(a.uses_r2() for a in self.args)

    def compose(self, subs: Sequence["ScalarField"]) -> "ScalarField":
        """Substitute ``subs[i]`` for coordinate ``x_{i+1}``; ``r2`` becomes ``sum(subs[i]**2)``."""
        subs = [self._lift(s) for s in subs]
        memo: dict[int, ScalarField] = {}

        def go(node: ScalarField) -> ScalarField:
            key = id(node)
            if key in memo:
                return memo[key]
            if node.op == "coord":
                out = subs[node.args[0]]
            elif node.op == "r2":
                out = subs[0] * subs[0]
                for s in subs[1:]:
                    out = out + s * s
            elif node.op == "const":
                out = node
            else:
                out = ScalarField(node.op, tuple(go(a) for a in node.args))
            memo[key] = out
            return out

        return go(self)

    def __call__(self, x) -> np.ndarray:
        return eval_jet2(self, x, order=0).value

    def __str__(self):
        return _to_str(self)

    def __repr__(self):
        return f"ScalarField({_to_str(self)!r})"


def const(c: float) -> ScalarField:
    return ScalarField("const", (float(c),))


def coord(i: int) -> ScalarField:
    """Coordinate ``x_{i+1}`` (0-based index)."""
    return ScalarField("coord", (int(i),))


def coords(dim: int) -> tuple[ScalarField, ...]:
    return tuple(coord(i) for i in range(dim))


R2 = ScalarField("r2")


def exp(u) -> ScalarField:
    return ScalarField("exp", (ScalarField._lift(u),))


def sin(u) -> ScalarField:
    return ScalarField("sin", (ScalarField._lift(u),))


def cos(u) -> ScalarField:
    return ScalarField("cos", (ScalarField._lift(u),))


def sqrt(u) -> ScalarField:
    return ScalarField("sqrt", (ScalarField._lift(u),))


def log(u) -> ScalarField:
    return ScalarField("log", (ScalarField._lift(u),))


_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _to_str(node: ScalarField, parent: int = 0) -> str:
    op = node.op
    if op == "const":
        s = repr(node.args[0])
        return f"({s})" if node.args[0] < 0 else s
    if op == "coord":
        return f"x{node.args[0] + 1}"
    if op == "r2":
        return "r2"
    if op in _UNARY_JET:
        return f"{op}({_to_str(node.args[0])})"
    prec = _PREC[op]
    if op == "neg":
        s = "-" + _to_str(node.args[0], prec)
    else:
        sym = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "**"}[op]
        # right operand of non-associative ops binds tighter
        right = prec + (1 if op in ("sub", "div", "pow") else 0)
        s = f"{_to_str(node.args[0], prec + (1 if op == 'pow' else 0))}{sym}{_to_str(node.args[1], right)}"
    return f"({s})" if prec < parent else s


def eval_jet2(field: ScalarField, x, order: int = 2) -> Jet:
    """Evaluate ``field`` and its first ``order`` derivatives at ``x``.

    ``x`` is a point of shape ``(D,)`` or a batch ``(..., D)``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    shape, dim = x.shape[:-1], x.shape[-1]
    if field.max_coord() >= dim:
        raise DomainError(f"field uses x{field.max_coord() + 1} but points are {dim}-dimensional")
    memo: dict[int, Jet] = {}
    coord_jets = [Jet.variable(x, i, order) for i in range(dim)]

    def go(node: ScalarField) -> Jet:
        key = id(node)
        if key in memo:
            return memo[key]
        op = node.op
        if op == "const":
            out = Jet.constant(node.args[0], shape, dim, order)
        elif op == "coord":
            out = coord_jets[node.args[0]]
        elif op == "r2":
            out = coord_jets[0] * coord_jets[0]
            for c in coord_jets[1:]:
                out = out + c * c
        elif op == "add":
            out = go(node.args[0]) + go(node.args[1])
        elif op == "sub":
            out = go(node.args[0]) - go(node.args[1])
        elif op == "mul":
            out = go(node.args[0]) * go(node.args[1])
        elif op == "div":
            out = go(node.args[0]) * go(node.args[1]).reciprocal()
        elif op == "neg":
            out = -go(node.args[0])
        elif op == "pow":
            base, expo = node.args
            if expo.is_const():
                out = _jet_powc(go(base), expo.args[0])
            else:
                out = _jet_exp(go(expo) * _jet_log(go(base)))
        elif op in _UNARY_JET:
            out = _UNARY_JET[op](go(node.args[0]))
        else:  # pragma: no cover - constructor guards the op set
            raise ValueError(f"unknown op {op}")
        memo[key] = out
        return out

    with np.errstate(invalid="raise", divide="raise", over="raise"):
        try:
            jet = go(field)
        except FloatingPointError as exc:
            raise DomainError(str(exc)) from exc
    if not np.all(np.isfinite(jet.value)):
        raise DomainError("non-finite field value")
    return jet


# ---------------------------------------------------------------------------
# parsing

_FUNCS = {"exp": exp, "sin": sin, "cos": cos, "sqrt": sqrt, "log": log}
_CONSTS = {"pi": math.pi}


def parse_field(text: str, dim: int = 3) -> ScalarField:
    """Parse an infix field expression.

    Identifiers: ``x1`` .. ``x{dim}``, ``r2`` (squared radius), ``pi``.
    Functions: ``exp sin cos sqrt pow``. ``**`` and ``^`` both denote powers.
    """
    # '^' binds like '**'; remember where each expansion shifts columns
    src = text.strip()
    lead = len(text) - len(text.lstrip())
    shifts = [i for i, ch in enumerate(src) if ch == "^"]
    src = src.replace("^", "**")

    def col_of(c: int) -> int:
        for k, pos in enumerate(shifts):
            if c <= pos + k:
                return c - k + lead
        return c - len(shifts) + lead

    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise FieldSyntaxError(exc.msg, text, exc.lineno or 1,
                               col_of(max((exc.offset or 1) - 1, 0))) from None

    def fail(node, msg):
        raise FieldSyntaxError(msg, text, getattr(node, "lineno", 1),
                               col_of(getattr(node, "col_offset", 0)))

    def go(node) -> ScalarField:
        if isinstance(node, ast.Expression):
            return go(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return const(node.value)
        if isinstance(node, ast.Name):
            name = node.id
            if name == "r2":
                return R2
            if name in _CONSTS:
                return const(_CONSTS[name])
            if name.startswith("x") and name[1:].isdigit():
                i = int(name[1:])
                if 1 <= i <= dim:
                    return coord(i - 1)
            fail(node, f"unknown identifier {name!r}")
        if isinstance(node, ast.UnaryOp):
            if isinstance(node.op, ast.USub):
                return -go(node.operand)
            if isinstance(node.op, ast.UAdd):
                return go(node.operand)
            fail(node, "unsupported unary operator")
        if isinstance(node, ast.BinOp):
            a, b = go(node.left), go(node.right)
            ops = {ast.Add: "add", ast.Sub: "sub", ast.Mult: "mul", ast.Div: "div",
                   ast.Pow: "pow"}
            op = ops.get(type(node.op))
            if op is None:
                fail(node, "unsupported binary operator")
            return ScalarField(op, (a, b))
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name):
                fail(node, "unsupported call")
            name = node.func.id
            if node.keywords:
                fail(node, "keyword arguments are not allowed")
            args = [go(a) for a in node.args]
            if name == "pow":
                if len(args) != 2:
                    fail(node, "pow takes two arguments")
                return args[0] ** args[1]
            if name in _FUNCS:
                if len(args) != 1:
                    fail(node, f"{name} takes one argument")
                return _FUNCS[name](args[0])
            fail(node, f"unknown function {name!r}")
        fail(node, f"unsupported syntax {type(node).__name__}")

    return go(tree)


# ---------------------------------------------------------------------------
# multi-indices and p-form fields


def increasing(dim: int, p: int) -> list[tuple[int, ...]]:
    return list(combinations(range(dim), p))


def sort_sign(idx: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign of the permutation sorting ``idx`` (0 if an index repeats)."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, tuple(sorted(idx))
    sign = 1
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign, tuple(sorted(idx))


@dataclass(frozen=True)
class PFormField:
    """A differential p-form on R^D with expression-tree coefficients.

    Only strictly increasing multi-indices are stored; missing ones are zero.
    """

    degree: int
    dim: int
    components: Mapping[tuple[int, ...], ScalarField] = dc_field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for idx, comp in self.components.items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != self.degree or any(i < 0 or i >= self.dim for i in idx):
                raise ValueError(f"bad multi-index {idx} for a {self.degree}-form on R^{self.dim}")
            sign, key = sort_sign(idx)
            if sign == 0:
                continue
            comp = ScalarField._lift(comp)
            term = comp if sign > 0 else -comp
            clean[key] = clean[key] + term if key in clean else term
        object.__setattr__(self, "components", clean)

    def component(self, idx: Sequence[int]) -> ScalarField:
        sign, key = sort_sign(idx)
        if sign == 0 or key not in self.components:
            return const(0.0)
        return self.components[key] if sign > 0 else -self.components[key]

    def compose(self, subs: Sequence[ScalarField]) -> "PFormField":
        """Substitute coordinates in every coefficient (no pullback of the basis forms)."""
        return PFormField(self.degree, self.dim,
                          {k: v.compose(subs) for k, v in self.components.items()})

    @classmethod
    def scalar(cls, f: ScalarField | float, dim: int) -> "PFormField":
        return cls(0, dim, {(): ScalarField._lift(f)})

    @classmethod
    def parse(cls, degree: int, dim: int, comps: Mapping[tuple[int, ...], str]) -> "PFormField":
        return cls(degree, dim, {k: parse_field(v, dim) for k, v in comps.items()})


def random_polynomial(rng: np.random.Generator, dim: int, degree: int, scale: float = 1.0) -> ScalarField:
    """Seeded random polynomial of total degree <= ``degree`` with normal coefficients."""
    xs = coords(dim)
    out: ScalarField = const(scale * rng.standard_normal())
    from itertools import combinations_with_replacement
    for k in range(1, degree + 1):
        for mono in combinations_with_replacement(range(dim), k):
            term: ScalarField = const(scale * rng.standard_normal())
            for i in mono:
                term = term * xs[i]
            out = out + term
    return out


def random_form(rng: np.random.Generator, p: int, dim: int, degree: int, scale: float = 1.0) -> PFormField:
    return PFormField(p, dim, {I: random_polynomial(rng, dim, degree, scale) for I in increasing(dim, p)})
