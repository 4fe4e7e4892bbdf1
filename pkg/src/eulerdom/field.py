"""Vector fields as expression trees, with interval and derivative extensions.

A field component is a small AST over ``const``, ``var``, ``add``, ``sub``,
``mul``, ``neg``, ``sin``, ``cos``, ``exp`` and ``abs``.  From it we derive

* ``u``: the natural interval extension (box -> box), and
* ``u'``: an interval enclosure of the hyper-rectangular L-derivative
  (box -> n x n interval matrix) by forward-mode differentiation.  ``abs``
  contributes the multiplier ``[-1, 1]`` wherever its argument may vanish,
  which is the box hull of the Clarke gradient at the kink.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

from .interval import (
    Box,
    Interval,
    IntervalMatrix,
    Precision,
    interval_abs,
    interval_add,
    interval_cos,
    interval_exp,
    interval_mul,
    interval_neg,
    interval_sin,
    interval_sub,
    norm_inf,
    width_box,
)
from .stepfun import format_rational, parse_rational

__all__ = [
    "Const",
    "Var",
    "Add",
    "Sub",
    "Mul",
    "Neg",
    "Sin",
    "Cos",
    "Exp",
    "Abs",
    "FieldExpr",
    "FieldParseError",
    "ProblemSpec",
    "FieldExtension",
    "parse_field",
    "eval_extension",
    "eval_lderiv",
    "check_lipschitz_condition",
    "LipschitzReport",
    "derivative_bound",
]


# -- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Fraction

    def __str__(self):
        return f"(const {format_rational(self.value)})"


@dataclass(frozen=True)
class Var:
    index: int

    def __str__(self):
        return f"(var {self.index})"


@dataclass(frozen=True)
class _Binary:
    left: "FieldExpr"
    right: "FieldExpr"
    op = ""

    def __str__(self):
        return f"({self.op} {self.left} {self.right})"


@dataclass(frozen=True)
class _Unary:
    arg: "FieldExpr"
    op = ""

    def __str__(self):
        return f"({self.op} {self.arg})"


class Add(_Binary):
    op = "add"


class Sub(_Binary):
    op = "sub"


class Mul(_Binary):
    op = "mul"


class Neg(_Unary):
    op = "neg"


class Sin(_Unary):
    op = "sin"


class Cos(_Unary):
    op = "cos"


class Exp(_Unary):
    op = "exp"


class Abs(_Unary):
    op = "abs"


FieldExpr = Union[Const, Var, Add, Sub, Mul, Neg, Sin, Cos, Exp, Abs]

_BINARY = {"add": Add, "sub": Sub, "mul": Mul}
_UNARY = {"neg": Neg, "sin": Sin, "cos": Cos, "exp": Exp, "abs": Abs}


def max_var_index(e: FieldExpr) -> int:
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Const):
        return -1
    if isinstance(e, _Binary):
        return max(max_var_index(e.left), max_var_index(e.right))
    return max_var_index(e.arg)


# -- parser -------------------------------------------------------------------


class FieldParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")
_RATIONAL = re.compile(r"-?\d+(?:/[1-9]\d*)?\Z")
_INDEX = re.compile(r"\d+\Z")


def _tokenize(text: str) -> list[tuple[str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise FieldParseError("unexpected character", pos)
        if m.end() == pos:
            break
        start = m.start(m.lastindex) if m.lastindex else pos
        toks.append((m.group(m.lastindex), start))
        pos = m.end()
    return toks


def parse_field(text: str, n: Optional[int] = None) -> FieldExpr:
    """Parse one field component from its s-expression form.

    >>> str(parse_field("(mul (const 10) (cos (var 0)))"))
    '(mul (const 10) (cos (var 0)))'
    """
    toks = _tokenize(text)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else ("", len(text))

    def expect(tok):
        nonlocal pos
        t, at = peek()
        if t != tok:
            raise FieldParseError(f"expected {tok!r}, found {t or 'end of input'!r}", at)
        pos += 1

    def expr() -> FieldExpr:
        nonlocal pos
        expect("(")
        head, at = peek()
        pos += 1
        if head == "const":
            val, vat = peek()
            if not _RATIONAL.match(val):
                raise FieldParseError(f"malformed rational {val!r}", vat)
            pos += 1
            node: FieldExpr = Const(Fraction(val))
        elif head == "var":
            val, vat = peek()
            if not _INDEX.match(val):
                raise FieldParseError(f"malformed variable index {val!r}", vat)
            pos += 1
            idx = int(val)
            if n is not None and idx >= n:
                raise FieldParseError(f"variable index {idx} out of range for dimension {n}", vat)
            node = Var(idx)
        elif head in _BINARY:
            left = expr()
            right = expr()
            node = _BINARY[head](left, right)
        elif head in _UNARY:
            node = _UNARY[head](expr())
        else:
            raise FieldParseError(f"unknown operator {head!r}", at)
        expect(")")
        return node

    if not toks:
        raise FieldParseError("empty expression", 0)
    node = expr()
    if pos != len(toks):
        raise FieldParseError("trailing input", toks[pos][1])
    return node


# -- compiled evaluators ------------------------------------------------------

ValueFn = Callable[[Sequence[Interval]], Interval]
Grad = list  # list[Optional[Interval]]; None is a structural zero
JetFn = Callable[[Sequence[Interval]], tuple]


def _one(prec: Precision) -> Interval:
    return prec.interval(1)


@lru_cache(maxsize=None)
def compile_value(e: FieldExpr, prec: Precision) -> ValueFn:
    """Closure evaluating the natural interval extension of ``e``."""
    if isinstance(e, Const):
        c = prec.interval(e.value)
        return lambda x: c
    if isinstance(e, Var):
        i = e.index
        return lambda x: x[i]
    if isinstance(e, _Binary):
        f, g = compile_value(e.left, prec), compile_value(e.right, prec)
        op = {Add: interval_add, Sub: interval_sub, Mul: interval_mul}[type(e)]
        return lambda x: op(f(x), g(x))
    f = compile_value(e.arg, prec)
    op = {Neg: interval_neg, Sin: interval_sin, Cos: interval_cos, Exp: interval_exp, Abs: interval_abs}[type(e)]
    return lambda x: op(f(x))


def _g_add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return interval_add(a, b)


def _g_scale(s: Interval, g: Grad) -> Grad:
    return [None if d is None else interval_mul(s, d) for d in g]


def abs_multiplier(g: Interval) -> Interval:
    """Derivative multiplier of ``|.|`` over ``g``: +1, -1, or the Clarke hull ``[-1, 1]``."""
    p = g.prec
    if g.lo > 0:
        return p.interval(1)
    if g.hi < 0:
        return p.interval(-1)
    return p.interval(-1, 1)


@lru_cache(maxsize=None)
def compile_jet(e: FieldExpr, n: int, prec: Precision) -> JetFn:
    """Closure returning ``(value, gradient)`` of ``e`` over a box, forward mode."""
    zero: Grad = [None] * n
    if isinstance(e, Const):
        c = prec.interval(e.value)
        return lambda x: (c, zero)
    if isinstance(e, Var):
        i = e.index
        unit = list(zero)
        unit[i] = _one(prec)
        return lambda x: (x[i], unit)
    if isinstance(e, (Add, Sub)):
        f, g = compile_jet(e.left, n, prec), compile_jet(e.right, n, prec)
        if isinstance(e, Add):

            def jet(x):
                (a, da), (b, db) = f(x), g(x)
                return interval_add(a, b), [_g_add(p, q) for p, q in zip(da, db)]

        else:

            def jet(x):
                (a, da), (b, db) = f(x), g(x)
                return interval_sub(a, b), [
                    _g_add(p, None if q is None else interval_neg(q)) for p, q in zip(da, db)
                ]

        return jet
    if isinstance(e, Mul):
        f, g = compile_jet(e.left, n, prec), compile_jet(e.right, n, prec)

        def jet(x):
            (a, da), (b, db) = f(x), g(x)
            grad = [
                _g_add(None if p is None else interval_mul(b, p), None if q is None else interval_mul(a, q))
                for p, q in zip(da, db)
            ]
            return interval_mul(a, b), grad

        return jet
    f = compile_jet(e.arg, n, prec)
    if isinstance(e, Neg):

        def jet(x):
            a, da = f(x)
            return interval_neg(a), [None if d is None else interval_neg(d) for d in da]

    elif isinstance(e, Sin):

        def jet(x):
            a, da = f(x)
            return interval_sin(a), _g_scale(interval_cos(a), da)

    elif isinstance(e, Cos):

        def jet(x):
            a, da = f(x)
            return interval_cos(a), _g_scale(interval_neg(interval_sin(a)), da)

    elif isinstance(e, Exp):

        def jet(x):
            a, da = f(x)
            v = interval_exp(a)
            return v, _g_scale(v, da)

    else:

        def jet(x):
            a, da = f(x)
            return interval_abs(a), _g_scale(abs_multiplier(a), da)

    return jet


def eval_extension(e: FieldExpr, box: Box) -> Interval:
    """Natural interval extension of ``e`` over ``box``."""
    return compile_value(e, box.prec)(box.comps)


# -- problem specification ----------------------------------------------------


def default_state_bound(y0: Sequence[Fraction], M: Fraction, a: Fraction) -> Fraction:
    """Smallest power of two (at least 1) covering ``|y0| + M a`` with a 10% margin."""
    need = (max(abs(y) for y in y0) + M * a) * Fraction(11, 10)
    K = Fraction(1)
    while K < need:
        K *= 2
    return K


@dataclass(frozen=True)
class ProblemSpec:
    """Autonomous IVP ``y' = f(y)``, ``y(0) = y0`` on ``[0, a]`` with its bounds.

    ``M`` bounds the field, ``M1`` its derivative (entrywise), ``M2`` the
    Lipschitz constant of the derivative (needed by the Runge-Kutta operator).
    Non-autonomous problems are supplied in augmented form with component 0
    standing for time.
    """

    n: int
    fields: tuple
    y0: tuple
    a: Fraction
    M: Fraction
    M1: Fraction
    K: Optional[Fraction] = None
    M2: Optional[Fraction] = None
    name: str = ""

    def __post_init__(self):
        fields = tuple(parse_field(f, self.n) if isinstance(f, str) else f for f in self.fields)
        object.__setattr__(self, "fields", fields)
        object.__setattr__(self, "y0", tuple(parse_rational(v) for v in self.y0))
        for key in ("a", "M", "M1"):
            object.__setattr__(self, key, parse_rational(getattr(self, key)))
        if self.M2 is not None:
            object.__setattr__(self, "M2", parse_rational(self.M2))
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if len(fields) != self.n or len(self.y0) != self.n:
            raise ValueError(f"expected {self.n} field components and initial values")
        for f in fields:
            if max_var_index(f) >= self.n:
                raise ValueError(f"field component {f} refers to a variable beyond dimension {self.n}")
        if self.a <= 0:
            raise ValueError("horizon a must be positive")
        if self.M < 0 or self.M1 < 0 or (self.M2 is not None and self.M2 < 0):
            raise ValueError("bounds M, M1, M2 must be nonnegative")
        if self.K is None:
            object.__setattr__(self, "K", default_state_bound(self.y0, self.M, self.a))
        else:
            object.__setattr__(self, "K", parse_rational(self.K))
        if self.K <= 0:
            raise ValueError("state bound K must be positive")
        reach = self.M * self.a
        for y in self.y0:
            if y - reach < -self.K or y + reach > self.K:
                raise ValueError(
                    f"[y0 - M a, y0 + M a] = [{y - reach}, {y + reach}] is not inside [-{self.K}, {self.K}]"
                )

    @property
    def alpha(self) -> Fraction:
        """Runge-Kutta remainder coefficient ``(M2 M + M1^2) M / 6``."""
        if self.M2 is None:
            raise ValueError("M2 is required for the Runge-Kutta operator")
        return (self.M2 * self.M + self.M1**2) * self.M / 6

    @property
    def L(self) -> Fraction:
        return self.n * self.M1

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "ProblemSpec":
        known = {"n", "fields", "y0", "a", "K", "M", "M1", "M2", "name"}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown problem keys: {sorted(extra)}")
        missing = {"n", "fields", "y0", "a", "M", "M1"} - set(data)
        if missing:
            raise ValueError(f"missing problem keys: {sorted(missing)}")
        return cls(
            n=int(data["n"]),
            fields=tuple(data["fields"]),
            y0=tuple(data["y0"]),
            a=data["a"],
            M=data["M"],
            M1=data["M1"],
            K=data.get("K"),
            M2=data.get("M2"),
            name=data.get("name", name),
        )

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "n": self.n,
            "fields": [str(f) for f in self.fields],
            "y0": [format_rational(v) for v in self.y0],
            "a": format_rational(self.a),
            "K": format_rational(self.K),
            "M": format_rational(self.M),
            "M1": format_rational(self.M1),
        }
        if self.M2 is not None:
            out["M2"] = format_rational(self.M2)
        return out

    def with_bounds(self, **kw) -> "ProblemSpec":
        data = {k: getattr(self, k) for k in ("n", "fields", "y0", "a", "M", "M1", "K", "M2", "name")}
        data.update(kw)
        return ProblemSpec(**data)


# -- extensions ---------------------------------------------------------------


@dataclass(frozen=True)
class FieldExtension:
    """Pair ``(u, u')`` of interval extensions of a field and its L-derivative.

    Extensions built by :meth:`from_spec` are consistent by construction
    (``derived=True``).  Hand-supplied pairs are accepted unchecked and carry
    ``derived=False`` so reports can flag them.
    """

    n: int
    u: Callable[[Box], Box]
    du: Callable[[Box], IntervalMatrix]
    prec: Precision
    jet: Optional[Callable[[Box], tuple]] = None
    derived: bool = False
    source: Optional[ProblemSpec] = field(default=None, compare=False)

    def u_and_du(self, box: Box) -> tuple[Box, IntervalMatrix]:
        if self.jet is not None:
            return self.jet(box)
        return self.u(box), self.du(box)

    @classmethod
    def from_spec(cls, spec: ProblemSpec, prec: Precision, clip_derivative: bool = True) -> "FieldExtension":
        n = spec.n
        values = [compile_value(f, prec) for f in spec.fields]
        jets = [compile_jet(f, n, prec) for f in spec.fields]
        zero = prec.zero()
        bound = prec.upper(spec.M1) if clip_derivative else None

        def u(box: Box) -> Box:
            x = box.comps
            return Box(tuple(v(x) for v in values))

        def jet(box: Box):
            x = box.comps
            vals, rows = [], []
            for j in jets:
                v, g = j(x)
                vals.append(v)
                row = tuple(zero if d is None else d for d in g)
                if bound is not None:
                    row = tuple(d.clip(bound) for d in row)
                rows.append(row)
            return Box(tuple(vals)), IntervalMatrix(tuple(rows))

        def du(box: Box) -> IntervalMatrix:
            return jet(box)[1]

        return cls(n=n, u=u, du=du, prec=prec, jet=jet, derived=True, source=spec)


def eval_lderiv(spec: ProblemSpec, box: Box) -> IntervalMatrix:
    """Interval L-derivative of the field over ``box``, entries clipped to ``[-M1, M1]``."""
    return FieldExtension.from_spec(spec, box.prec).du(box)


@dataclass
class LipschitzCheck:
    box: Box
    lhs: object
    rhs: object
    ok: bool


@dataclass
class LipschitzReport:
    """Outcome of checking ``w(u(x)) <= ||u'(x)||_inf w(x)`` over sample boxes."""

    checks: list
    derived: bool

    @property
    def violations(self) -> list:
        return [c for c in self.checks if not c.ok]

    @property
    def ok(self) -> bool:
        return not self.violations


def _ulp(x, bits: int):
    import gmpy2

    if x == 0:
        return gmpy2.mpfr(0)
    return gmpy2.mul_2exp(gmpy2.mpfr(1), gmpy2.frexp(x)[0] - bits)


def check_lipschitz_condition(ext: FieldExtension, boxes: Sequence[Box], slack_ulps: int = 4) -> LipschitzReport:
    """Evaluate both sides of the width/derivative compatibility condition per box.

    A box passes when the field width exceeds the derivative-scaled box width
    by no more than ``slack_ulps`` units in the last place of the larger of
    ``|u(x)|`` and the right-hand side.
    """
    checks = []
    for box in boxes:
        p = box.prec
        ux = ext.u(box)
        lhs = width_box(ux)
        rhs = p.up.mul(norm_inf(ext.du(box)), width_box(box))
        scale = max(max(c.mag() for c in ux), rhs)
        allowed = p.up.add(rhs, p.up.mul(slack_ulps, _ulp(scale, p.bits)))
        checks.append(LipschitzCheck(box, lhs, rhs, lhs <= allowed))
    return LipschitzReport(checks, ext.derived)


def derivative_bound(spec: ProblemSpec, boxes: Sequence[Box]) -> "mpfr":
    """Largest row sum of the unclipped derivative enclosure over ``boxes``.

    A value above ``M1`` means the clip in :meth:`FieldExtension.from_spec`
    was active somewhere, so the supplied ``M1`` is too small for the run.
    """
    if not boxes:
        raise ValueError("no boxes to bound over")
    ext = FieldExtension.from_spec(spec, boxes[0].prec, clip_derivative=False)
    return max(norm_inf(ext.du(b)) for b in boxes)
