"""Outward-rounded interval arithmetic over arbitrary-precision binary floats.

Endpoints are :class:`gmpy2.mpfr` values.  Every lower endpoint is computed
with rounding toward -inf and every upper endpoint toward +inf, so each
operation returns an enclosure of the exact real result.  All values in one
computation share a single :class:`Precision`; it is carried by the values
themselves rather than held in any global state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import gmpy2
from gmpy2 import mpfr, mpq

__all__ = [
    "Precision",
    "Interval",
    "Box",
    "IntervalMatrix",
    "EmptyIntersection",
    "DimensionMismatch",
    "interval_add",
    "interval_sub",
    "interval_mul",
    "interval_neg",
    "width_box",
    "sym_expand",
    "truncate",
    "mat_vec_mul",
    "norm_int",
    "norm_inf",
    "norm_1",
    "distance",
    "midpoint_width_split",
    "matrix_midpoint_width_split",
    "exact_fraction",
    "to_upper_float",
]


MIN_BITS = 16
_MPFR = type(mpfr(0))
_MPQ = type(mpq(0))
DEFAULT_BITS = 128


class EmptyIntersection(ValueError):
    """Raised when truncation to ``[-K, K]^n`` would produce an empty set."""

    def __init__(self, message: str, component: int | None = None):
        super().__init__(message)
        self.component = component


class DimensionMismatch(ValueError):
    pass


def _as_mpq(x) -> "mpq":
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        return mpq(Fraction(x).numerator, Fraction(x).denominator)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return mpq(*x.as_integer_ratio())
    if isinstance(x, _MPFR):
        return mpq(*x.as_integer_ratio())
    if isinstance(x, _MPQ):
        return x
    return mpq(int(x))


def exact_fraction(x) -> Fraction:
    """Exact rational value of an endpoint (or any real accepted by ``Precision.interval``)."""
    q = _as_mpq(x)
    return Fraction(int(q.numerator), int(q.denominator))


def to_upper_float(x) -> float:
    """Smallest-or-equal double not below ``x`` (directed conversion upward)."""
    f = float(x)
    if math.isfinite(f) and exact_fraction(f) < exact_fraction(x):
        f = math.nextafter(f, math.inf)
    return f


@dataclass(frozen=True)
class Precision:
    """Significand precision of every endpoint in a computation."""

    bits: int = DEFAULT_BITS
    down: gmpy2.context = field(init=False, repr=False, compare=False)
    up: gmpy2.context = field(init=False, repr=False, compare=False)
    near: gmpy2.context = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.bits, int) or self.bits < MIN_BITS:
            raise ValueError(f"precision must be an integer >= {MIN_BITS} bits, got {self.bits!r}")
        object.__setattr__(self, "down", gmpy2.context(precision=self.bits, round=gmpy2.RoundDown))
        object.__setattr__(self, "up", gmpy2.context(precision=self.bits, round=gmpy2.RoundUp))
        object.__setattr__(self, "near", gmpy2.context(precision=self.bits))

    def lower(self, x) -> "mpfr":
        return mpfr(_as_mpq(x), 0, self.down)

    def upper(self, x) -> "mpfr":
        return mpfr(_as_mpq(x), 0, self.up)

    def interval(self, lo, hi=None) -> "Interval":
        """Outward-rounded enclosure of the exact real(s) ``lo`` (and ``hi``)."""
        if isinstance(lo, Interval):
            return Interval(self.lower(lo.lo), self.upper(lo.hi), self)
        if hi is None:
            hi = lo
        return Interval(self.lower(lo), self.upper(hi), self)

    def zero(self) -> "Interval":
        z = mpfr(0)
        return Interval._make(z, z, self)

    def box(self, values: Iterable) -> "Box":
        """Box of degenerate (point) components, each rounded outward."""
        return Box(tuple(v if isinstance(v, Interval) else self.interval(v) for v in values))

    def pi(self) -> "Interval":
        return Interval._make(self.down.const_pi(), self.up.const_pi(), self)


class Interval:
    """Closed interval ``[lo, hi]`` with ``lo <= hi``; degenerate intervals are allowed."""

    __slots__ = ("lo", "hi", "prec")

    def __init__(self, lo, hi, prec: Precision):
        if not isinstance(lo, _MPFR):
            lo = prec.lower(lo)
        if not isinstance(hi, _MPFR):
            hi = prec.upper(hi)
        if gmpy2.is_nan(lo) or gmpy2.is_nan(hi) or lo > hi:
            raise ValueError(f"invalid interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi
        self.prec = prec

    @classmethod
    def _make(cls, lo, hi, prec):
        obj = object.__new__(cls)
        obj.lo = lo
        obj.hi = hi
        obj.prec = prec
        return obj

    # -- queries -----------------------------------------------------------
    def width(self) -> "mpfr":
        return self.prec.up.sub(self.hi, self.lo)

    def mid(self) -> "mpfr":
        return self.prec.near.div(self.prec.near.add(self.lo, self.hi), 2)

    def mag(self) -> "mpfr":
        return max(abs(self.lo), abs(self.hi))

    def is_degenerate(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        """Exact membership test for a real or containment test for an interval."""
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        v = exact_fraction(x)
        return exact_fraction(self.lo) <= v <= exact_fraction(self.hi)

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"[{self.lo}, {self.hi}]"

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other) -> "Interval":
        if isinstance(other, Interval):
            if other.prec.bits != self.prec.bits:
                raise ValueError("mixing interval precisions")
            return other
        return self.prec.interval(other)

    def __add__(self, other):
        return interval_add(self, self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return interval_sub(self, self._coerce(other))

    def __rsub__(self, other):
        return interval_sub(self._coerce(other), self)

    def __mul__(self, other):
        return interval_mul(self, self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return interval_neg(self)

    def __abs__(self):
        return interval_abs(self)

    def hull(self, other: "Interval") -> "Interval":
        return Interval._make(min(self.lo, other.lo), max(self.hi, other.hi), self.prec)

    def intersect(self, other: "Interval") -> "Interval":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            raise EmptyIntersection(f"{self} and {other} are disjoint")
        return Interval._make(lo, hi, self.prec)

    def expand(self, r) -> "Interval":
        """``[lo - r, hi + r]`` for an upper-rounded nonnegative radius ``r``."""
        p = self.prec
        return Interval._make(p.down.sub(self.lo, r), p.up.add(self.hi, r), p)

    def clip(self, bound) -> "Interval":
        """Intersection with ``[-bound, bound]``; ``bound`` is an exact nonnegative endpoint."""
        lo, hi = self.lo, self.hi
        nb = -bound
        if lo >= nb and hi <= bound:
            return self
        lo, hi = max(lo, nb), min(hi, bound)
        if lo > hi:
            raise EmptyIntersection(f"{self} is disjoint from [-{bound}, {bound}]")
        return Interval._make(lo, hi, self.prec)


def interval_add(a: Interval, b: Interval) -> Interval:
    p = a.prec
    return Interval._make(p.down.add(a.lo, b.lo), p.up.add(a.hi, b.hi), p)


def interval_sub(a: Interval, b: Interval) -> Interval:
    p = a.prec
    return Interval._make(p.down.sub(a.lo, b.hi), p.up.sub(a.hi, b.lo), p)


def interval_neg(a: Interval) -> Interval:
    return Interval._make(-a.hi, -a.lo, a.prec)


def interval_mul(a: Interval, b: Interval) -> Interval:
    p = a.prec
    d, u = p.down, p.up
    al, ah, bl, bh = a.lo, a.hi, b.lo, b.hi
    if al >= 0 and bl >= 0:
        return Interval._make(d.mul(al, bl), u.mul(ah, bh), p)
    if ah <= 0 and bh <= 0:
        return Interval._make(d.mul(ah, bh), u.mul(al, bl), p)
    lo = min(d.mul(al, bl), d.mul(al, bh), d.mul(ah, bl), d.mul(ah, bh))
    hi = max(u.mul(al, bl), u.mul(al, bh), u.mul(ah, bl), u.mul(ah, bh))
    return Interval._make(lo, hi, p)


def interval_abs(a: Interval) -> Interval:
    if a.lo >= 0:
        return a
    if a.hi <= 0:
        return interval_neg(a)
    return Interval._make(mpfr(0), max(-a.lo, a.hi), a.prec)


# -- elementary functions -----------------------------------------------------


def interval_exp(a: Interval) -> Interval:
    p = a.prec
    return Interval._make(p.down.exp(a.lo), p.up.exp(a.hi), p)


def interval_atan(a: Interval) -> Interval:
    p = a.prec
    return Interval._make(p.down.atan(a.lo), p.up.atan(a.hi), p)


def interval_tanh(a: Interval) -> Interval:
    p = a.prec
    return Interval._make(p.down.tanh(a.lo), p.up.tanh(a.hi), p)


def _quarter_turns(a: Interval) -> list[int] | None:
    """Integers ``m`` for which ``m*pi/2`` may lie in ``a``; None if ``a`` spans a full period."""
    p = a.prec
    hp_lo = p.down.div(p.down.const_pi(), 2)
    hp_hi = p.up.div(p.up.const_pi(), 2)
    m_min = int(gmpy2.floor(p.near.div(a.lo, hp_lo))) - 1
    m_max = int(gmpy2.ceil(p.near.div(a.hi, hp_lo))) + 1
    if m_max - m_min > 8:
        return None
    hits = []
    for m in range(m_min, m_max + 1):
        if m >= 0:
            c_lo, c_hi = p.down.mul(m, hp_lo), p.up.mul(m, hp_hi)
        else:
            c_lo, c_hi = p.down.mul(m, hp_hi), p.up.mul(m, hp_lo)
        if c_lo <= a.hi and a.lo <= c_hi:
            hits.append(m)
    return hits


def _trig(a: Interval, fn: str, max_phase: int) -> Interval:
    p = a.prec
    turns = _quarter_turns(a)
    one = mpfr(1)
    if turns is None:
        return Interval._make(-one, one, p)
    f_down, f_up = getattr(p.down, fn), getattr(p.up, fn)
    lo = min(f_down(a.lo), f_down(a.hi))
    hi = max(f_up(a.lo), f_up(a.hi))
    for m in turns:
        phase = m % 4
        if phase == max_phase:
            hi = one
        elif phase == (max_phase + 2) % 4:
            lo = -one
    return Interval._make(max(lo, -one), min(hi, one), p)


def interval_cos(a: Interval) -> Interval:
    return _trig(a, "cos", 0)


def interval_sin(a: Interval) -> Interval:
    return _trig(a, "sin", 1)


# -- boxes and matrices -------------------------------------------------------


class Box:
    """Interval vector; an axis-aligned hyper-rectangle in R^n."""

    __slots__ = ("comps",)

    def __init__(self, comps: Sequence[Interval]):
        comps = tuple(comps)
        if not comps:
            raise ValueError("a box needs at least one component")
        self.comps = comps

    @property
    def prec(self) -> Precision:
        return self.comps[0].prec

    def __len__(self):
        return len(self.comps)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.comps)

    def __getitem__(self, i) -> Interval:
        return self.comps[i]

    def __eq__(self, other):
        if not isinstance(other, Box):
            return NotImplemented
        return self.comps == other.comps

    def __hash__(self):
        return hash(self.comps)

    def __repr__(self):
        return "(" + ", ".join(map(repr, self.comps)) + ")"

    def contains(self, other) -> bool:
        """Containment of a box, or exact membership of a point vector."""
        if isinstance(other, Box):
            _check_dims(self, other)
            return all(a.contains(b) for a, b in zip(self.comps, other.comps))
        pts = list(other)
        if len(pts) != len(self):
            raise DimensionMismatch(f"point of dimension {len(pts)} vs box of dimension {len(self)}")
        return all(a.contains(x) for a, x in zip(self.comps, pts))

    def __add__(self, other: "Box") -> "Box":
        _check_dims(self, other)
        return Box(tuple(interval_add(a, b) for a, b in zip(self.comps, other.comps)))

    def scale(self, s: Interval) -> "Box":
        return Box(tuple(interval_mul(c, s) for c in self.comps))


class IntervalMatrix:
    """Rectangular ``m x n`` grid of intervals."""

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence[Interval]]):
        rows = tuple(tuple(r) for r in rows)
        if not rows or not rows[0]:
            raise ValueError("an interval matrix needs m, n >= 1")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("interval matrix rows differ in length")
        self.rows = rows

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.rows[0])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        if not isinstance(other, IntervalMatrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return "[" + "; ".join(", ".join(map(repr, r)) for r in self.rows) + "]"

    def entries(self) -> Iterator[Interval]:
        for r in self.rows:
            yield from r

    def width(self) -> "mpfr":
        return max(e.width() for e in self.entries())

    def clip(self, bound) -> "IntervalMatrix":
        return IntervalMatrix(tuple(tuple(e.clip(bound) for e in r) for r in self.rows))


def _check_dims(a: Box, b: Box) -> None:
    if len(a) != len(b):
        raise DimensionMismatch(f"dimension {len(a)} vs {len(b)}")


def width_box(v: Box) -> "mpfr":
    """Largest component width, rounded up."""
    return max(c.width() for c in v.comps)


def sym_expand(v: Box, r) -> Box:
    """Minkowski sum of ``v`` with ``[-r, r]^n``; ``r`` is rounded up once."""
    if isinstance(r, Interval):
        r = r.hi
    elif not isinstance(r, _MPFR):
        r = v.prec.upper(r)
    if r < 0:
        raise ValueError(f"expansion radius must be nonnegative, got {r}")
    return Box(tuple(c.expand(r) for c in v.comps))


def truncate(v: Box, K) -> Box:
    """Componentwise intersection with ``[-K, K]``.

    Raises :class:`EmptyIntersection` when some component lies entirely outside.
    """
    if not isinstance(K, _MPFR):
        K = v.prec.lower(K)
    out = []
    for i, c in enumerate(v.comps):
        try:
            out.append(c.clip(K))
        except EmptyIntersection as exc:
            raise EmptyIntersection(str(exc), component=i) from None
    return Box(tuple(out))


def mat_vec_mul(A: IntervalMatrix, v: Box) -> Box:
    m, n = A.shape
    if n != len(v):
        raise DimensionMismatch(f"{m}x{n} matrix times vector of dimension {len(v)}")
    out = []
    for row in A.rows:
        acc = interval_mul(row[0], v[0])
        for a, x in zip(row[1:], v.comps[1:]):
            acc = interval_add(acc, interval_mul(a, x))
        out.append(acc)
    return Box(tuple(out))


def norm_int(a: Interval) -> "mpfr":
    return a.mag()


def norm_inf(A: IntervalMatrix) -> "mpfr":
    """Maximum row sum of entry magnitudes (rounded up)."""
    up = A.rows[0][0].prec.up
    return max(up.fsum([e.mag() for e in row]) for row in A.rows)


def norm_1(A: IntervalMatrix) -> "mpfr":
    """Maximum column sum of entry magnitudes (rounded up)."""
    up = A.rows[0][0].prec.up
    m, n = A.shape
    return max(up.fsum([A.rows[i][j].mag() for i in range(m)]) for j in range(n))


def distance(a: Box, b: Box) -> "mpfr":
    """Hausdorff distance: the largest endpoint displacement over all components."""
    _check_dims(a, b)
    up = a.prec.up
    return max(
        max(up.sub(x.lo, y.lo), up.sub(y.lo, x.lo), up.sub(x.hi, y.hi), up.sub(y.hi, x.hi))
        for x, y in zip(a.comps, b.comps)
    )


def _split(c: Interval) -> tuple["mpfr", Interval]:
    m = c.mid()
    up = c.prec.up
    r = max(up.sub(c.hi, m), up.sub(m, c.lo))
    return m, Interval._make(-r, r, c.prec)


def midpoint_width_split(v: Box) -> tuple[tuple["mpfr", ...], Box]:
    """``(m(v), W)`` with ``W`` symmetric about zero and ``m(v) + W`` containing ``v``."""
    parts = [_split(c) for c in v.comps]
    return tuple(m for m, _ in parts), Box(tuple(w for _, w in parts))


def matrix_midpoint_width_split(A: IntervalMatrix):
    parts = [[_split(e) for e in row] for row in A.rows]
    mids = tuple(tuple(m for m, _ in row) for row in parts)
    return mids, IntervalMatrix(tuple(tuple(w for _, w in row) for row in parts))
