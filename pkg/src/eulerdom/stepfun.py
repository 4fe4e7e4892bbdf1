"""Partitions of ``[0, a]`` and left-continuous step enclosures.

Partition points are exact rationals so that knot equality, joins and the
refinement order are decided exactly.  A :class:`StepEnclosure` is a
piecewise-constant box-valued function: value ``c_0`` at ``t = 0`` and value
``c_i`` on ``(q_{i-1}, q_i]``.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from gmpy2 import mpfr

from .interval import Box, Precision, exact_fraction

__all__ = [
    "Partition",
    "StepEnclosure",
    "partition_join",
    "partition_stats",
    "refines",
    "stepfun_eval",
    "separation_check",
    "basis_waybelow",
    "parse_rational",
    "format_rational",
]


def parse_rational(x) -> Fraction:
    """Exact rational from an int, Fraction, ``"p/q"`` / decimal string, or float."""
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    return exact_fraction(x)


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Partition:
    """Strictly increasing ``(q_0, ..., q_k)`` with ``q_0 = 0`` and ``q_k = a``."""

    points: tuple[Fraction, ...]

    def __post_init__(self):
        pts = tuple(parse_rational(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValueError("a partition needs at least two points")
        if pts[0] != 0:
            raise ValueError("a partition must start at 0")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("partition points must be strictly increasing")

    @classmethod
    def uniform(cls, a, depth: int) -> "Partition":
        """Equidistant partition of ``[0, a]`` into ``2**depth`` pieces."""
        if depth < 0:
            raise ValueError("depth must be nonnegative")
        a = parse_rational(a)
        k = 1 << depth
        return cls(tuple(a * i / k for i in range(k + 1)))

    @property
    def a(self) -> Fraction:
        return self.points[-1]

    @property
    def k(self) -> int:
        return len(self.points) - 1

    def gaps(self) -> list[Fraction]:
        p = self.points
        return [p[i + 1] - p[i] for i in range(self.k)]

    @property
    def norm(self) -> Fraction:
        return max(self.gaps())

    @property
    def min_gap(self) -> Fraction:
        return min(self.gaps())

    @property
    def ratio(self) -> Fraction:
        return self.norm / self.min_gap

    def segment_index(self, t: Fraction) -> int:
        """Index ``i >= 1`` with ``t`` in ``(q_{i-1}, q_i]``, or 0 for ``t = 0``."""
        if t < 0 or t > self.a:
            raise ValueError(f"t = {t} outside [0, {self.a}]")
        return bisect.bisect_left(self.points, t)

    def __len__(self):
        return len(self.points)


def _check_same_a(P: Partition, Q: Partition) -> None:
    if P.a != Q.a:
        raise ValueError(f"partitions of different intervals [0,{P.a}] and [0,{Q.a}]")


def partition_join(P: Partition, Q: Partition) -> Partition:
    """Coarsest common refinement: the union of the point sets."""
    _check_same_a(P, Q)
    return Partition(tuple(sorted(set(P.points) | set(Q.points))))


def partition_stats(Q: Partition) -> tuple[Fraction, Fraction, Fraction]:
    """``(|Q|, m(Q), r_Q)``: largest gap, smallest gap and their ratio, all exact."""
    return Q.norm, Q.min_gap, Q.ratio


def refines(P: Partition, Q: Partition) -> bool:
    """True when every point of ``P`` is a point of ``Q`` (``Q`` is finer)."""
    _check_same_a(P, Q)
    return set(P.points) <= set(Q.points)


@dataclass(frozen=True)
class StepEnclosure:
    """Piecewise-constant box-valued function over a partition, bounded by ``[-K, K]^n``."""

    partition: Partition
    values: tuple[Box, ...]
    K: Fraction

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "K", parse_rational(self.K))
        if self.K <= 0:
            raise ValueError("K must be positive")
        if len(self.values) != self.partition.k + 1:
            raise ValueError(f"expected {self.partition.k + 1} values, got {len(self.values)}")
        n = len(self.values[0])
        K = self.K
        for v in self.values:
            if len(v) != n:
                raise ValueError("step values differ in dimension")
            for c in v:
                if exact_fraction(c.lo) < -K or exact_fraction(c.hi) > K:
                    raise ValueError(f"value {v} not contained in [-{K}, {K}]^{n}")

    @property
    def n(self) -> int:
        return len(self.values[0])

    @classmethod
    def constant(cls, partition: Partition, value: Box, K) -> "StepEnclosure":
        return cls(partition, (value,) * (partition.k + 1), K)

    def on(self, P: Partition) -> tuple[Box, ...]:
        """Values of this function re-indexed over a refinement ``P`` of its partition."""
        own = self.partition
        out = [self.values[0]]
        for t in P.points[1:]:
            out.append(self.values[own.segment_index(t)])
        return tuple(out)

    def to_json(self) -> dict:
        from .records import box_to_json

        return {
            "partition": [format_rational(q) for q in self.partition.points],
            "values": [box_to_json(v) for v in self.values],
            "K": format_rational(self.K),
        }

    @classmethod
    def from_json(cls, data: dict, prec: Precision) -> "StepEnclosure":
        from .records import box_from_json

        return cls(
            Partition(tuple(parse_rational(q) for q in data["partition"])),
            tuple(box_from_json(v, prec) for v in data["values"]),
            parse_rational(data["K"]),
        )


def stepfun_eval(s: StepEnclosure, t) -> Box:
    """Left-continuous evaluation: ``c_0`` at 0, ``c_i`` on ``(q_{i-1}, q_i]``."""
    return s.values[s.partition.segment_index(parse_rational(t))]


def separation_check(f: StepEnclosure, g: StepEnclosure):
    """Decide whether ``f`` is separated below ``g`` by a uniform positive margin.

    For every segment of the joined partition and every component, the lower
    bound of ``f`` must equal ``-K`` or sit at least ``delta`` below that of
    ``g``, and the upper bound of ``f`` must equal ``K`` or sit at least
    ``delta`` above that of ``g``.

    Returns ``(True, delta)`` with the largest working-precision dyadic not
    exceeding the true margin, or ``(False, None)``.  When every bound is
    exempt (``f`` touches ``+-K`` everywhere) the margin is unconstrained and
    ``delta = K`` is reported.
    """
    if f.K != g.K:
        raise ValueError("step enclosures with different state bounds")
    if f.n != g.n:
        raise ValueError("step enclosures of different dimension")
    P = partition_join(f.partition, g.partition)
    fv, gv = f.on(P), g.on(P)
    prec = f.values[0].prec
    K = f.K
    # bounds equal to +-K are exempt; compare exactly on rationals
    margin: Fraction | None = None
    for bf, bg in zip(fv, gv):
        for cf, cg in zip(bf, bg):
            flo, fhi = exact_fraction(cf.lo), exact_fraction(cf.hi)
            glo, ghi = exact_fraction(cg.lo), exact_fraction(cg.hi)
            if flo != -K:
                d = glo - flo
                margin = d if margin is None else min(margin, d)
            if fhi != K:
                d = fhi - ghi
                margin = d if margin is None else min(margin, d)
            if margin is not None and margin <= 0:
                return False, None
    if margin is None:
        return True, K
    delta = prec.lower(min(margin, K))
    return True, exact_fraction(delta)


def basis_waybelow(f: StepEnclosure, g: StepEnclosure) -> bool:
    """Way-below relation between basis elements; the truth value of :func:`separation_check`."""
    return separation_check(f, g)[0]


def expansion_certificate(f: StepEnclosure, g: StepEnclosure, delta, times: Iterable = ()) -> bool:
    """Check that ``f(t)`` contains ``T_K(g(t) (+) delta)`` at every knot of the join and at ``times``."""
    from .interval import sym_expand, truncate

    K = f.K
    P = partition_join(f.partition, g.partition)
    ts: list[Fraction] = list(P.points)
    # segment midpoints cover the open pieces
    ts += [(a + b) / 2 for a, b in zip(P.points, P.points[1:])]
    ts += [parse_rational(t) for t in times]
    prec = f.values[0].prec
    d = prec.upper(delta)
    Kf = prec.lower(K)
    for t in ts:
        inner = truncate(sym_expand(stepfun_eval(g, t), d), Kf)
        if not stepfun_eval(f, t).contains(inner):
            return False
    return True
