"""Enclosure operators for ``y' = f(y)``: first-order, second-order and Runge-Kutta Euler.

Each operator maps knot values ``phi(q_j)`` to a piecewise-polynomial
enclosure; on ``(q_j, q_{j+1}]`` it is

    T_K( phi(q_j) + c1 s + c2 s^2 / 2 + c3 s^3 ),   s = x - q_j,

with per-method coefficients:

* ``e1``: ``c1 = u(A_j)``;
* ``e2``: ``c1 = u(phi(q_j))``, ``c2 = (u' . u)(A_j)``;
* ``rk``: ``c1 = u(phi(q_j))``, ``c2 = (u' . u)(phi(q_j))``, ``c3 = [-alpha, alpha]``;

where ``A_j = T_K(phi(q_j) (+) M (q_{j+1} - q_j))`` is the a-priori reachable
box over one step.  The fixpoint of the operator started from the bottom
enclosure stabilises after ``k + 1`` applications, and it coincides with a
single forward sweep, which is how :func:`solve_euler2` and friends compute it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence

from gmpy2 import mpfr

from .field import FieldExtension, ProblemSpec
from .interval import (
    Box,
    EmptyIntersection,
    Interval,
    Precision,
    interval_add,
    interval_mul,
    mat_vec_mul,
    sym_expand,
    truncate,
    width_box,
)
from .stepfun import Partition, format_rational, parse_rational

__all__ = [
    "METHODS",
    "Segment",
    "SolutionEnclosure",
    "StepRecord",
    "StepTrace",
    "TruncationEscape",
    "MethodNotApplicable",
    "solve_euler1",
    "solve_euler2",
    "solve_euler_rk",
    "solve",
    "enclosure_eval",
    "width_profile",
    "apply_operator",
    "iterate_operator",
]

METHODS = ("e1", "e2", "rk")


class TruncationEscape(EmptyIntersection):
    """The enclosure left ``[-K, K]^n``; the bounds ``K`` or ``M`` are wrong for this problem."""

    def __init__(self, step: int, detail: str):
        super().__init__(f"enclosure escaped the state bounds at step {step}: {detail}")
        self.step = step


class MethodNotApplicable(ValueError):
    pass


@lru_cache(maxsize=4096)
def _powers(s: Fraction, prec: Precision) -> tuple[Interval, Interval, Interval]:
    """Enclosures of ``s``, ``s^2 / 2`` and ``s^3`` for an exact step offset."""
    return prec.interval(s), prec.interval(s * s / 2), prec.interval(s * s * s)


@dataclass(frozen=True)
class Segment:
    """Polynomial piece on ``(q, q_next]``; ``c2`` and ``c3`` are None when zero."""

    q: Fraction
    value: Box
    c1: Box
    c2: Optional[Box] = None
    c3: Optional[Box] = None

    def eval(self, s: Fraction, K) -> Box:
        s1, s2, s3 = _powers(s, self.value.prec)
        out = []
        for i, v in enumerate(self.value.comps):
            acc = interval_add(v, interval_mul(self.c1.comps[i], s1))
            if self.c2 is not None:
                acc = interval_add(acc, interval_mul(self.c2.comps[i], s2))
            if self.c3 is not None:
                acc = interval_add(acc, interval_mul(self.c3.comps[i], s3))
            out.append(acc)
        return truncate(Box(tuple(out)), K)


@dataclass(frozen=True)
class StepRecord:
    """Per-step diagnostics: the box the correction terms were evaluated on, and field widths there."""

    box: Box
    u_width: mpfr
    du_width: Optional[mpfr]
    wall: float


@dataclass(frozen=True)
class StepTrace:
    steps: tuple

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)


@dataclass(frozen=True)
class SolutionEnclosure:
    partition: Partition
    segments: tuple
    method: str
    K: Fraction
    y0: Box
    knots: tuple = field(repr=False)

    @property
    def prec(self) -> Precision:
        return self.y0.prec

    def eval(self, t) -> Box:
        return enclosure_eval(self, t)

    def width_profile(self) -> list:
        return width_profile(self)

    @property
    def width(self) -> mpfr:
        """Largest width over the segments' right endpoints."""
        return max(w for _, w in width_profile(self))

    def to_json(self) -> dict:
        from .records import box_to_json

        return {
            "method": self.method,
            "precision_bits": self.prec.bits,
            "K": format_rational(self.K),
            "partition": [format_rational(q) for q in self.partition.points],
            "segments": [
                {
                    "q": format_rational(s.q),
                    "value": box_to_json(s.value),
                    "c1": box_to_json(s.c1),
                    "c2": None if s.c2 is None else box_to_json(s.c2),
                    "c3": None if s.c3 is None else box_to_json(s.c3),
                }
                for s in self.segments
            ],
        }


def enclosure_eval(y: SolutionEnclosure, t) -> Box:
    """Enclosure at ``t``: ``y0`` at 0, else the polynomial of the segment with ``q_j < t <= q_{j+1}``."""
    t = parse_rational(t)
    i = y.partition.segment_index(t)
    if i == 0:
        return y.y0
    seg = y.segments[i - 1]
    return seg.eval(t - seg.q, y.prec.upper(y.K))


def width_profile(y: SolutionEnclosure) -> list:
    """``(q_{j+1}, w(y(q_{j+1})))`` for every segment."""
    return [(q, width_box(v)) for q, v in zip(y.partition.points[1:], y.knots[1:])]


# -- operators ----------------------------------------------------------------


class _Stepper:
    """Shared per-solve state: constants at working precision and the step rules."""

    def __init__(self, spec: ProblemSpec, ext: FieldExtension, Q: Partition, method: str, prec: Precision):
        if method not in METHODS:
            raise MethodNotApplicable(f"unknown method {method!r}; expected one of {METHODS}")
        if Q.a != spec.a:
            raise ValueError(f"partition covers [0, {Q.a}] but the problem horizon is {spec.a}")
        if ext.n != spec.n:
            raise ValueError("field extension dimension differs from the problem")
        if method == "rk":
            if spec.n != 1:
                raise MethodNotApplicable("the Runge-Kutta operator is defined for scalar problems only")
            if spec.M2 is None:
                raise MethodNotApplicable("the Runge-Kutta operator needs the bound M2")
            alpha = prec.interval(spec.alpha)
            self.c3 = Box((Interval._make(-alpha.hi, alpha.hi, prec),))
        self.spec, self.ext, self.Q, self.method, self.prec = spec, ext, Q, method, prec
        self.Kb = prec.upper(spec.K)
        self.y0 = prec.box(spec.y0)
        self.radii = [prec.upper(spec.M * d) for d in Q.gaps()]
        self.rule = {"e1": self._e1, "e2": self._e2, "rk": self._rk}[method]

    def _reach(self, phi: Box, j: int) -> Box:
        return truncate(sym_expand(phi, self.radii[j]), self.Kb)

    def _e1(self, phi: Box, j: int):
        A = self._reach(phi, j)
        uA = self.ext.u(A)
        return Segment(self.Q.points[j], phi, uA), A, width_box(uA), None

    def _e2(self, phi: Box, j: int):
        A = self._reach(phi, j)
        uA, duA = self.ext.u_and_du(A)
        c2 = mat_vec_mul(duA, uA)
        return Segment(self.Q.points[j], phi, self.ext.u(phi), c2), A, width_box(uA), duA.width()

    def _rk(self, phi: Box, j: int):
        u, du = self.ext.u_and_du(phi)
        c2 = mat_vec_mul(du, u)
        return Segment(self.Q.points[j], phi, u, c2, self.c3), phi, width_box(u), du.width()

    def segment(self, phi: Box, j: int):
        try:
            return self.rule(phi, j)
        except EmptyIntersection as exc:
            raise TruncationEscape(j, str(exc)) from None

    def advance(self, seg: Segment, j: int) -> Box:
        try:
            return seg.eval(self.Q.points[j + 1] - self.Q.points[j], self.Kb)
        except EmptyIntersection as exc:
            raise TruncationEscape(j, str(exc)) from None


def _check_norm(Q: Partition, strict: bool) -> None:
    if strict and Q.norm > 1:
        raise ValueError(f"partition norm {Q.norm} exceeds 1")


def _sweep(spec, ext, Q, method, strict=False):
    _check_norm(Q, strict)
    prec = _precision_of(ext, spec)
    st = _Stepper(spec, ext, Q, method, prec)
    knots = [st.y0]
    segments, records = [], []
    for j in range(Q.k):
        t0 = time.perf_counter()
        seg, box, uw, duw = st.segment(knots[j], j)
        knots.append(st.advance(seg, j))
        segments.append(seg)
        records.append(StepRecord(box, uw, duw, time.perf_counter() - t0))
    y = SolutionEnclosure(Q, tuple(segments), method, spec.K, st.y0, tuple(knots))
    return y, StepTrace(tuple(records))


def _precision_of(ext: FieldExtension, spec: ProblemSpec) -> Precision:
    return ext.prec


def solve_euler1(spec: ProblemSpec, ext: FieldExtension, Q: Partition, strict: bool = False):
    """First-order Euler enclosure: the field is enclosed over the one-step reachable box."""
    return _sweep(spec, ext, Q, "e1", strict)


def solve_euler2(spec: ProblemSpec, ext: FieldExtension, Q: Partition, strict: bool = False):
    """Second-order Euler enclosure.

    ``strict=True`` enforces ``|Q| <= 1``, the partition class the
    convergence theory is stated for.  Soundness does not depend on it.
    """
    return _sweep(spec, ext, Q, "e2", strict)


def solve_euler_rk(spec: ProblemSpec, ext: FieldExtension, Q: Partition, strict: bool = False):
    """Runge-Kutta (Euler) enclosure with the fixed cubic remainder ``[-alpha, alpha] s^3``; scalar only."""
    return _sweep(spec, ext, Q, "rk", strict)


_SOLVERS = {"e1": solve_euler1, "e2": solve_euler2, "rk": solve_euler_rk}


def solve(spec: ProblemSpec, method: str, depth: int, prec: Precision | int = 128):
    """Solve on the equidistant partition with ``2**depth`` pieces."""
    if isinstance(prec, int):
        prec = Precision(prec)
    if method not in _SOLVERS:
        raise MethodNotApplicable(f"unknown method {method!r}; expected one of {METHODS}")
    ext = FieldExtension.from_spec(spec, prec)
    return _SOLVERS[method](spec, ext, Partition.uniform(spec.a, depth))


def apply_operator(spec: ProblemSpec, ext: FieldExtension, Q: Partition, method: str, knots: Sequence[Box]):
    """One application of the operator to a function given by its knot values ``phi(q_0..q_k)``.

    The operator reads ``phi`` only at the knots; the result is returned as a
    :class:`SolutionEnclosure` whose own knot values feed the next application.
    """
    if len(knots) != Q.k + 1:
        raise ValueError(f"need {Q.k + 1} knot values, got {len(knots)}")
    st = _Stepper(spec, ext, Q, method, _precision_of(ext, spec))
    segments = []
    out = [st.y0]
    for j in range(Q.k):
        seg = st.segment(knots[j], j)[0]
        segments.append(seg)
        out.append(st.advance(seg, j))
    return SolutionEnclosure(Q, tuple(segments), method, spec.K, st.y0, tuple(out))


def bottom_knots(spec: ProblemSpec, Q: Partition, prec: Precision) -> tuple:
    """Knot values of the least enclosure, ``[-K, K]^n`` everywhere."""
    K = prec.upper(spec.K)
    b = Box(tuple(Interval._make(-K, K, prec) for _ in range(spec.n)))
    return (b,) * (Q.k + 1)


def iterate_operator(spec: ProblemSpec, ext: FieldExtension, Q: Partition, method: str, times: Optional[int] = None):
    """Apply the operator ``times`` times (default ``k + 1``) starting from the bottom enclosure."""
    prec = _precision_of(ext, spec)
    if times is None:
        times = Q.k + 1
    knots = bottom_knots(spec, Q, prec)
    y = None
    for _ in range(times):
        y = apply_operator(spec, ext, Q, method, knots)
        knots = y.knots
    return y
