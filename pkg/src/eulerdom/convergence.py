"""Width statistics, a-priori width bounds, and empirical convergence orders.

``omega`` and ``omega'`` are half the largest widths of ``u(A_j)`` and
``u'(A_j)`` recorded by a solve; they feed ``rho = L omega + n M omega' +
n omega omega'`` and the second-order width bound
``|Q| rho / (2 L) * (exp(a r_Q L) - 1)``.  The first-order bound is
``|Q| M (exp(a L) - 1) / 2``.  All bounds are evaluated in interval arithmetic
and reported rounded upward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from fractions import Fraction
from typing import Optional, Sequence

from gmpy2 import mpfr

from .field import ProblemSpec
from .interval import Interval, Precision, interval_exp, to_upper_float
from .solvers import SolutionEnclosure, StepTrace

__all__ = [
    "ConvergenceReport",
    "midpoint_width_stats",
    "rho",
    "theoretical_bound_e2",
    "theoretical_bound_e1",
    "empirical_order",
    "convergence_report",
]

_P = Precision(128)


def _iv(x) -> Interval:
    return _P.interval(x)


def midpoint_width_stats(trace: StepTrace) -> tuple[mpfr, Optional[mpfr]]:
    """``(omega, omega')`` from a solve trace; ``omega'`` is None when no derivative was evaluated."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    omega = max(s.u_width for s in trace) / 2
    dws = [s.du_width for s in trace if s.du_width is not None]
    return omega, (max(dws) / 2 if dws else None)


def rho(omega, omega_prime, n: int, M, M1) -> float:
    """``L omega + n M omega' + n omega omega'`` with ``L = n M1``, rounded up."""
    w, wp = _iv(omega), _iv(omega_prime or 0)
    L = _iv(Fraction(n) * Fraction(M1))
    nM = _iv(Fraction(n) * Fraction(M))
    r = L * w + nM * wp + _iv(n) * w * wp
    return to_upper_float(r.hi)


def theoretical_bound_e2(norm, ratio, rho_q, L, a) -> float:
    """Upper bound on the second-order enclosure width; ``inf`` when ``L = 0``."""
    if L == 0:
        return math.inf
    if L < 0:
        raise ValueError("L must be nonnegative")
    growth = interval_exp(_iv(a) * _iv(ratio) * _iv(L)) - 1
    val = _iv(norm) * _iv(rho_q) * growth * _P.interval(Fraction(1, 2) / Fraction(L))
    return to_upper_float(val.hi)


def theoretical_bound_e1(norm, M, L, a) -> float:
    """Upper bound ``|Q| M (exp(a L) - 1) / 2`` on the first-order enclosure width."""
    growth = interval_exp(_iv(a) * _iv(L)) - 1
    val = _iv(Fraction(1, 2)) * _iv(norm) * _iv(M) * growth
    return to_upper_float(val.hi)


def empirical_order(widths: Sequence[tuple[int, float]]) -> float:
    """Mean of ``log2(w_d / w_{d+1})`` over consecutive bisection depths."""
    pts = sorted((int(d), w) for d, w in widths)
    if len(pts) < 3:
        raise ValueError("need at least three depths to estimate an order")
    for (d0, _), (d1, _) in zip(pts, pts[1:]):
        if d1 != d0 + 1:
            raise ValueError(f"depths must be consecutive, got {d0} then {d1}")
    if any(not (w > 0) for _, w in pts):
        raise ValueError("widths must be strictly positive")
    logs = [math.log2(float(w0) / float(w1)) for (_, w0), (_, w1) in zip(pts, pts[1:])]
    return sum(logs) / len(logs)


@dataclass
class ConvergenceReport:
    method: str
    omega: float
    omega_prime: Optional[float]
    rho: Optional[float]
    L: float
    bound_e2: Optional[float]
    bound_e1: float
    measured_width: float
    bound_applicable: bool = True
    empirical_order: Optional[float] = None

    @property
    def bound(self) -> Optional[float]:
        """The bound matching the method the report was built for."""
        return {"e1": self.bound_e1, "e2": self.bound_e2}.get(self.method)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bound"] = self.bound
        return d


def convergence_report(spec: ProblemSpec, y: SolutionEnclosure, trace: StepTrace) -> ConvergenceReport:
    """Bounds and statistics for one solve, computed from its own trace."""
    omega, omega_p = midpoint_width_stats(trace)
    Q = y.partition
    L = spec.L
    r = None if omega_p is None else rho(omega, omega_p, spec.n, spec.M, spec.M1)
    b2 = None if r is None else theoretical_bound_e2(Q.norm, Q.ratio, r, L, spec.a)
    b1 = theoretical_bound_e1(Q.norm, spec.M, L, spec.a)
    return ConvergenceReport(
        method=y.method,
        omega=to_upper_float(omega),
        omega_prime=None if omega_p is None else to_upper_float(omega_p),
        rho=r,
        L=float(L),
        bound_e2=b2,
        bound_e1=b1,
        measured_width=to_upper_float(y.width),
        bound_applicable=L > 0,
    )
