"""Acceptance criteria, one test per criterion, each reporting a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``; the summary block
at the end of the pytest output lists every criterion with its measurements.
"""

import random
import time
from fractions import Fraction as F
from functools import lru_cache

import pytest

from eulerdom.convergence import empirical_order, midpoint_width_stats, rho, theoretical_bound_e2
from eulerdom.field import FieldExtension
from eulerdom.interval import Box, Precision, exact_fraction, to_upper_float
from eulerdom.ivps import builtin, closed_form
from eulerdom.solvers import solve, solve_euler1, solve_euler2, solve_euler_rk
from eulerdom.stepfun import (
    Partition,
    StepEnclosure,
    expansion_certificate,
    partition_join,
    refines,
    separation_check,
)

SEED = 20261014


@lru_cache(maxsize=None)
def run(ivp, method, depth, bits=128):
    t0 = time.perf_counter()
    y, trace = solve(builtin(ivp), method, depth, bits)
    return y, trace, time.perf_counter() - t0


def width(ivp, method, depth, bits=128):
    return to_upper_float(run(ivp, method, depth, bits)[0].width)


def order(ivp, method, lo=8, hi=14):
    return empirical_order([(d, width(ivp, method, d)) for d in range(lo, hi + 1)])


@pytest.fixture
def report(request):
    def emit(n, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} {n}: {detail}"
        print(line)
        request.config.acceptance_lines.append(line)
        return ok

    return emit


def test_criterion_01_soundness(report):
    exact = {k: closed_form(k) for k in "ABC"}
    cases = [(ivp, m) for ivp in "ABC" for m in ("e1", "e2", "rk") if not (ivp == "C" and m == "rk")]
    t0 = time.perf_counter()
    checked, misses = 0, []
    for ivp, m in cases:
        for d in range(2, 13):
            y = run(ivp, m, d)[0]
            for q, v in zip(y.partition.points, y.knots):
                checked += 1
                if not v.contains(exact[ivp](q)):
                    misses.append((ivp, m, d, q))
    elapsed = time.perf_counter() - t0
    ok = not misses and elapsed < 300
    report(1, ok, f"{checked} knot containments over {len(cases)} ivp/method pairs, depths 2-12, {len(misses)} misses, {elapsed:.1f}s (< 300s)")
    assert not misses, misses[:5]
    assert elapsed < 300


def test_criterion_02_second_order(report):
    t0 = time.perf_counter()
    oa, ob = order("A", "e2"), order("B", "e2")
    elapsed = time.perf_counter() - t0
    ok = 1.7 <= oa <= 2.3 and 1.7 <= ob <= 2.3 and elapsed < 120
    report(2, ok, f"E2 order depths 8-14: A {oa:.4f}, B {ob:.4f} (band [1.7, 2.3]), {elapsed:.1f}s")
    assert ok


def test_criterion_03_first_order_baseline(report):
    oa, ob = order("A", "e1"), order("B", "e1")
    ok = 0.8 <= oa <= 1.2 and 0.8 <= ob <= 1.2
    report(3, ok, f"Ec order depths 8-14: A {oa:.4f}, B {ob:.4f} (band [0.8, 1.2])")
    assert ok


def test_criterion_04_comparative_tightness(report):
    fails = []
    for ivp in "AB":
        for d in range(6, 15):
            w2, wr, wc = width(ivp, "e2", d), width(ivp, "rk", d), width(ivp, "e1", d)
            if not w2 < wc:
                fails.append(f"{ivp}/d{d}: e2 {w2:.3g} >= e1 {wc:.3g}")
            if not w2 < wr:
                fails.append(f"{ivp}/d{d}: e2 {w2:.3g} >= rk {wr:.3g}")
    ok = not fails
    detail = "width(E2) < width(ER) and < width(Ec) on A, B at depths 6-14"
    if fails:
        detail += f"; {len(fails)} violations, e.g. " + "; ".join(fails[:3])
    report(4, ok, detail)
    assert ok, fails


def test_criterion_05_bound_validity(report):
    runs = sorted({(ivp, d) for ivp in "ABC" for d in range(2, 13)} | {(ivp, d) for ivp in "AB" for d in range(8, 15)})
    worst, fails = 0.0, []
    for ivp, d in runs:
        spec = builtin(ivp)
        y, trace, _ = run(ivp, "e2", d)
        om, omp = midpoint_width_stats(trace)
        r = rho(om, omp, spec.n, spec.M, spec.M1)
        bound = theoretical_bound_e2(y.partition.norm, y.partition.ratio, r, spec.L, spec.a)
        ratio = float(y.width) / bound
        worst = max(worst, ratio)
        if ratio > 1.05:
            fails.append(f"{ivp}/d{d} ratio {ratio:.3f}")
    ok = not fails
    detail = f"{len(runs)} E2 runs, max measured/bound {worst:.3f} (limit 1.05)"
    if fails:
        detail += f"; {len(fails)} over, e.g. " + ", ".join(fails[:3])
    report(5, ok, detail)
    assert ok, fails


def test_criterion_06_c_depth16_width(report):
    y, _, elapsed = run("C", "e2", 16)
    w = to_upper_float(y.width)
    ok = w <= 1e-4 and elapsed <= 120
    report(6, ok, f"IVP C, E2, depth 16: width {w:.3e} (<= 1e-4) in {elapsed:.1f}s (<= 120s)")
    assert ok


def test_criterion_07_nondifferentiable_trend(report):
    od = order("D", "e2")
    ok = 1.5 <= od <= 2.5
    report(7, ok, f"IVP D E2 order depths 8-14: {od:.4f} (band [1.5, 2.5])")
    assert ok


def _ulps_apart(a, b, bits):
    if a == b:
        return 0
    fa, fb = exact_fraction(a), exact_fraction(b)
    scale = max(abs(fa), abs(fb))
    ulp = F(2) ** (scale.numerator.bit_length() - scale.denominator.bit_length() - bits + 1)
    return abs(fa - fb) / ulp


def test_criterion_08_one_step_oracles(report):
    P = Precision(128)
    spec = builtin("A", K="6")
    ext = FieldExtension.from_spec(spec, P)
    Q = Partition((F(0), F(1)))
    expected = {"e1": (-1, 5), "e2": (1, 4), "rk": (2, 3)}
    got, worst = {}, 0
    for m, solver in (("e1", solve_euler1), ("e2", solve_euler2), ("rk", solve_euler_rk)):
        c = solver(spec, ext, Q)[0].knots[1][0]
        got[m] = (exact_fraction(c.lo), exact_fraction(c.hi))
        lo, hi = expected[m]
        worst = max(worst, _ulps_apart(c.lo, P.lower(lo), 128), _ulps_apart(c.hi, P.upper(hi), 128))
    ok = worst <= 2
    shown = ", ".join(f"{m} [{lo}, {hi}]" for m, (lo, hi) in got.items())
    report(8, ok, f"one step on IVP A, K=6: {shown}; max endpoint deviation {worst} ulp (<= 2)")
    assert ok


# -- criterion 9: randomized order-theory instances ---------------------------

_P = Precision(128)
N_INSTANCES = 10_000


def _rand_partition(rng):
    inner = {F(rng.randint(1, 15), 16) for _ in range(rng.randint(0, 4))}
    return Partition((F(0),) + tuple(sorted(inner)) + (F(1),))


def _rand_step(rng, n, K, P=None):
    P = P or _rand_partition(rng)
    vals = []
    for _ in range(P.k + 1):
        comps = []
        for _ in range(n):
            x, y = sorted(F(rng.randint(-8 * K, 8 * K), 8) for _ in range(2))
            comps.append(_P.interval(x, y))
        vals.append(Box(tuple(comps)))
    return StepEnclosure(P, tuple(vals), K)


def _widen(rng, g):
    K = g.K
    J = partition_join(_rand_partition(rng), g.partition)
    base = F(rng.randint(1, 32), 64)
    vals = []
    for v in g.on(J):
        comps = []
        for c in v:
            lo = exact_fraction(c.lo) - base - F(rng.randint(0, 16), 16)
            hi = exact_fraction(c.hi) + base + F(rng.randint(0, 16), 16)
            lo = -K if lo < -K or rng.random() < 0.1 else lo
            hi = K if hi > K or rng.random() < 0.1 else hi
            comps.append(_P.interval(lo, hi))
        vals.append(Box(tuple(comps)))
    return StepEnclosure(J, tuple(vals), K)


def _maybe_widen(rng, g, n, K):
    return _widen(rng, g) if rng.random() < 0.8 else _rand_step(rng, n, K)


def test_criterion_09_order_theory(report):
    rng = random.Random(SEED)
    trans_fail = trans_premise = 0
    wit_fail = wit_true = 0
    join_fail = join_premise = 0
    for _ in range(N_INSTANCES):
        n, K = rng.choice((1, 2)), rng.choice((1, 2, 4))
        c = _rand_step(rng, n, K)
        b = _maybe_widen(rng, c, n, K)
        a = _maybe_widen(rng, b, n, K)
        if separation_check(a, b)[0] and separation_check(b, c)[0]:
            trans_premise += 1
            trans_fail += not separation_check(a, c)[0]
        g = _rand_step(rng, n, K)
        f = _maybe_widen(rng, g, n, K)
        ok, delta = separation_check(f, g)
        if ok:
            wit_true += 1
            wit_fail += not expansion_certificate(f, g, delta)
        P, Q = _rand_partition(rng), _rand_partition(rng)
        R = partition_join(partition_join(P, Q), _rand_partition(rng)) if rng.random() < 0.7 else _rand_partition(rng)
        J = partition_join(P, Q)
        join_fail += not (refines(P, J) and refines(Q, J) and J.norm <= min(P.norm, Q.norm))
        if refines(P, R) and refines(Q, R):
            join_premise += 1
            join_fail += not refines(J, R)
    ok = trans_fail == wit_fail == join_fail == 0
    report(
        9,
        ok,
        f"{N_INSTANCES} instances each: transitivity {trans_fail} failures ({trans_premise} with premise), "
        f"witness {wit_fail} failures ({wit_true} separated), join lub {join_fail} failures ({join_premise} common refinements)",
    )
    assert ok


def test_criterion_10_precision_monotone(report):
    profiles = {bits: run("B", "e2", 10, bits)[0].width_profile() for bits in (64, 128, 256)}
    ok = all(a[1] >= b[1] >= c[1] for a, b, c in zip(profiles[64], profiles[128], profiles[256]))
    ws = [to_upper_float(max(w for _, w in profiles[b])) for b in (64, 128, 256)]
    report(10, ok, f"IVP B, E2, depth 10: widths at 64/128/256 bits {ws[0]:.12e} >= {ws[1]:.12e} >= {ws[2]:.12e}, all knots")
    assert ok
