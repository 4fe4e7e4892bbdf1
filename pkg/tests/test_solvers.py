from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from eulerdom.convergence import midpoint_width_stats, rho
from eulerdom.field import FieldExtension, ProblemSpec
from eulerdom.interval import Box, Precision, exact_fraction, width_box
from eulerdom.ivps import builtin, closed_form
from eulerdom.solvers import (
    MethodNotApplicable,
    TruncationEscape,
    apply_operator,
    bottom_knots,
    enclosure_eval,
    iterate_operator,
    solve,
    solve_euler1,
    solve_euler2,
    solve_euler_rk,
    width_profile,
)
from eulerdom.stepfun import Partition

P = Precision(128)
ONE_STEP = Partition((F(0), F(1)))


def ends(b: Box):
    return [(exact_fraction(c.lo), exact_fraction(c.hi)) for c in b]


@pytest.fixture(scope="module")
def ivp_a6():
    spec = builtin("A", K="6")
    return spec, FieldExtension.from_spec(spec, P)


@pytest.mark.parametrize(
    "solver, at1, at_half",
    [
        (solve_euler1, (-1, 5), (0, 3)),
        (solve_euler2, (1, 4), (F(5, 4), 2)),
        (solve_euler_rk, (2, 3), (F(25, 16), F(27, 16))),
    ],
)
def test_one_step_hand_examples(ivp_a6, solver, at1, at_half):
    spec, ext = ivp_a6
    y, trace = solver(spec, ext, ONE_STEP)
    assert ends(y.eval(1)) == [at1]
    assert ends(y.eval(F(1, 2))) == [at_half]
    assert y.eval(F(1, 2)).contains(closed_form("A")(F(1, 2)))
    assert y.eval(0) == P.box([1])


def test_one_step_trace_and_profile(ivp_a6):
    spec, ext = ivp_a6
    y, trace = solve_euler2(spec, ext, ONE_STEP)
    assert ends(trace.steps[0].box) == [(-2, 4)]
    assert trace.steps[0].u_width == 6
    assert width_profile(y) == [(1, 3)]
    assert midpoint_width_stats(trace)[0] == 3


@pytest.mark.parametrize("method", ["e1", "e2", "rk"])
def test_zero_field_is_constant(method):
    spec = ProblemSpec(n=1, fields=("(const 0)",), y0=("3/8",), a=1, M=0, M1=0, M2=0)
    y, _ = solve(spec, method, 3)
    y0 = P.box([F(3, 8)])
    assert all(v == y0 for v in y.knots)
    assert all(w == 0 for _, w in width_profile(y))
    assert y.eval(F(5, 7)) == y0


def test_e1_contains_exp_at_every_knot():
    spec = builtin("A")
    y, _ = solve(spec, "e1", 6)
    exact = closed_form("A")
    assert len(y.knots) == 65
    assert all(v.contains(exact(q)) for q, v in zip(y.partition.points, y.knots))


def test_rk_on_cos_field_contains_closed_form_at_horizon():
    y, _ = solve(builtin("B"), "rk", 8)
    assert y.eval(5).contains(closed_form("B")(5))


@pytest.mark.parametrize("method", ["e1", "e2"])
def test_augmented_problem_contains_closed_form(method):
    y, _ = solve(builtin("C"), method, 6)
    exact = closed_form("C")
    for q in (F(1, 40), F(1, 17), F(1, 10)):
        assert y.eval(q).contains(exact(q))


def test_left_continuity_and_initial_value():
    y, _ = solve(builtin("B"), "e2", 4)
    assert y.eval(0) == y.y0 and width_box(y.eval(0)) == 0
    for j, seg in enumerate(y.segments):
        q_next = y.partition.points[j + 1]
        assert y.eval(q_next) == y.knots[j + 1] == seg.eval(q_next - seg.q, y.prec.upper(y.K))
        if j + 1 < len(y.segments):
            assert y.segments[j + 1].value == y.knots[j + 1]


@pytest.mark.parametrize("method", ["e1", "e2", "rk"])
def test_widths_nondecreasing_without_clipping(method):
    y, _ = solve(builtin("A"), method, 5)
    ws = [w for _, w in width_profile(y)]
    assert ws == sorted(ws)


@pytest.mark.parametrize("ivp, method", [("A", "e2"), ("B", "e2"), ("B", "rk"), ("D", "e1"), ("C", "e2")])
def test_fixpoint_from_bottom_matches_sweep(ivp, method):
    spec = builtin(ivp)
    ext = FieldExtension.from_spec(spec, P)
    Q = Partition.uniform(spec.a, 3)
    y, _ = {"e1": solve_euler1, "e2": solve_euler2, "rk": solve_euler_rk}[method](spec, ext, Q)
    z = iterate_operator(spec, ext, Q, method)
    assert z.knots == y.knots and z.segments == y.segments
    again = apply_operator(spec, ext, Q, method, z.knots)
    assert again.knots == z.knots
    # fewer applications have not stabilised yet
    early = iterate_operator(spec, ext, Q, method, times=Q.k)
    assert early.knots[:-1] == y.knots[:-1]


def test_bottom_is_full_state_box():
    spec = builtin("D")
    b = bottom_knots(spec, Partition.uniform(spec.a, 1), P)
    assert len(b) == 3 and ends(b[0]) == [(-8, 8), (-8, 8)]


def test_rk_rejects_vector_problems_and_missing_M2():
    with pytest.raises(MethodNotApplicable):
        solve(builtin("C"), "rk", 2)
    spec = ProblemSpec(n=1, fields=("(var 0)",), y0=(1,), a=1, M=3, M1=1)
    with pytest.raises(MethodNotApplicable):
        solve(spec, "rk", 2)
    with pytest.raises(MethodNotApplicable):
        solve(spec, "e3", 2)


def test_strict_norm_check():
    spec = builtin("B")
    ext = FieldExtension.from_spec(spec, P)
    Q = Partition.uniform(spec.a, 1)
    with pytest.raises(ValueError):
        solve_euler2(spec, ext, Q, strict=True)
    solve_euler2(spec, ext, Q)


def test_wrong_bounds_abort_with_step_index():
    spec = ProblemSpec(n=1, fields=("(var 0)",), y0=(1,), a=3, M="1/10", M1=1, K=2)
    with pytest.raises(TruncationEscape) as err:
        solve(spec, "e1", 5)
    assert 0 < err.value.step < 32


def test_raising_precision_never_widens():
    widths = [solve(builtin("B"), "e2", 6, bits)[0].width_profile() for bits in (64, 128, 256)]
    for lo, mid, hi in zip(*widths):
        assert lo[1] >= mid[1] >= hi[1]


def test_enclosure_json_shape():
    y, _ = solve(builtin("A", K="6"), "e2", 0)
    data = y.to_json()
    assert data["partition"] == ["0", "1"]
    seg = data["segments"][0]
    assert seg["value"] == [["1", "1"]] and seg["c2"] == [["-2", "4"]] and seg["c3"] is None


# -- single-step equivalence with an independent exact evaluation -------------


def _iadd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _imul(a, b):
    p = [x * y for x in a for y in b]
    return (min(p), max(p))


def _clip(a, K):
    return (max(a[0], -K), min(a[1], K))


dy = st.integers(-8, 8).map(lambda k: F(k, 4))


@given(dy, dy, dy, dy, st.sampled_from([F(1, 4), F(1, 2), F(1)]), st.sampled_from(["e1", "e2", "rk"]))
def test_one_step_matches_direct_formula(c0, c1, c2, y0, h, method):
    # f(y) = c0 + c1 y + c2 y y, written exactly as the extension sees it
    field = f"(add (const {c0.numerator}/{c0.denominator}) (add (mul (const {c1.numerator}/{c1.denominator}) (var 0)) (mul (const {c2.numerator}/{c2.denominator}) (mul (var 0) (var 0)))))"
    K, M, M1, M2 = F(64), F(3), F(1000), F(2)
    spec = ProblemSpec(n=1, fields=(field,), y0=(y0,), a=h, M=M, M1=M1, M2=M2, K=K)
    y, _ = solve(spec, method, 0)

    def u(x):
        return _iadd((c0, c0), _iadd(_imul((c1, c1), x), _imul((c2, c2), _imul(x, x))))

    def du(x):
        # product rule on y*y gives y*1 + 1*y
        return _iadd((c1, c1), _imul((c2, c2), _iadd(x, x)))

    phi = (y0, y0)
    A = _clip((y0 - M * h, y0 + M * h), K)
    if method == "e1":
        out = _iadd(phi, _imul(u(A), (h, h)))
    elif method == "e2":
        out = _iadd(_iadd(phi, _imul(u(phi), (h, h))), _imul(_imul(du(A), u(A)), (h * h / 2, h * h / 2)))
    else:
        alpha = (M2 * M + M1**2) * M / 6
        out = _iadd(_iadd(phi, _imul(u(phi), (h, h))), _imul(_imul(du(phi), u(phi)), (h * h / 2, h * h / 2)))
        out = _iadd(out, (-alpha * h**3, alpha * h**3))
    assert ends(y.knots[1]) == [_clip(out, K)]


# -- growth per step ----------------------------------------------------------


def _growth_ok(ivp, depth, rho_scale):
    spec = builtin(ivp)
    y, trace = solve(spec, "e2", depth)
    om, omp = midpoint_width_stats(trace)
    r = F(rho(om, omp, spec.n, spec.M, spec.M1)) * rho_scale
    h, L = y.partition.norm, spec.L
    ws = [F(0)] + [exact_fraction(w) for _, w in width_profile(y)]
    return all(b <= (a * (1 + h * L) + h * h * r / 2) * F(101, 100) for a, b in zip(ws, ws[1:]))


@pytest.mark.parametrize("ivp", ["A", "B", "C", "D"])
@pytest.mark.parametrize("depth", [4, 8])
def test_step_growth_with_full_width_rho(ivp, depth):
    # each midpoint-width term bounds by full widths 2*omega, 2*omega'; that doubles rho
    assert _growth_ok(ivp, depth, 2)


@pytest.mark.xfail(strict=True, reason="with omega as half-width the per-step bound is short by a factor 2 on the linear field")
def test_step_growth_with_half_width_rho_on_linear_field():
    assert _growth_ok("A", 8, 1)
