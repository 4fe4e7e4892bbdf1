"""``eulerdom`` command line: solve one problem, sweep depths, compare methods.

Exit status is 0 on success, 1 for configuration errors (bad problem file,
unknown method, a method that does not apply to the problem) and 2 when an
enclosure escapes the state bounds ``[-K, K]^n``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .convergence import convergence_report, empirical_order
from .field import FieldParseError, ProblemSpec, derivative_bound
from .interval import MIN_BITS, DEFAULT_BITS, Precision, to_upper_float
from .ivps import load_problem
from .records import CSV_HEADER, box_to_json, exact_decimal, format_float, rows_to_csv
from .solvers import METHODS, MethodNotApplicable, TruncationEscape, solve
from .stepfun import format_rational

log = logging.getLogger("eulerdom")

EXIT_OK, EXIT_CONFIG, EXIT_ESCAPE = 0, 1, 2


class ConfigError(Exception):
    pass


def default_bits() -> int:
    raw = os.environ.get("EULERDOM_BITS")
    if raw is None:
        return DEFAULT_BITS
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"EULERDOM_BITS={raw!r} is not an integer") from None


def _check_method(spec: ProblemSpec, method: str) -> None:
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    if method == "rk":
        if spec.n != 1:
            raise ConfigError(f"method rk applies to scalar problems only; {spec.name or 'problem'} has n={spec.n}")
        if spec.M2 is None:
            raise ConfigError("method rk needs the bound M2 in the problem")


@dataclass(frozen=True)
class RunResult:
    ivp: str
    method: str
    depth: int
    bits: int
    width: float
    wall_ms: float
    bound: Optional[float]
    y: object
    trace: object

    def row(self, order: Optional[float]) -> dict:
        return {
            "depth": self.depth,
            "method": self.method,
            "ivp": self.ivp,
            "width": format_float(self.width),
            "wall_ms": f"{self.wall_ms:.3f}",
            "bound": format_float(self.bound),
            "order": format_float(order),
        }


def run_once(spec: ProblemSpec, method: str, depth: int, bits: int) -> RunResult:
    prec = Precision(bits)
    t0 = time.perf_counter()
    y, trace = solve(spec, method, depth, prec)
    wall_ms = (time.perf_counter() - t0) * 1e3
    rep = convergence_report(spec, y, trace)
    return RunResult(spec.name, method, depth, bits, to_upper_float(y.width), wall_ms, rep.bound, y, trace)


def _run_many(spec: ProblemSpec, jobs: Sequence[tuple[str, int]], bits: int, workers: int) -> list[RunResult]:
    if workers <= 1:
        return [run_once(spec, m, d, bits) for m, d in jobs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda md: run_once(spec, md[0], md[1], bits), jobs))


def _rows_with_order(results: Sequence[RunResult]) -> list[dict]:
    """Rows sorted by depth, each carrying the order estimated from the runs up to it."""
    rows, seen = [], []
    for r in sorted(results, key=lambda r: r.depth):
        seen.append((r.depth, r.width))
        order = empirical_order(seen) if len(seen) >= 3 and all(w > 0 for _, w in seen) else None
        rows.append(r.row(order))
    return rows


def _depth_range(a: int, b: int) -> range:
    if a < 0:
        raise ConfigError("depths must be nonnegative")
    if a > b:
        raise ConfigError(f"--from {a} exceeds --to {b}")
    return range(a, b + 1)


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
        log.info("wrote %s", out)


# -- subcommands --------------------------------------------------------------


def knots_csv(y) -> str:
    n = len(y.y0)
    header = ["t"] + [f"{s}_{i + 1}" for i in range(n) for s in ("lo", "hi")]
    rows = []
    for q, v in zip(y.partition.points[1:], y.knots[1:]):
        row = {"t": format_rational(q)}
        for i, c in enumerate(v):
            row[f"lo_{i + 1}"] = exact_decimal(c.lo)
            row[f"hi_{i + 1}"] = exact_decimal(c.hi)
        rows.append(row)
    return rows_to_csv(rows, header)


def run_record(spec: ProblemSpec, res: RunResult) -> dict:
    y, trace = res.y, res.trace
    rep = convergence_report(spec, y, trace)
    rec = {
        "ivp": spec.name,
        "method": res.method,
        "depth": res.depth,
        "precision_bits": res.bits,
        "problem": spec.to_dict(),
        "wall_ms": res.wall_ms,
        "width": format_float(res.width),
        "final": box_to_json(y.knots[-1]),
        "widths": [[format_rational(q), exact_decimal(w)] for q, w in y.width_profile()],
        "convergence": rep.to_dict(),
    }
    observed = to_upper_float(derivative_bound(spec, [s.box for s in trace]))
    rec["derivative_bound_observed"] = format_float(observed)
    rec["derivative_clipped"] = res.method != "e1" and observed > spec.M1
    if rec["derivative_clipped"]:
        log.warning("derivative enclosure reached %s > M1 = %s; the run relies on M1 being a true bound", observed, spec.M1)
    seg_json = y.to_json()
    zero = [["0", "0"]] * spec.n
    for s in seg_json["segments"]:
        s["c2"] = s["c2"] or zero
        s["c3"] = s["c3"] or zero
    rec["partition"] = seg_json["partition"]
    rec["segments"] = seg_json["segments"]
    return rec


def cmd_solve(args) -> int:
    spec = load_problem(args.ivp)
    _check_method(spec, args.method)
    if args.depth < 0:
        raise ConfigError("depth must be nonnegative")
    res = run_once(spec, args.method, args.depth, args.bits)
    out = args.out or f"{spec.name or 'run'}_{args.method}_d{args.depth}"
    stem = out[:-5] if out.endswith(".json") else out
    Path(stem + ".json").write_text(json.dumps(run_record(spec, res), indent=1) + "\n")
    Path(stem + ".knots.csv").write_text(knots_csv(res.y))
    log.info("width %s after %.1f ms; wrote %s.json and %s.knots.csv", res.width, res.wall_ms, stem, stem)
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = load_problem(args.ivp)
    _check_method(spec, args.method)
    depths = _depth_range(args.depth_from, args.depth_to)
    results = _run_many(spec, [(args.method, d) for d in depths], args.bits, args.jobs)
    _emit(rows_to_csv(_rows_with_order(results), CSV_HEADER), args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    spec = load_problem(args.ivp)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise ConfigError("no methods given")
    for m in methods:
        _check_method(spec, m)
    depths = _depth_range(args.depth_from, args.depth_to)
    results = _run_many(spec, [(m, d) for m in methods for d in depths], args.bits, args.jobs)
    rows = []
    for m in methods:
        rows += _rows_with_order([r for r in results if r.method == m])
    _emit(rows_to_csv(rows, CSV_HEADER), args.out)
    return EXIT_OK


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eulerdom", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--ivp", required=True, help="builtin id A-D or path to a JSON problem file")
        sp.add_argument("--bits", type=int, default=None, help="working precision (default $EULERDOM_BITS or 128)")

    s = sub.add_parser("solve", help="solve one problem at one depth")
    common(s)
    s.add_argument("--method", required=True, choices=METHODS)
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--out", help="output prefix; writes PREFIX.json and PREFIX.knots.csv")
    s.set_defaults(func=cmd_solve)

    for name, fn in (("sweep", cmd_sweep), ("compare", cmd_compare)):
        s = sub.add_parser(name, help=f"{name} over a range of depths, CSV output")
        common(s)
        if name == "sweep":
            s.add_argument("--method", required=True, choices=METHODS)
        else:
            s.add_argument("--methods", default=",".join(METHODS), help="comma separated, default e1,e2,rk")
        s.add_argument("--from", dest="depth_from", type=int, required=True)
        s.add_argument("--to", dest="depth_to", type=int, required=True)
        s.add_argument("--jobs", type=int, default=1, help="worker threads")
        s.add_argument("--out", help="CSV path (default stdout)")
        s.set_defaults(func=fn)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.bits is None:
            args.bits = default_bits()
        if args.bits < MIN_BITS:
            raise ConfigError(f"--bits must be at least {MIN_BITS}")
        return args.func(args)
    except TruncationEscape as exc:
        print(f"eulerdom: {exc}", file=sys.stderr)
        return EXIT_ESCAPE
    except (ConfigError, MethodNotApplicable, FieldParseError, ValueError, KeyError, OSError) as exc:
        print(f"eulerdom: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
