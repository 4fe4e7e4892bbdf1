"""A-priori depth from the first-order width bound versus an incremental depth search, on IVP C.

The bound |Q| M (e^{aL} - 1) / 2 <= eps gives the partition norm a static
analysis would demand; the sweep instead raises the depth from 2 until the
measured second-order enclosure is narrower than eps.
"""

import argparse
import math
import time
from fractions import Fraction

from eulerdom.convergence import theoretical_bound_e1
from eulerdom.ivps import builtin
from eulerdom.solvers import solve


def static_depth(a, M, L, eps):
    """Smallest depth whose uniform partition satisfies the first-order bound."""
    # |Q| <= eps / (M/2 (e^{aL} - 1)), with |Q| = a / 2^d
    denom = M / 2 * math.expm1(a * L)
    need = a * denom / eps
    d = max(0, math.ceil(math.log2(need)))
    return d, denom


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=1e-4)
    ap.add_argument("--max-depth", type=int, default=18)
    ap.add_argument("--bits", type=int, default=128)
    args = ap.parse_args()

    spec = builtin("C")
    a, M = float(spec.a), float(spec.M)
    for label, M1 in (("M1 = 300", 300), (f"M1 = {spec.M1} (builtin)", float(spec.M1))):
        L = spec.n * M1
        d, denom = static_depth(a, M, L, args.eps)
        print(f"static, {label}: |Q| <= eps / {denom:.3e}; depth >= {d} ({d} bisections, 2^{d} steps)")
        q = Fraction(spec.a) / 2**d
        assert theoretical_bound_e1(q, spec.M, L, spec.a) <= args.eps * (1 + 1e-9)

    t_total = time.perf_counter()
    for depth in range(2, args.max_depth + 1):
        t0 = time.perf_counter()
        y, _ = solve(spec, "e2", depth, args.bits)
        w = float(y.width)
        print(f"sweep: depth {depth:2d}  width {w:.3e}  {time.perf_counter() - t0:6.2f}s")
        if w <= args.eps:
            print(f"target {args.eps:g} reached at depth {depth}, {time.perf_counter() - t_total:.1f}s in total")
            return
    print(f"target not reached by depth {args.max_depth}")


if __name__ == "__main__":
    main()
