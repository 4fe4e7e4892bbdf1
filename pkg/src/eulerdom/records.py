"""JSON and CSV encodings for boxes, enclosures and run records.

Endpoints are written as exact decimal expansions of their binary values, so
a round trip through JSON reproduces every endpoint bit for bit.
"""

from __future__ import annotations

import csv
import io
from fractions import Fraction
from typing import Iterable, Sequence

from .interval import Box, Interval, Precision, exact_fraction

CSV_HEADER = ("depth", "method", "ivp", "width", "wall_ms", "bound", "order")


def exact_decimal(x) -> str:
    """Finite decimal expansion of a dyadic rational (any binary float endpoint)."""
    q = exact_fraction(x)
    num, den = q.numerator, q.denominator
    e = den.bit_length() - 1
    if den != 1 << e:
        raise ValueError(f"{q} is not dyadic")
    sign = "-" if num < 0 else ""
    digits = str(abs(num) * 5**e)
    if e == 0:
        return sign + digits
    digits = digits.rjust(e + 1, "0")
    int_part, frac_part = digits[:-e], digits[-e:].rstrip("0")
    return sign + int_part + ("." + frac_part if frac_part else "")


def interval_to_json(c: Interval) -> list[str]:
    return [exact_decimal(c.lo), exact_decimal(c.hi)]


def box_to_json(v: Box) -> list[list[str]]:
    return [interval_to_json(c) for c in v]


def box_from_json(data: Sequence[Sequence[str]], prec: Precision) -> Box:
    return Box(tuple(Interval(prec.lower(Fraction(lo)), prec.upper(Fraction(hi)), prec) for lo, hi in data))


def format_float(x) -> str:
    """Shortest repr of a double; empty field for missing values."""
    if x is None:
        return ""
    return repr(float(x))


def rows_to_csv(rows: Iterable[dict], header: Sequence[str] = CSV_HEADER) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([r.get(h, "") for h in header])
    return buf.getvalue()
