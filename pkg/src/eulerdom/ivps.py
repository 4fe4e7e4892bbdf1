"""Builtin test problems and closed-form solution oracles.

Non-autonomous problems are augmented with time as component 0.

=====  ======================  ===========  ======  ==================
id     field                   y0           a       bounds
=====  ======================  ===========  ======  ==================
A      y                       1            1       M=3, M1=1, M2=0
B      cos y                   0            5       M=M1=M2=1
C      (1, 10 cos(10 t) y)     (0, 1)       1/10    M=30, M1=301
D      (1, |sin(t + y)|)       (0, 1)       5       M=1, M1=2
=====  ======================  ===========  ======  ==================
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

from .field import ProblemSpec
from .interval import (
    Box,
    Precision,
    interval_atan,
    interval_exp,
    interval_sin,
    interval_tanh,
)
from .stepfun import parse_rational

__all__ = ["BUILTINS", "builtin", "load_problem", "closed_form", "ORACLE_BITS"]

ORACLE_BITS = 512

BUILTINS: dict[str, dict] = {
    "A": {"n": 1, "fields": ["(var 0)"], "y0": ["1"], "a": "1", "M": "3", "M1": "1", "M2": "0"},
    "B": {"n": 1, "fields": ["(cos (var 0))"], "y0": ["0"], "a": "5", "M": "1", "M1": "1", "M2": "1"},
    "C": {
        "n": 2,
        "fields": ["(const 1)", "(mul (mul (const 10) (cos (mul (const 10) (var 0)))) (var 1))"],
        "y0": ["0", "1"],
        "a": "1/10",
        "M": "30",
        "M1": "301",
    },
    "D": {
        "n": 2,
        "fields": ["(const 1)", "(abs (sin (add (var 0) (var 1))))"],
        "y0": ["0", "1"],
        "a": "5",
        "M": "1",
        "M1": "2",
    },
}


def builtin(name: str, **overrides) -> ProblemSpec:
    key = name.upper()
    if key not in BUILTINS:
        raise KeyError(f"unknown builtin problem {name!r}; expected one of {sorted(BUILTINS)}")
    data = dict(BUILTINS[key], name=key)
    data.update(overrides)
    return ProblemSpec.from_dict(data)


def load_problem(ref: str) -> ProblemSpec:
    """A builtin id (``A``..``D``) or the path of a JSON problem file."""
    if ref.upper() in BUILTINS:
        return builtin(ref)
    path = Path(ref)
    if not path.is_file():
        raise ValueError(f"{ref!r} is neither a builtin problem nor a readable file")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return ProblemSpec.from_dict(data, name=path.stem)


def _exact_a(t: Fraction, p: Precision) -> Box:
    return Box((interval_exp(p.interval(t)),))


def _exact_b(t: Fraction, p: Precision) -> Box:
    # y' = cos y, y(0) = 0  gives  y = 2 atan(tanh(t / 2))
    return Box((interval_atan(interval_tanh(p.interval(t / 2))) * 2,))


def _exact_c(t: Fraction, p: Precision) -> Box:
    return Box((p.interval(t), interval_exp(interval_sin(p.interval(10 * t)))))


_CLOSED: dict[str, Callable[[Fraction, Precision], Box]] = {"A": _exact_a, "B": _exact_b, "C": _exact_c}


def closed_form(name: str, bits: int = ORACLE_BITS) -> Optional[Callable[[object], Box]]:
    """Enclosure of the exact solution at a rational time, or None when no closed form is known."""
    fn = _CLOSED.get(name.upper())
    if fn is None:
        return None
    p = Precision(bits)
    return lambda t: fn(parse_rational(t), p)
