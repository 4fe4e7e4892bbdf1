"""Validated Euler-type enclosures of ODE solutions over outward-rounded interval arithmetic."""

from .convergence import ConvergenceReport, convergence_report, empirical_order
from .field import FieldExtension, ProblemSpec, parse_field
from .interval import Box, Interval, IntervalMatrix, Precision
from .ivps import builtin, closed_form, load_problem
from .solvers import (
    METHODS,
    SolutionEnclosure,
    TruncationEscape,
    solve,
    solve_euler1,
    solve_euler2,
    solve_euler_rk,
)
from .stepfun import Partition, StepEnclosure

__version__ = "0.1.0"
