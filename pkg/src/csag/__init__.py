"""Compositional stochastic average gradient (C-SAG) and baselines."""

from .core import (
    CompositionalProblem,
    DimensionError,
    NonFiniteError,
    OracleTally,
    compose_objective,
    finite_difference_gradient,
    full_gradient,
    objective,
)
from .optimizers import (
    CsagConfig,
    CsagState,
    DivergenceError,
    Trace,
    TraceRecord,
    run_csag,
    run_csvrg1,
    run_csvrg2,
    run_fg,
)

__all__ = [
    "CompositionalProblem",
    "CsagConfig",
    "CsagState",
    "DimensionError",
    "DivergenceError",
    "NonFiniteError",
    "OracleTally",
    "Trace",
    "TraceRecord",
    "compose_objective",
    "finite_difference_gradient",
    "full_gradient",
    "objective",
    "run_csag",
    "run_csvrg1",
    "run_csvrg2",
    "run_fg",
]
