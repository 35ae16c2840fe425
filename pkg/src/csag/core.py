"""Oracle contract for finite-sum compositional problems.

A problem exposes ``m`` inner maps ``G_j: R^p -> R^q`` and ``n`` outer
functions ``F_i: R^q -> R``; the objective is

    f(x) = (1/n) sum_i F_i( (1/m) sum_j G_j(x) ).

Optimizers never call problem methods directly.  They go through the
metered helpers below (:func:`query_value`, :func:`query_jacobian`,
:func:`query_outer_gradient`), each of which validates the oracle output
and charges exactly one unit to an :class:`OracleTally`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """An argument or oracle output has the wrong shape."""


class NonFiniteError(FloatingPointError):
    """An oracle or update produced NaN/Inf."""


@dataclass
class OracleTally:
    """Exact counts of unit-cost oracle queries made during one run."""

    g_value_queries: int = 0
    g_jacobian_queries: int = 0
    f_gradient_queries: int = 0

    def total(self) -> int:
        return self.g_value_queries + self.g_jacobian_queries + self.f_gradient_queries

    def snapshot(self) -> tuple[int, int, int]:
        """(jacobian, value, gradient) counters, for computing deltas."""
        return (self.g_jacobian_queries, self.g_value_queries, self.f_gradient_queries)


class CompositionalProblem:
    """Base class for finite-sum compositional problems.

    Subclasses set ``m, n, p, q`` and implement the three oracles.
    ``outer_value`` and ``direct_objective`` are optional; the latter is
    the free measurement path used for traces.
    """

    m: int
    n: int
    p: int
    q: int

    def inner_value(self, j: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inner_jacobian(self, j: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def outer_gradient(self, i: int, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def outer_value(self, i: int, y: np.ndarray) -> float:
        raise NotImplementedError

    def direct_objective(self, x: np.ndarray) -> float:
        raise NotImplementedError

    @property
    def has_direct_objective(self) -> bool:
        return type(self).direct_objective is not CompositionalProblem.direct_objective

    @property
    def has_outer_value(self) -> bool:
        return type(self).outer_value is not CompositionalProblem.outer_value

    def _check_dims(self) -> None:
        for name in ("m", "n", "p", "q"):
            if int(getattr(self, name)) < 1:
                raise DimensionError(f"{name} must be >= 1, got {getattr(self, name)}")


def _finite(arr, what: str, at=None) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        where = "" if at is None else f" at x={np.array2string(np.asarray(at), precision=6)}"
        raise NonFiniteError(f"non-finite {what}{where}")
    return arr


def check_point(problem: CompositionalProblem, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (problem.p,):
        raise DimensionError(f"expected x of shape ({problem.p},), got {x.shape}")
    return x


def query_value(problem, j, x, tally: OracleTally) -> np.ndarray:
    out = _finite(problem.inner_value(j, x), f"G_{j} value", x)
    if out.shape != (problem.q,):
        raise DimensionError(f"G_{j} returned shape {out.shape}, expected ({problem.q},)")
    tally.g_value_queries += 1
    return out


def query_jacobian(problem, j, x, tally: OracleTally) -> np.ndarray:
    out = _finite(problem.inner_jacobian(j, x), f"G_{j} Jacobian", x)
    if out.shape != (problem.q, problem.p):
        raise DimensionError(
            f"dG_{j} returned shape {out.shape}, expected ({problem.q}, {problem.p})"
        )
    tally.g_jacobian_queries += 1
    return out


def query_outer_gradient(problem, i, y, tally: OracleTally) -> np.ndarray:
    out = _finite(problem.outer_gradient(i, y), f"grad F_{i}", y)
    if out.shape != (problem.q,):
        raise DimensionError(f"grad F_{i} returned shape {out.shape}, expected ({problem.q},)")
    tally.f_gradient_queries += 1
    return out


def average(stack: np.ndarray) -> np.ndarray:
    """Mean over the leading axis, accumulated slot by slot in index order.

    numpy reduces a C-contiguous array along axis 0 by adding whole rows
    sequentially, so the result is reproducible and identical wherever
    the same stack is averaged.
    """
    stack = np.ascontiguousarray(stack, dtype=np.float64)
    return stack.sum(axis=0) / stack.shape[0]


def compose_objective(problem: CompositionalProblem, x, tally: OracleTally | None = None) -> float:
    """Evaluate (1/n) sum_i F_i(G(x)) through the oracles.

    Charges ``m`` inner-value queries; outer values are not part of the
    oracle model and are not charged.
    """
    if not problem.has_outer_value:
        raise NotImplementedError(f"{type(problem).__name__} has no outer_value oracle")
    x = check_point(problem, x)
    tally = OracleTally() if tally is None else tally
    y = average(np.stack([query_value(problem, j, x, tally) for j in range(problem.m)]))
    val = math.fsum(float(problem.outer_value(i, y)) for i in range(problem.n)) / problem.n
    if not math.isfinite(val):
        raise NonFiniteError(f"non-finite objective at x={x}")
    return val


def objective(problem: CompositionalProblem, x) -> float:
    """Measurement-only objective: ``direct_objective`` when available."""
    x = check_point(problem, x)
    if problem.has_direct_objective:
        return float(problem.direct_objective(x))
    return compose_objective(problem, x)


def chain_rule(jac_mean: np.ndarray, grad_mean: np.ndarray) -> np.ndarray:
    return jac_mean.T @ grad_mean


def full_gradient(problem: CompositionalProblem, x, tally: OracleTally | None = None) -> np.ndarray:
    """Exact gradient (dG(x))^T grad F(G(x)); charges (m, m, n) queries."""
    x = check_point(problem, x)
    tally = OracleTally() if tally is None else tally
    jacs = np.stack([query_jacobian(problem, j, x, tally) for j in range(problem.m)])
    vals = np.stack([query_value(problem, j, x, tally) for j in range(problem.m)])
    y = average(vals)
    grads = np.stack([query_outer_gradient(problem, i, y, tally) for i in range(problem.n)])
    return _finite(chain_rule(average(jacs), average(grads)), "gradient", x)


def finite_difference_gradient(problem: CompositionalProblem, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of the measurement objective (uncharged)."""
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    x = check_point(problem, x)
    grad = np.empty(problem.p)
    for k in range(problem.p):
        xp = x.copy()
        xm = x.copy()
        xp[k] += h
        xm[k] -= h
        fp, fm = objective(problem, xp), objective(problem, xm)
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise NonFiniteError(f"non-finite objective near x={x}")
        grad[k] = (fp - fm) / (2 * h)
    return grad


def relative_error(approx: np.ndarray, reference: np.ndarray, floor: float = 1e-12) -> float:
    scale = max(np.linalg.norm(approx), np.linalg.norm(reference), floor)
    return float(np.linalg.norm(approx - reference) / scale)
