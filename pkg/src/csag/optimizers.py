"""C-SAG and the FG / C-SVRG-1 / C-SVRG-2 baselines, all metered.

Every run alternates a full pass at a reference point (2m+n queries)
with ``K`` cheap inner steps.  Per-step query costs:

=========  =============
C-SAG      a + 2
C-SVRG-1   2a + 4
C-SVRG-2   2a + 2b + 2
FG         2m + n
=========  =============
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CompositionalProblem,
    NonFiniteError,
    OracleTally,
    average,
    chain_rule,
    check_point,
    objective,
    query_jacobian,
    query_outer_gradient,
    query_value,
)

DIVERGENCE_THRESHOLD = 1e12


@dataclass
class CsagConfig:
    """Parameters shared by all optimizers.

    ``b`` is the Jacobian mini-batch of C-SVRG-2 (defaults to ``a``).
    ``max_queries`` stops a run once the tally reaches the budget.
    """

    alpha: float = 0.12
    K: int = 20
    a: int = 20
    S: int = 50
    grad_tol: float = 0.0
    seed: int = 0
    b: int | None = None
    max_queries: int | None = None
    record_iterates: bool = False

    def validate(self, problem: CompositionalProblem | None = None) -> None:
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.K < 1 or self.S < 1:
            raise ValueError(f"K and S must be >= 1, got K={self.K}, S={self.S}")
        if self.a < 1 or (self.b is not None and self.b < 1):
            raise ValueError("mini-batch sizes must be >= 1")
        if self.grad_tol < 0:
            raise ValueError("grad_tol must be >= 0")
        if problem is not None and self.a > problem.m:
            raise ValueError(f"mini-batch a={self.a} exceeds m={problem.m}")
        if problem is not None and self.batch_b > problem.m:
            raise ValueError(f"mini-batch b={self.batch_b} exceeds m={problem.m}")

    @property
    def batch_b(self) -> int:
        return self.a if self.b is None else self.b


@dataclass
class TraceRecord:
    epoch: int
    inner_iter: int
    queries: int
    objective: float


@dataclass
class Trace:
    algorithm: str
    records: list[TraceRecord] = field(default_factory=list)
    iterates: list[np.ndarray] = field(default_factory=list)
    x_final: np.ndarray | None = None
    converged: bool = False

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def queries(self) -> np.ndarray:
        return np.array([r.queries for r in self.records], dtype=np.int64)


class DivergenceError(RuntimeError):
    """Objective blew past the divergence threshold; carries the partial trace."""

    def __init__(self, message: str, trace: Trace):
        super().__init__(message)
        self.trace = trace


def initial_point(p: int, seed: int) -> np.ndarray:
    """Seeded standard-Gaussian starting iterate.

    Drawn from a stream separate from the optimizer's index sampling.
    """
    return np.random.default_rng([seed, 1]).standard_normal(p)


class _Recorder:
    def __init__(self, name, problem, config, tally):
        self.trace = Trace(name)
        self.problem = problem
        self.config = config
        self.tally = tally

    def __call__(self, epoch, inner_iter, x):
        f = objective(self.problem, x)
        self.trace.records.append(TraceRecord(epoch, inner_iter, self.tally.total(), f))
        if self.config.record_iterates:
            self.trace.iterates.append(x.copy())
        if not math.isfinite(f) or abs(f) > DIVERGENCE_THRESHOLD:
            self.trace.x_final = x.copy()
            raise DivergenceError(
                f"{self.trace.algorithm}: objective {f:.3e} exceeded {DIVERGENCE_THRESHOLD:.0e} "
                f"at epoch {epoch}, inner step {inner_iter} "
                f"(alpha={self.config.alpha}, K={self.config.K}, a={self.config.a})",
                self.trace,
            )

    def out_of_budget(self) -> bool:
        cap = self.config.max_queries
        return cap is not None and self.tally.total() >= cap


def _step(x, alpha, grad):
    x_new = x - alpha * grad
    if not np.all(np.isfinite(x_new)):
        raise NonFiniteError(f"non-finite update from x={x}")
    return x_new


# ---------------------------------------------------------------------------
# C-SAG


@dataclass
class CsagState:
    """Iterate, reference point, and the J / V / Q memories."""

    x: np.ndarray
    x_ref: np.ndarray
    J: np.ndarray  # m x q x p
    V: np.ndarray  # m x q
    Q: np.ndarray  # n x q
    epoch: int = 0
    inner_iter: int = 0
    ref_grad: np.ndarray | None = None

    @classmethod
    def empty(cls, problem: CompositionalProblem, x_ref) -> "CsagState":
        x_ref = check_point(problem, x_ref).copy()
        m, n, p, q = problem.m, problem.n, problem.p, problem.q
        return cls(
            x=x_ref.copy(),
            x_ref=x_ref,
            J=np.zeros((m, q, p)),
            V=np.zeros((m, q)),
            Q=np.zeros((n, q)),
        )

    def gradient_estimate(self) -> np.ndarray:
        return chain_rule(average(self.J), average(self.Q))


def csag_refresh(state: CsagState, problem, config: CsagConfig, tally: OracleTally) -> CsagState:
    """Refill every memory at ``x_ref`` and take one exact gradient step from it."""
    x_ref = state.x_ref
    for j in range(problem.m):
        state.J[j] = query_jacobian(problem, j, x_ref, tally)
    for j in range(problem.m):
        state.V[j] = query_value(problem, j, x_ref, tally)
    y = average(state.V)
    for i in range(problem.n):
        state.Q[i] = query_outer_gradient(problem, i, y, tally)
    state.ref_grad = state.gradient_estimate()
    state.x = _step(x_ref, config.alpha, state.ref_grad)
    state.epoch += 1
    state.inner_iter = 0
    return state


def sample_indices(rng: np.random.Generator, m: int, n: int, a: int):
    j = int(rng.integers(m))
    batch = rng.choice(m, size=a, replace=False)
    i = int(rng.integers(n))
    return j, batch, i


def csag_inner_step(
    state: CsagState,
    problem,
    config: CsagConfig,
    rng: np.random.Generator,
    tally: OracleTally,
    indices=None,
) -> CsagState:
    """One memory update (J, then V, then Q) followed by the averaged step.

    ``indices`` = (j, batch, i) overrides sampling.
    """
    j, batch, i = sample_indices(rng, problem.m, problem.n, config.a) if indices is None else indices
    x = state.x
    state.J[j] = query_jacobian(problem, j, x, tally)
    for jj in batch:
        state.V[jj] = query_value(problem, int(jj), x, tally)
    state.Q[i] = query_outer_gradient(problem, i, average(state.V), tally)
    state.x = _step(x, config.alpha, state.gradient_estimate())
    state.inner_iter += 1
    return state


def run_csag(problem, config: CsagConfig, x0=None) -> Trace:
    config.validate(problem)
    x0 = initial_point(problem.p, config.seed) if x0 is None else check_point(problem, x0)
    rng = np.random.default_rng(config.seed)
    tally = OracleTally()
    rec = _Recorder("csag", problem, config, tally)
    state = CsagState.empty(problem, x0)
    rec(0, 0, state.x)
    while state.epoch < config.S and not rec.out_of_budget():
        csag_refresh(state, problem, config, tally)
        if np.linalg.norm(state.ref_grad) <= config.grad_tol:
            rec.trace.converged = True
            state.x = state.x_ref
            break
        rec(state.epoch, 0, state.x)
        for _ in range(config.K):
            if rec.out_of_budget():
                break
            csag_inner_step(state, problem, config, rng, tally)
            rec(state.epoch, state.inner_iter, state.x)
        state.x_ref = state.x.copy()
    rec.trace.x_final = state.x_ref.copy()
    return rec.trace


# ---------------------------------------------------------------------------
# full gradient


def fg_step(problem, x, alpha, tally):
    """Exact gradient step; returns (new x, gradient at x)."""
    jacs = np.stack([query_jacobian(problem, j, x, tally) for j in range(problem.m)])
    vals = np.stack([query_value(problem, j, x, tally) for j in range(problem.m)])
    y = average(vals)
    grads = np.stack([query_outer_gradient(problem, i, y, tally) for i in range(problem.n)])
    g = chain_rule(average(jacs), average(grads))
    return _step(x, alpha, g), g


def run_fg(problem, config: CsagConfig, x0=None) -> Trace:
    """Gradient descent grouped into epochs of K+1 steps.

    An epoch spans as many updates as a C-SAG epoch (refresh step plus K
    inner steps), so the two traces line up record for record.
    """
    config.validate()
    x = initial_point(problem.p, config.seed) if x0 is None else check_point(problem, x0).copy()
    tally = OracleTally()
    rec = _Recorder("fg", problem, config, tally)
    rec(0, 0, x)
    for epoch in range(1, config.S + 1):
        for k in range(config.K + 1):
            if rec.out_of_budget():
                break
            x_new, g = fg_step(problem, x, config.alpha, tally)
            if k == 0 and np.linalg.norm(g) <= config.grad_tol:
                rec.trace.converged = True
                break
            x = x_new
            rec(epoch, k, x)
        if rec.trace.converged or rec.out_of_budget():
            break
    rec.trace.x_final = x.copy()
    return rec.trace


# ---------------------------------------------------------------------------
# C-SVRG (Lian, Wang & Liu 2017)


@dataclass
class SvrgReference:
    """Snapshot quantities at the reference point x~."""

    x: np.ndarray
    G: np.ndarray  # (1/m) sum_j G_j(x~)
    J: np.ndarray  # (1/m) sum_j dG_j(x~)
    grad: np.ndarray  # grad f(x~)


def csvrg_reference(problem, x_ref, tally) -> SvrgReference:
    """Full pass at the reference point: m + m + n queries.

    Only the averages are kept; inner steps re-query G_j(x~) and dG_j(x~)
    for their sampled components, which is where the 2a (and 2b) counts
    come from.
    """
    J = average(np.stack([query_jacobian(problem, j, x_ref, tally) for j in range(problem.m)]))
    G = average(np.stack([query_value(problem, j, x_ref, tally) for j in range(problem.m)]))
    grads = np.stack([query_outer_gradient(problem, i, G, tally) for i in range(problem.n)])
    return SvrgReference(x_ref.copy(), G, J, chain_rule(J, average(grads)))


def _estimate_inner_value(problem, ref, x, batch, tally):
    # G~ - (1/A) sum_{j in A} (G_j(x~) - G_j(x)); both terms are charged
    corr = np.zeros(problem.q)
    for j in batch:
        j = int(j)
        g_ref = query_value(problem, j, ref.x, tally)
        corr += g_ref - query_value(problem, j, x, tally)
    return ref.G - corr / len(batch)


def csvrg1_step(problem, ref: SvrgReference, x, config, rng, tally):
    """C-SVRG-1 step, 2a + 4 queries."""
    batch = rng.integers(problem.m, size=config.a)
    G_hat = _estimate_inner_value(problem, ref, x, batch, tally)
    i = int(rng.integers(problem.n))
    j = int(rng.integers(problem.m))
    term = query_jacobian(problem, j, x, tally).T @ query_outer_gradient(problem, i, G_hat, tally)
    term_ref = query_jacobian(problem, j, ref.x, tally).T @ query_outer_gradient(
        problem, i, ref.G, tally
    )
    return _step(x, config.alpha, term - term_ref + ref.grad)


def csvrg2_step(problem, ref: SvrgReference, x, config, rng, tally):
    """C-SVRG-2 step, 2a + 2b + 2 queries."""
    batch = rng.integers(problem.m, size=config.a)
    G_hat = _estimate_inner_value(problem, ref, x, batch, tally)
    jac_batch = rng.integers(problem.m, size=config.batch_b)
    corr = np.zeros((problem.q, problem.p))
    for j in jac_batch:
        j = int(j)
        corr += query_jacobian(problem, j, ref.x, tally) - query_jacobian(problem, j, x, tally)
    J_hat = ref.J - corr / len(jac_batch)
    i = int(rng.integers(problem.n))
    term = J_hat.T @ query_outer_gradient(problem, i, G_hat, tally)
    term_ref = ref.J.T @ query_outer_gradient(problem, i, ref.G, tally)
    return _step(x, config.alpha, term - term_ref + ref.grad)


def _run_svrg(name, step_fn, problem, config: CsagConfig, x0=None) -> Trace:
    config.validate()
    x_ref = initial_point(problem.p, config.seed) if x0 is None else check_point(problem, x0).copy()
    rng = np.random.default_rng(config.seed)
    tally = OracleTally()
    rec = _Recorder(name, problem, config, tally)
    rec(0, 0, x_ref)
    for epoch in range(1, config.S + 1):
        if rec.out_of_budget():
            break
        ref = csvrg_reference(problem, x_ref, tally)
        if np.linalg.norm(ref.grad) <= config.grad_tol:
            rec.trace.converged = True
            break
        rec(epoch, 0, x_ref)
        x = x_ref
        for k in range(1, config.K + 1):
            if rec.out_of_budget():
                break
            x = step_fn(problem, ref, x, config, rng, tally)
            rec(epoch, k, x)
        x_ref = x
    rec.trace.x_final = x_ref.copy()
    return rec.trace


def run_csvrg1(problem, config: CsagConfig, x0=None) -> Trace:
    return _run_svrg("csvrg1", csvrg1_step, problem, config, x0)


def run_csvrg2(problem, config: CsagConfig, x0=None) -> Trace:
    return _run_svrg("csvrg2", csvrg2_step, problem, config, x0)


ALGORITHMS = {
    "csag": run_csag,
    "fg": run_fg,
    "csvrg1": run_csvrg1,
    "csvrg2": run_csvrg2,
}
