"""Experiment orchestration: comparisons, gap series, and parameter sweeps."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .optimizers import ALGORITHMS, CsagConfig, DivergenceError, Trace, initial_point
from .problems import (
    RewardMatrix,
    gen_gaussian_rewards,
    make_lasso,
    make_policy_eval,
    make_portfolio,
    make_toy_quadratic,
    random_lasso,
    random_mdp,
)

log = logging.getLogger(__name__)

GAP_THRESHOLDS = (1e-2, 1e-4, 1e-6)


@dataclass
class ProblemSpec:
    """Which problem to build.  ``data`` is a reward file for portfolio."""

    kind: str = "portfolio"
    params: dict = field(default_factory=dict)
    data: str | None = None
    seed: int = 0


PROBLEM_DEFAULTS = {
    "portfolio": dict(n=200, assets=20, kappa=20.0),
    "lasso": dict(samples=50, dim=10, lam=0.1, eps=1e-4),
    "policy": dict(states=10, features=5, gamma=0.9, anchor=0),
    "toy": dict(m=4, n=4, p=3, q=3, mu=0.5),
}


def build_problem(spec: ProblemSpec):
    if spec.kind not in PROBLEM_DEFAULTS:
        raise ValueError(f"unknown problem kind {spec.kind!r}")
    prm = {**PROBLEM_DEFAULTS[spec.kind], **spec.params}
    if spec.kind == "portfolio":
        if spec.data is not None:
            rewards = RewardMatrix.load(spec.data)
        else:
            rewards = gen_gaussian_rewards(prm["n"], prm["assets"], prm["kappa"], spec.seed)
        return make_portfolio(rewards)
    if spec.kind == "lasso":
        return make_lasso(random_lasso(prm["samples"], prm["dim"], prm["lam"], prm["eps"], spec.seed))
    if spec.kind == "policy":
        mdp = random_mdp(prm["states"], prm["features"], prm["gamma"], spec.seed)
        return make_policy_eval(mdp, prm["anchor"])
    return make_toy_quadratic(prm["m"], prm["n"], prm["p"], prm["q"], prm["mu"], spec.seed)


@dataclass
class AlgorithmSpec:
    name: str
    config: CsagConfig = field(default_factory=CsagConfig)

    def __post_init__(self):
        if self.name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.name!r}; choose from {sorted(ALGORITHMS)}")


@dataclass
class ExperimentSpec:
    problem: ProblemSpec
    algorithms: list[AlgorithmSpec]
    repetitions: int = 1
    output_prefix: str | None = None

    def __post_init__(self):
        if not self.algorithms:
            raise ValueError("an experiment needs at least one algorithm")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


@dataclass
class GapSeries:
    queries: np.ndarray
    log10_gap: np.ndarray
    f_star: float
    dropped: int

    def save(self, path) -> None:
        rows = ["queries log10_gap"]
        rows += [f"{q} {g:.17g}" for q, g in zip(self.queries, self.log10_gap)]
        Path(path).write_text("\n".join(rows) + "\n")

    @classmethod
    def load(cls, path, f_star: float = math.nan) -> "GapSeries":
        data = np.loadtxt(path, skiprows=1, ndmin=2)
        return cls(data[:, 0].astype(np.int64), data[:, 1], f_star, 0)


def estimate_optimum(traces: list[Trace]) -> float:
    """Smallest objective recorded anywhere in the comparison."""
    if not traces or not any(t.records for t in traces):
        raise ValueError("need at least one non-empty trace")
    return min(r.objective for t in traces for r in t.records)


def gap_series(trace: Trace, f_star: float) -> GapSeries:
    """log10(f - f*) against cumulative queries; non-positive gaps are dropped.

    Records that repeat the previous query count (the starting point) are
    collapsed onto the later record, keeping queries strictly increasing.
    """
    if not math.isfinite(f_star):
        raise ValueError("f_star must be finite")
    qs, gs, dropped = [], [], 0
    for r in trace.records:
        gap = r.objective - f_star
        if gap <= 0:
            dropped += 1
            continue
        if qs and r.queries <= qs[-1]:
            qs.pop()
            gs.pop()
        qs.append(r.queries)
        gs.append(math.log10(gap))
    return GapSeries(np.array(qs, dtype=np.int64), np.array(gs), f_star, dropped)


def queries_to_gap(trace: Trace, f_star: float, threshold: float) -> int | None:
    """First cumulative query count at which f - f* <= threshold."""
    for r in trace.records:
        if r.objective - f_star <= threshold:
            return r.queries
    return None


def gap_at_budget(trace: Trace, f_star: float, budget: int) -> float:
    """Gap of the last record whose query count does not exceed ``budget``."""
    best = None
    for r in trace.records:
        if r.queries > budget:
            break
        best = r
    if best is None:
        return math.inf
    return best.objective - f_star


@dataclass
class RunResult:
    algorithm: str
    seed: int
    trace: Trace
    error: str | None = None

    @property
    def diverged(self) -> bool:
        return self.error is not None


def _run_one(problem, algo: AlgorithmSpec, seed: int, x0) -> RunResult:
    cfg = replace(algo.config, seed=seed)
    try:
        trace = ALGORITHMS[algo.name](problem, cfg, x0)
        return RunResult(algo.name, seed, trace)
    except DivergenceError as exc:
        log.warning("%s", exc)
        return RunResult(algo.name, seed, exc.trace, str(exc))


@dataclass
class ExperimentResult:
    runs: list[RunResult]
    f_star: float
    gaps: dict[tuple[str, int], GapSeries]
    summary: list[tuple[str, int, float, int | None]]


def run_experiment(spec: ExperimentSpec, problem=None) -> ExperimentResult:
    """Run every algorithm for every repetition from a shared starting point.

    Repetition ``r`` uses seed ``problem.seed + r`` for both the starting
    iterate and the optimizers' sampling.  Divergent runs are kept (with
    their partial traces) and reported, not raised.
    """
    problem = build_problem(spec.problem) if problem is None else problem
    runs = []
    for rep in range(spec.repetitions):
        seed = spec.problem.seed + rep
        x0 = initial_point(problem.p, seed)
        for algo in spec.algorithms:
            runs.append(_run_one(problem, algo, seed, x0))
    f_star = estimate_optimum([r.trace for r in runs])
    gaps = {(r.algorithm, r.seed): gap_series(r.trace, f_star) for r in runs}
    summary = [
        (r.algorithm, r.seed, thr, queries_to_gap(r.trace, f_star, thr))
        for r in runs
        for thr in GAP_THRESHOLDS
    ]
    result = ExperimentResult(runs, f_star, gaps, summary)
    if spec.output_prefix is not None:
        write_experiment(result, spec.output_prefix)
    return result


def write_trace(trace: Trace, path) -> None:
    rows = ["epoch inner_iter queries objective"]
    rows += [f"{r.epoch} {r.inner_iter} {r.queries} {r.objective:.17g}" for r in trace.records]
    Path(path).write_text("\n".join(rows) + "\n")


def write_summary(summary, path) -> None:
    rows = ["algorithm seed threshold queries"]
    for name, seed, thr, q in summary:
        rows.append(f"{name} {seed} {thr:g} {'unreached' if q is None else q}")
    Path(path).write_text("\n".join(rows) + "\n")


def write_experiment(result: ExperimentResult, prefix: str) -> list[Path]:
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    written = []
    for run in result.runs:
        stem = f"{prefix}_{run.algorithm}_seed{run.seed}"
        write_trace(run.trace, f"{stem}.trace")
        result.gaps[(run.algorithm, run.seed)].save(f"{stem}.gap")
        written += [Path(f"{stem}.trace"), Path(f"{stem}.gap")]
    write_summary(result.summary, f"{prefix}_summary.txt")
    written.append(Path(f"{prefix}_summary.txt"))
    return written


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepResult:
    param: str
    runs: dict  # value -> RunResult
    f_star: float
    gaps: dict  # value -> GapSeries


def sweep(spec: ExperimentSpec, param: str, values, problem=None, seed: int | None = None) -> SweepResult:
    """Run C-SAG once per value of ``param`` ("K" or "a") from a shared start.

    All other settings come from the first algorithm spec; ``seed``
    defaults to the problem seed.
    """
    if param not in ("K", "a"):
        raise ValueError(f"can only sweep K or a, not {param!r}")
    problem = build_problem(spec.problem) if problem is None else problem
    base = spec.algorithms[0].config
    seed = spec.problem.seed if seed is None else seed
    x0 = initial_point(problem.p, seed)
    runs = {}
    for v in values:
        cfg = replace(base, **{param: int(v)})
        cfg.validate(problem)
        runs[v] = _run_one(problem, AlgorithmSpec("csag", cfg), seed, x0)
    f_star = estimate_optimum([r.trace for r in runs.values()])
    gaps = {v: gap_series(r.trace, f_star) for v, r in runs.items()}
    result = SweepResult(param, runs, f_star, gaps)
    if spec.output_prefix is not None:
        Path(spec.output_prefix).parent.mkdir(parents=True, exist_ok=True)
        for v, r in runs.items():
            stem = f"{spec.output_prefix}_{param}{v}"
            write_trace(r.trace, f"{stem}.trace")
            gaps[v].save(f"{stem}.gap")
    return result


def sweep_K(spec: ExperimentSpec, K_values, problem=None) -> SweepResult:
    return sweep(spec, "K", K_values, problem)


def sweep_batch(spec: ExperimentSpec, a_values, problem=None) -> SweepResult:
    return sweep(spec, "a", a_values, problem)


def tune_alpha(problem, algorithms, config: CsagConfig, x0, start: float = 0.12, min_alpha: float = 1e-8):
    """Halve the shared step size until no algorithm diverges."""
    alpha = start
    while alpha >= min_alpha:
        cfg = replace(config, alpha=alpha)
        traces = {}
        for name in algorithms:
            try:
                traces[name] = ALGORITHMS[name](problem, cfg, x0)
            except DivergenceError:
                break
        else:
            return alpha, traces
        alpha /= 2
    raise RuntimeError(f"every step size down to {min_alpha} diverged")
