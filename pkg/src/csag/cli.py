"""Command-line entry point: ``csag {gen-data,run,sweep,theory,check-grad}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .core import finite_difference_gradient, full_gradient, relative_error
from .optimizers import ALGORITHMS, CsagConfig, DivergenceError, initial_point
from .problems import gen_gaussian_rewards
from .theory import TheoryInputs, batch_terms, theory_report


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("problem")
    g.add_argument("--problem", choices=sorted(harness.PROBLEM_DEFAULTS), default="portfolio")
    g.add_argument("--data", help="reward matrix file (portfolio)")
    g.add_argument("--data-seed", type=int, default=0, help="seed for generated problem data")
    g.add_argument("--n", type=int, help="time points (portfolio) / outer components (toy)")
    g.add_argument("--assets", type=int, help="portfolio assets")
    g.add_argument("--kappa", type=float, help="covariance condition number (portfolio)")
    g.add_argument("--samples", type=int, help="lasso samples")
    g.add_argument("--dim", type=int, help="lasso dimension")
    g.add_argument("--lam", type=float, help="lasso penalty")
    g.add_argument("--eps", type=float, help="lasso smoothing")
    g.add_argument("--states", type=int, help="policy-eval states")
    g.add_argument("--features", type=int, help="policy-eval feature dimension")
    g.add_argument("--gamma", type=float, help="policy-eval discount")
    g.add_argument("--anchor", type=int, help="policy-eval anchor state")
    g.add_argument("--m", type=int, help="toy inner components")
    g.add_argument("--p", type=int, help="toy iterate dimension")
    g.add_argument("--q", type=int, help="toy inner-output dimension")
    g.add_argument("--mu", type=float, help="toy outer regularisation")


_PROBLEM_KEYS = ("n", "assets", "kappa", "samples", "dim", "lam", "eps", "states",
                 "features", "gamma", "anchor", "m", "p", "q", "mu")


def _problem_spec(args) -> harness.ProblemSpec:
    allowed = harness.PROBLEM_DEFAULTS[args.problem]
    params = {}
    for key in _PROBLEM_KEYS:
        val = getattr(args, key)
        if val is None:
            continue
        if key not in allowed:
            raise SystemExit(f"--{key} does not apply to --problem {args.problem}")
        params[key] = val
    return harness.ProblemSpec(args.problem, params, args.data, args.data_seed)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    _add_problem_flags(p)
    g = p.add_argument_group("optimizer")
    g.add_argument("--algo", choices=sorted(ALGORITHMS), default="csag")
    g.add_argument("--alpha", type=float, default=0.12)
    g.add_argument("--K", type=int, default=20)
    g.add_argument("--batch", type=int, default=20)
    g.add_argument("--batch-b", type=int, help="second mini-batch for csvrg2 (default: --batch)")
    g.add_argument("--epochs", type=int, default=50)
    g.add_argument("--grad-tol", type=float, default=0.0)
    g.add_argument("--max-queries", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-prefix", required=True)


def _config(args) -> CsagConfig:
    return CsagConfig(
        alpha=args.alpha, K=args.K, a=args.batch, S=args.epochs, grad_tol=args.grad_tol,
        seed=args.seed, b=args.batch_b, max_queries=args.max_queries,
    )


def cmd_gen_data(args) -> int:
    rewards = gen_gaussian_rewards(args.n, args.assets, args.kappa, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    rewards.save(args.out)
    print(f"wrote {args.n}x{args.assets} rewards (kappa={args.kappa:g}) to {args.out}")
    return 0


def _run_single(args, problem, cfg, prefix) -> int:
    x0 = initial_point(problem.p, cfg.seed)
    try:
        trace = ALGORITHMS[args.algo](problem, cfg, x0)
        status = 0
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        trace, status = exc.trace, 2
    f_star = harness.estimate_optimum([trace])
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    harness.write_trace(trace, f"{prefix}.trace")
    harness.gap_series(trace, f_star).save(f"{prefix}.gap")
    last = trace.records[-1]
    print(f"{args.algo}: {len(trace.records)} records, {last.queries} queries, "
          f"final objective {last.objective:.10g}")
    return status


def cmd_run(args) -> int:
    problem = harness.build_problem(_problem_spec(args))
    cfg = _config(args)
    try:
        cfg.validate(problem if args.algo == "csag" else None)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return _run_single(args, problem, cfg, args.out_prefix)


def cmd_sweep(args) -> int:
    problem = harness.build_problem(_problem_spec(args))
    values = [int(v) for v in args.values.split(",") if v.strip()]
    field = {"K": "K", "batch": "a"}[args.param]
    spec = harness.ExperimentSpec(
        _problem_spec(args), [harness.AlgorithmSpec("csag", _config(args))],
        output_prefix=args.out_prefix,
    )
    try:
        result = harness.sweep(spec, field, values, problem, seed=args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    status = 0
    for v, run in result.runs.items():
        best = min(r.objective for r in run.trace.records) - result.f_star
        tag = "diverged" if run.diverged else "ok"
        print(f"{args.param}={v}: {tag}, {run.trace.records[-1].queries} queries, best gap {best:.3e}")
        status = status or (2 if run.diverged else 0)
    return status


def cmd_theory(args) -> int:
    inp = TheoryInputs(args.mu, args.bg, args.lf, args.m, args.n, args.batch, args.alpha)
    out = theory_report(inp, args.K)
    for key in ("sigma1", "sigma2", "gamma1", "gamma2", "ratio", "a_min",
                "alpha1", "alpha2", "alpha3", "K_min", "K"):
        print(f"{key} = {getattr(out, key):.17g}")
    for key, val in batch_terms(inp).items():
        print(f"{key} = {val:.17g}")
    print(f"vacuous = {str(out.vacuous).lower()}")
    print(f"feasible = {str(out.feasible).lower()}")
    return 0


def cmd_check_grad(args) -> int:
    problem = harness.build_problem(_problem_spec(args))
    rng = np.random.default_rng(args.seed)
    worst, worst_x, worst_abs = -1.0, None, 0.0
    for k in range(args.points):
        if args.at_minimizer:
            if not hasattr(problem, "x_star"):
                raise SystemExit("--at-minimizer needs a problem with a known minimiser (toy)")
            x = problem.x_star
        else:
            x = rng.standard_normal(problem.p)
        g = full_gradient(problem, x)
        fd = finite_difference_gradient(problem, x, args.h)
        err = relative_error(g, fd)
        if err > worst:
            worst, worst_x = err, x
            worst_abs = float(np.linalg.norm(g - fd))
        if args.at_minimizer:
            print(f"gradient norm at minimiser = {np.linalg.norm(g):.3e}")
            print(f"finite-difference gradient norm = {np.linalg.norm(fd):.3e}, h={args.h:g}")
            return 0 if worst_abs <= args.tol else 1
    print(f"max relative error = {worst:.6e} (abs {worst_abs:.3e}) over {k + 1} points, h={args.h:g}")
    print(f"worst point = {np.array2string(worst_x, precision=4)}")
    return 0 if worst <= args.tol else 1


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csag", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic reward matrix")
    p.add_argument("--n", type=int, required=True, help="time points")
    p.add_argument("--assets", type=int, required=True)
    p.add_argument("--kappa", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("run", help="run one optimizer, write trace and gap files")
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="C-SAG over several K or batch values")
    _add_run_flags(p)
    p.add_argument("--param", choices=["K", "batch"], required=True)
    p.add_argument("--values", required=True, help="comma-separated, e.g. 10,20,50,200")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("theory", help="convergence constants and parameter thresholds")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--bg", type=float, required=True)
    p.add_argument("--lf", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--batch", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--K", type=float, help="refresh period (default: just above K_min)")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("check-grad", help="chain-rule gradient vs central differences")
    _add_problem_flags(p)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--at-minimizer", action="store_true", help="check at the toy minimiser")
    p.set_defaults(func=cmd_check_grad)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
