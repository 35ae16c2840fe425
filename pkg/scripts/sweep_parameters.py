"""C-SAG sensitivity to the refresh period K and the mini-batch size a.

    python3 scripts/sweep_parameters.py --out results/sweep
"""

import argparse
import logging

from csag import harness
from csag.optimizers import CsagConfig, initial_point


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results/sweep")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--budget", type=int, default=60_000)
    ap.add_argument("--K-values", default="10,20,50,200")
    ap.add_argument("--a-values", default="1,10,20,50")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    pspec = harness.ProblemSpec("portfolio", dict(n=200, assets=20, kappa=20.0), seed=args.seed)
    prob = harness.build_problem(pspec)
    base = CsagConfig(K=20, a=20, S=10**6, seed=args.seed, max_queries=args.budget)
    alpha, _ = harness.tune_alpha(prob, ["csag"], base, initial_point(prob.p, args.seed))
    print(f"step size {alpha:g}")
    cfg = CsagConfig(alpha=alpha, K=20, a=20, S=10**6, max_queries=args.budget)
    for param, values in (("K", args.K_values), ("a", args.a_values)):
        spec = harness.ExperimentSpec(pspec, [harness.AlgorithmSpec("csag", cfg)], output_prefix=args.out)
        res = harness.sweep(spec, param, [int(v) for v in values.split(",")], problem=prob, seed=args.seed)
        for v, run in res.runs.items():
            best = min(run.trace.objectives) - res.f_star
            early = harness.gap_at_budget(run.trace, res.f_star, args.budget // 4)
            status = "diverged" if run.diverged else "ok"
            print(f"{param}={v:<4} {status:9} gap at 25% budget {early:.2e}  best gap {best:.2e}")


if __name__ == "__main__":
    main()
