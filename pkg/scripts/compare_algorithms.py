"""Portfolio comparison of FG, C-SVRG-1, C-SVRG-2 and C-SAG.

Writes one gap file per (algorithm, seed) plus a summary table.  The
default is the scaled-down setting; ``--full`` uses 2000 time points and
200 assets (the dense Jacobian memory alone is about 640 MB, and the run is long).

    python3 scripts/compare_algorithms.py --out results/compare
"""

import argparse
import logging
from pathlib import Path

from csag import harness
from csag.optimizers import CsagConfig, initial_point


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results/compare")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--budget", type=int, default=60_000)
    ap.add_argument("--full", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    size = dict(n=2000, assets=200, kappa=20.0) if args.full else dict(n=200, assets=20, kappa=20.0)
    budget = args.budget * (100 if args.full else 1)
    algos = ["fg", "csvrg1", "csvrg2", "csag"]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    for seed in range(args.seeds):
        prob = harness.build_problem(harness.ProblemSpec("portfolio", size, seed=seed))
        cfg = CsagConfig(K=20, a=20, S=10**6, seed=seed, max_queries=budget)
        alpha, traces = harness.tune_alpha(prob, algos, cfg, initial_point(prob.p, seed))
        f_star = harness.estimate_optimum(list(traces.values()))
        for name, tr in traces.items():
            stem = f"{args.out}_{name}_seed{seed}"
            harness.write_trace(tr, f"{stem}.trace")
            harness.gap_series(tr, f_star).save(f"{stem}.gap")
        hits = {k: harness.queries_to_gap(t, f_star, 1e-4) for k, t in traces.items()}
        cells = "  ".join(f"{k}={'-' if v is None else v}" for k, v in hits.items())
        print(f"seed {seed}  alpha {alpha:g}  queries to 1e-4: {cells}")


if __name__ == "__main__":
    main()
