import math

import numpy as np
import pytest

from csag import harness
from csag.harness import (
    AlgorithmSpec,
    ExperimentSpec,
    GapSeries,
    ProblemSpec,
    estimate_optimum,
    gap_at_budget,
    gap_series,
    queries_to_gap,
    run_experiment,
    sweep_batch,
    sweep_K,
)
from csag.optimizers import CsagConfig, Trace, TraceRecord, run_fg


def _trace(objs, start=0, step=10):
    return Trace("x", [TraceRecord(0, k, start + step * k, f) for k, f in enumerate(objs)])


def test_optimum_is_global_minimum():
    assert estimate_optimum([_trace([5, 3, 1]), _trace([4, 2])]) == 1
    t = _trace([5, 3, 1])
    assert estimate_optimum([t, t]) == estimate_optimum([t])
    with pytest.raises(ValueError):
        estimate_optimum([])


def test_gap_series_basic():
    s = gap_series(Trace("x", [TraceRecord(0, 0, 100, 3.0)]), 2.0)
    assert list(s.queries) == [100] and list(s.log10_gap) == [0.0]
    s = gap_series(_trace([3.0, 2.0]), 2.0)
    assert s.dropped == 1 and len(s.queries) == 1
    with pytest.raises(ValueError):
        gap_series(_trace([1.0]), math.nan)


def test_gap_series_queries_strictly_increase():
    tr = Trace("x", [TraceRecord(0, 0, 0, 9.0), TraceRecord(0, 1, 0, 8.0), TraceRecord(0, 2, 5, 7.0)])
    s = gap_series(tr, 0.0)
    assert list(s.queries) == [0, 5]
    assert s.log10_gap[0] == pytest.approx(math.log10(8.0))


def test_gap_file_round_trip(tmp_path):
    s = GapSeries(np.array([1, 5, 9]), np.array([0.5, -1.25, -3.0]), 0.0, 0)
    s.save(tmp_path / "g.gap")
    assert (tmp_path / "g.gap").read_text().splitlines()[0] == "queries log10_gap"
    back = GapSeries.load(tmp_path / "g.gap")
    assert list(back.queries) == [1, 5, 9]
    np.testing.assert_array_equal(back.log10_gap, s.log10_gap)


def test_queries_to_gap_and_budget():
    tr = _trace([10.0, 1.0, 0.1, 0.001])
    assert queries_to_gap(tr, 0.0, 1.0) == 10
    assert queries_to_gap(tr, 0.0, 1e-2) == 30
    assert queries_to_gap(tr, 0.0, 1e-6) is None
    assert gap_at_budget(tr, 0.0, 25) == 0.1
    assert gap_at_budget(_trace([1.0], start=50), 0.0, 10) == math.inf


def test_fg_gap_series_is_affine_on_toy():
    prob = harness.build_problem(ProblemSpec("toy", seed=3))
    tr = run_fg(prob, CsagConfig(alpha=0.2, K=9, S=4))
    assert estimate_optimum([tr]) >= prob.f_star * (1 - 1e-15)
    s = gap_series(tr, prob.f_star)
    slopes = np.diff(s.log10_gap[15:35])
    assert np.all(slopes < 0)
    assert np.ptp(slopes) <= 1e-2 * abs(slopes.mean())


def _spec(tmp_path=None, reps=2):
    cfg = CsagConfig(alpha=0.02, K=5, a=2, S=5)
    algos = [AlgorithmSpec(name, cfg) for name in ("fg", "csvrg1", "csvrg2", "csag")]
    prefix = None if tmp_path is None else str(tmp_path / "out" / "cmp")
    return ExperimentSpec(ProblemSpec("toy", seed=4), algos, repetitions=reps, output_prefix=prefix)


def test_experiment_outputs(tmp_path):
    res = run_experiment(_spec(tmp_path))
    files = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert len([f for f in files if f.endswith(".gap")]) == 8
    assert "cmp_summary.txt" in files
    assert "cmp_csag_seed5.gap" in files
    # all algorithms of a repetition start from the same point
    for seed in (4, 5):
        firsts = {r.trace.records[0].objective for r in res.runs if r.seed == seed}
        assert len(firsts) == 1
    assert all(res.f_star <= r.objective for run in res.runs for r in run.trace.records)
    lines = (tmp_path / "out" / "cmp_summary.txt").read_text().splitlines()
    assert lines[0] == "algorithm seed threshold queries"
    assert len(lines) == 1 + 8 * 3


def test_summary_is_reproducible():
    a, b = run_experiment(_spec()), run_experiment(_spec())
    assert a.summary == b.summary


def test_queries_to_gap_monotone_in_threshold():
    res = run_experiment(_spec())
    by_run = {}
    for name, seed, thr, q in res.summary:
        by_run.setdefault((name, seed), {})[thr] = q
    for thr in by_run.values():
        reached = [thr[t] for t in sorted(thr, reverse=True)]
        for loose, tight in zip(reached, reached[1:]):
            if tight is not None:
                assert loose is not None and loose <= tight


def test_single_algorithm_optimum_is_own_minimum():
    spec = ExperimentSpec(ProblemSpec("toy"), [AlgorithmSpec("csag", CsagConfig(alpha=0.02, K=5, a=2, S=3))])
    res = run_experiment(spec)
    assert res.f_star == min(res.runs[0].trace.objectives)


def test_divergent_run_is_recorded_not_raised():
    spec = ExperimentSpec(
        ProblemSpec("toy"),
        [AlgorithmSpec("csag", CsagConfig(alpha=50.0, K=20, a=2, S=20)),
         AlgorithmSpec("fg", CsagConfig(alpha=0.01, K=5, S=2))],
    )
    res = run_experiment(spec)
    assert res.runs[0].diverged and not res.runs[1].diverged


def test_sweeps(tmp_path):
    spec = ExperimentSpec(
        ProblemSpec("toy", params=dict(m=6), seed=1),
        [AlgorithmSpec("csag", CsagConfig(alpha=0.02, K=5, a=2, S=3))],
        output_prefix=str(tmp_path / "sw"),
    )
    res = sweep_K(spec, [2, 5])
    assert set(res.runs) == {2, 5}
    assert (tmp_path / "sw_K2.gap").exists() and (tmp_path / "sw_K5.trace").exists()
    res = sweep_batch(spec, [1, 6])
    deltas = set(np.diff(res.runs[6].trace.queries)) - {2 * 6 + 4}
    assert deltas == {6 + 2}
    with pytest.raises(ValueError):
        sweep_batch(spec, [7])
    with pytest.raises(ValueError):
        harness.sweep(spec, "alpha", [1])


def test_tune_alpha_halves_until_stable():
    prob = harness.build_problem(ProblemSpec("toy"))
    cfg = CsagConfig(K=20, a=2, S=10)
    alpha, traces = harness.tune_alpha(prob, ["csag", "fg"], cfg, np.zeros(prob.p), start=64.0)
    assert alpha < 64.0 and set(traces) == {"csag", "fg"}
    assert math.log2(64.0 / alpha) == int(math.log2(64.0 / alpha))


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(ProblemSpec(), [])
    with pytest.raises(ValueError):
        ExperimentSpec(ProblemSpec(), [AlgorithmSpec("fg")], repetitions=0)
    with pytest.raises(ValueError):
        AlgorithmSpec("adam")
    with pytest.raises(ValueError):
        harness.build_problem(ProblemSpec("nope"))


@pytest.mark.parametrize("kind", sorted(harness.PROBLEM_DEFAULTS))
def test_build_every_problem(kind):
    prob = harness.build_problem(ProblemSpec(kind, seed=2))
    assert prob.m >= 1 and prob.n >= 1
