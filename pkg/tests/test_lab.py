import math

import numpy as np
import pytest

from drgfmd.geometry import DomainDescriptor, EntropyMap, EuclideanMap
from drgfmd.netgraph import random_schedule, mixing_bound_check
from drgfmd.objective import LocalObjective, ProblemInstance, nesterov_problem
from drgfmd.solver import AlgorithmConfig, StepSchedule, run, trial_seeds, bound_constants
from drgfmd.lab import (Metric, trial_average, rate_slope, bound_overlay, dominance,
                        run_paper_suite, suite_documents, lemma_bound_fractions)


@pytest.fixture(scope="module")
def setting():
    prob = nesterov_problem(5, 3, np.random.default_rng(7).uniform(0.5, 1.5, 5))
    topo = random_schedule(5, 0.6, 2, 2, np.random.default_rng(7))
    cfg = AlgorithmConfig(EntropyMap(3), StepSchedule.sqrt(1.0), 500, direction_scale=0.5,
                          averaging=("running-mean", "reciprocal"))
    return prob, topo, cfg


def test_single_trial_summary_equals_run(setting):
    prob, topo, cfg = setting
    s = trial_average(prob, topo, cfg, 1, base_seed=4)
    rec = run(prob, topo, cfg, trial_seeds(4, 1)[0])
    np.testing.assert_array_equal(s.mean("gap-running-mean"), rec.gaps["running-mean"])
    np.testing.assert_array_equal(s.mean("consensus-max-pairwise"), rec.consensus)
    np.testing.assert_array_equal(s.stderr("gap-reciprocal"), 0.0)


def test_constant_objective_has_zero_spread(setting):
    _, topo, cfg = setting
    f = LocalObjective(lambda x: np.zeros(x.shape[:-1]), 1.0)
    prob = ProblemInstance([f] * 5, DomainDescriptor.simplex(3),
                           optimum=(0.0, np.full(3, 1 / 3)))
    s = trial_average(prob, topo, cfg, 5, base_seed=0)
    assert np.all(s.stderr("gap-running-mean") == 0.0)
    assert np.all(s.mean("consensus-max-pairwise") == 0.0)


def test_same_base_seed_same_summary(setting):
    prob, topo, cfg = setting
    a = trial_average(prob, topo, cfg, 3, base_seed=8)
    b = trial_average(prob, topo, cfg, 3, base_seed=8)
    assert a.seeds == b.seeds
    for k in a.per_trial:
        assert np.array_equal(a.per_trial[k], b.per_trial[k])


def test_trial_order_does_not_change_means(setting):
    prob, topo, cfg = setting
    s = trial_average(prob, topo, cfg, 4, base_seed=2)
    seeds = trial_seeds(2, 4)
    runs = {sd: run(prob, topo, cfg, sd) for sd in reversed(seeds)}
    stacked = np.stack([runs[sd].gaps["running-mean"] for sd in seeds])
    np.testing.assert_array_equal(stacked.mean(axis=0), s.mean("gap-running-mean"))


def test_gap_metrics_need_optimum(setting):
    _, topo, cfg = setting
    f = LocalObjective(lambda x: x[..., 0], 1.0)
    prob = ProblemInstance([f] * 5, DomainDescriptor.simplex(3))
    with pytest.raises(ValueError, match="optimum"):
        trial_average(prob, topo, cfg, 1, 0, metrics=["gap-running-mean"])
    s = trial_average(prob, topo, cfg, 1, 0)
    assert list(s.per_trial) == ["consensus-max-pairwise"]


def test_abort_is_reported(setting):
    _, topo, cfg = setting
    good = LocalObjective(lambda x: x[..., 0], 1.0)
    bad = LocalObjective(lambda x: x[..., 0] * np.nan, 1.0)
    prob = ProblemInstance([good, bad, good, good, good], DomainDescriptor.simplex(3),
                           optimum=(0.0, None))
    s = trial_average(prob, topo, cfg, 3, 0)
    assert s.per_trial == {} and "agent 1" in s.aborted[0]


def test_n_trials_must_be_positive(setting):
    with pytest.raises(ValueError):
        trial_average(*setting, 0, 0)


# -- rate fits

def test_slope_of_exact_power_law():
    t = np.arange(1, 10_001, dtype=float)
    slope, intercept, r2 = rate_slope((t, t ** -0.5), 100, 1e4)
    assert abs(slope + 0.5) <= 1e-9 and abs(intercept) <= 1e-8 and r2 == pytest.approx(1)


def test_slope_of_log_over_t():
    t = np.unique(np.geomspace(100, 1e4, 200).round())
    slope, _, _ = rate_slope(list(zip(t, np.log(t) / t)), 100, 1e4)
    assert -1.0 < slope < -0.85


def test_slope_of_constant_series():
    t = np.arange(1.0, 50.0)
    assert rate_slope(Metric("gap-running-mean", t, np.full(t.shape, 3.0)), 1, 50)[0] \
        == pytest.approx(0.0, abs=1e-12)


def test_slope_skips_nonpositive_values():
    t = np.arange(1.0, 101.0)
    v = t ** -1.0
    v[::3] = 0.0
    assert rate_slope((t, v), 1, 100)[0] == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(ValueError):
        rate_slope((t, np.zeros_like(t)), 1, 100)
    with pytest.raises(ValueError):
        rate_slope((t, v), 1, 5)


# -- bound overlay

def test_overlay_matches_theorem3_formula(setting):
    prob, topo, cfg = setting
    s = trial_average(prob, topo, cfg, 2, 0)
    bc = bound_constants(cfg, prob, mixing_bound_check(topo, 200))
    ov = bound_overlay(s, bc)
    np.testing.assert_allclose(ov.values, bc.constants["B1"]
                               + bc.constants["C1"] / np.sqrt(s.t), rtol=1e-12)
    assert dominance(s.metric("gap-running-mean"), ov) == 0.0


def test_overlay_rejects_other_config(setting):
    prob, topo, cfg = setting
    s = trial_average(prob, topo, cfg, 1, 0)
    other = AlgorithmConfig(EntropyMap(3), StepSchedule.sqrt(2.0), 500)
    with pytest.raises(ValueError, match="different configuration"):
        bound_overlay(s, bound_constants(other, prob, mixing_bound_check(topo, 50)))


def test_dominance_fraction():
    t = np.arange(1, 5)
    assert dominance(Metric("g", t, np.array([1, 2, 3, 4.0])),
                     Metric("b", t, np.array([2, 2, 2, 2.0]))) == 0.5


def test_lemma_fractions(setting):
    prob, topo, cfg = setting
    s = trial_average(prob, topo, cfg, 5, 0)
    f5, f6 = lemma_bound_fractions(s, prob, cfg, mixing_bound_check(topo, 200))
    assert f5 >= 0.95 and f6 >= 0.95


# -- suites

def test_unknown_suite(tmp_path):
    with pytest.raises(ValueError):
        run_paper_suite("figure-9", tmp_path)


def test_suite_documents_tags():
    assert [d[0] for d in suite_documents("dimension-sweep")] == ["n=1", "n=3", "n=6"]
    assert [d[0] for d in suite_documents("delta-sweep")] == \
        ["delta=0.3", "delta=0.4", "delta=0.5"]


def test_small_suite_writes_tagged_files(tmp_path):
    res = run_paper_suite("delta-sweep", tmp_path, n_trials=2, horizon=150)
    names = sorted(p.name for p in res.files)
    assert names == sorted(f"delta-sweep_delta={d}.{ext}" for d in (0.3, 0.4, 0.5)
                           for ext in ("csv", "svg"))
    assert all(s.tags["theorem"] == "theorem-6" for s in res.summaries)


def test_strongly_convex_suite_is_labeled(tmp_path):
    res = run_paper_suite("strongly-convex", tmp_path, n_trials=1, horizon=100)
    svg = (tmp_path / "strongly-convex_drgfmd.svg").read_text()
    assert "invented instance" in svg
    assert [s.tags["theorem"] for s in res.summaries] == ["theorem-4", "theorem-7"]
