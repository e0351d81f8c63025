"""
Experiment orchestration: multi-trial averaging, rate fits, bound overlays
and the reproduction suites.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from pathlib import Path

import numpy as np

from .solver import (RunAborted, UnsupportedBound, simulate, trial_seeds,
                     bound_constants, projection_error_bound, disagreement_bound)


GAP_KINDS = {"running-mean": "gap-running-mean", "reciprocal": "gap-reciprocal",
             "alpha-weighted": "gap-alpha-weighted"}
SUITES = ("convergence-consensus", "dimension-sweep", "delta-sweep",
          "algorithm-comparison", "strongly-convex")


@dataclass
class Metric:
    kind: str
    t: np.ndarray
    values: np.ndarray


@dataclass(eq=False)
class TrialSummary:
    label: str
    fingerprint: str
    config: dict
    n_trials: int
    seeds: list
    t: np.ndarray
    per_trial: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    aborted: list = field(default_factory=list)
    tags: dict = field(default_factory=dict)
    primary: str | None = None
    bound: Metric | None = None
    constants: object = None

    def mean(self, kind):
        return self.per_trial[kind].mean(axis=0)

    def stderr(self, kind):
        v = self.per_trial[kind]
        if v.shape[0] < 2:
            return np.zeros(v.shape[1:])
        return v.std(axis=0, ddof=1) / math.sqrt(v.shape[0])

    def metric(self, kind):
        return Metric(kind, self.t, self.mean(kind))

    def terminal(self, kind=None):
        return float(self.mean(kind or self.primary)[-1])


def trial_average(problem, topology, config, n_trials, base_seed, metrics=None,
                  label=""):
    """
    Run ``n_trials`` independent trials; trial k uses seed mix_seed(base_seed, k).
    A trial abort discards all results and records the diagnostic.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    gap_modes = [m for m in config.averaging]
    if metrics is not None:
        wanted = list(metrics)
        if problem.f_star is None and any(k.startswith("gap") for k in wanted):
            raise ValueError("gap metrics need a problem with a known optimum")
    else:
        wanted = ([GAP_KINDS[m] for m in gap_modes] if problem.f_star is not None
                  else []) + ["consensus-max-pairwise"]
    seeds = trial_seeds(base_seed, n_trials)
    summary = TrialSummary(label, config.fingerprint(), config.snapshot(), n_trials,
                           seeds, config.checkpoint_times())
    try:
        batch = simulate(problem, topology, config, seeds)
    except RunAborted as exc:
        summary.aborted.append(str(exc))
        return summary
    for m in gap_modes:
        if GAP_KINDS[m] in wanted:
            summary.per_trial[GAP_KINDS[m]] = batch.gaps[m]
    if "consensus-max-pairwise" in wanted:
        summary.per_trial["consensus-max-pairwise"] = batch.consensus
    summary.extras["proj_error"] = batch.proj_error
    summary.extras["disagreement"] = batch.disagreement
    summary.extras["averages"] = batch.averages
    return summary


def rate_slope(series, t_min, t_max):
    """
    Least-squares slope of log(value) against log(t) on [t_min, t_max].

    ``series`` is a Metric, a ``(t, values)`` pair of arrays or a sequence of
    ``(t, value)`` points. Non-positive values are skipped. Returns
    (slope, intercept, r^2).
    """
    if isinstance(series, Metric):
        t, v = series.t, series.values
    elif isinstance(series, tuple) and len(series) == 2 and np.ndim(series[0]) == 1:
        t, v = series
    else:
        t, v = zip(*series)
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    window = (t >= t_min) & (t <= t_max)
    if window.sum() < 10:
        raise ValueError("need at least 10 checkpoints in the window")
    keep = window & (v > 0) & np.isfinite(v)
    if keep.sum() < 2:
        raise ValueError("no positive values to fit")
    lx, ly = np.log(t[keep]), np.log(v[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = ((ly - ly.mean()) ** 2).sum()
    r2 = 1.0 - (resid ** 2).sum() / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def bound_overlay(summary, constants):
    if summary.fingerprint != constants.fingerprint:
        raise ValueError("bound constants were computed for a different configuration")
    return Metric("bound-overlay", summary.t, constants.curve(summary.t))


def dominance(empirical, overlay):
    """Fraction of checkpoints where the empirical mean exceeds the overlay."""
    e, b = np.asarray(empirical.values), np.asarray(overlay.values)
    ok = np.isfinite(b)
    if not ok.any():
        raise ValueError("overlay has no finite points")
    return float(np.mean(e[ok] > b[ok]))


def lemma_bound_fractions(summary, problem, config, certificate):
    """
    Fraction of (checkpoint, agent) pairs where the trial-mean projection error
    and disagreement lie below their expectation bounds.
    """
    t = summary.t
    pe = summary.extras["proj_error"].mean(axis=0)
    dis = summary.extras["disagreement"].mean(axis=0)
    pb = projection_error_bound(t, problem, config)
    db = disagreement_bound(t, problem, config, certificate)
    return (float(np.mean(pe <= pb[:, None])), float(np.mean(dis <= db[:, None])))


# -- reproduction suites ------------------------------------------------------

@dataclass
class SuiteResult:
    suite: str
    summaries: list
    files: list
    experiments: list = field(default_factory=list)


def suite_documents(which):
    """Experiment documents (overrides of the config defaults) of one suite."""
    if which not in SUITES:
        raise ValueError(f"unknown suite {which!r}")
    if which == "convergence-consensus":
        return [("n=3", {"problem.n": 3, "algorithm.averaging": "running-mean,reciprocal"},
                 "gap-running-mean")]
    if which == "dimension-sweep":
        return [(f"n={n}", {"problem.n": n,
                            "algorithm.averaging": "running-mean,reciprocal"},
                 "gap-running-mean") for n in (1, 3, 6)]
    if which == "delta-sweep":
        return [(f"delta={d}", {"problem.n": 3, "algorithm.schedule": "power",
                                "algorithm.rho": 1.0, "algorithm.delta": d,
                                "algorithm.averaging": "reciprocal"},
                 "gap-reciprocal") for d in (0.3, 0.4, 0.5)]
    if which == "algorithm-comparison":
        return [("drgfmd", {"problem.n": 2,
                            "algorithm.averaging": "running-mean,reciprocal"},
                 "gap-running-mean"),
                ("dgfp", {"problem.n": 2, "algorithm.variant": "dgfp",
                          "map.kind": "euclidean",
                          "algorithm.averaging": "alpha-weighted"},
                 "gap-alpha-weighted")]
    common = {"problem.kind": "strongly-convex", "problem.n": 3,
              "problem.sigma_f": 1.0, "problem.anchors": "center",
              "map.kind": "euclidean"}
    return [("drgfmd", dict(common, **{"algorithm.schedule": "strongly-convex",
                                       "algorithm.estimator_site": "x",
                                       "algorithm.averaging": "running-mean"}),
             "gap-running-mean"),
            ("drgfmd-prime", dict(common, **{"algorithm.schedule": "scaled-harmonic",
                                             "algorithm.variant": "drgfmd-prime",
                                             "algorithm.averaging": "reciprocal"}),
             "gap-reciprocal")]


def run_experiment(experiment, label="", primary=None, with_bound=True):
    """Trial-average one built experiment and attach its bound overlay."""
    from .netgraph import mixing_bound_check
    summary = trial_average(experiment.problem, experiment.topology,
                            experiment.algorithm, experiment.n_trials,
                            experiment.base_seed, label=label)
    summary.primary = primary or next(iter(summary.per_trial), None)
    # the alpha-weighted average is the comparison method's; no overlay applies
    if (with_bound and not summary.aborted and experiment.problem.f_star is not None
            and summary.primary != "gap-alpha-weighted"):
        cert = mixing_bound_check(experiment.topology, horizon=200)
        try:
            constants = bound_constants(experiment.algorithm, experiment.problem, cert)
        except UnsupportedBound as exc:
            summary.tags["bound"] = f"unavailable: {exc}"
        else:
            summary.bound = bound_overlay(summary, constants)
            summary.constants = constants
            summary.tags["theorem"] = constants.theorem
    return summary


def run_paper_suite(which, out_dir, n_trials=None, base_seed=None, horizon=None,
                    write=True):
    """
    Run a reproduction suite and write one CSV and one SVG per summary into
    ``out_dir``.
    """
    from .config import build, normalize
    from .export import write_csv, write_svg
    out = Path(out_dir)
    summaries, files, experiments = [], [], []
    for tag, overrides, primary in suite_documents(which):
        doc = dict(overrides)
        if n_trials is not None:
            doc["trials.count"] = n_trials
        if base_seed is not None:
            doc["trials.base_seed"] = base_seed
        if horizon is not None:
            doc["algorithm.T"] = horizon
        doc = normalize(doc)
        experiment = build(doc)
        summary = run_experiment(experiment, label=tag, primary=primary)
        summary.tags.update({"suite": which, "tag": tag,
                             "experiment_fingerprint": experiment.fingerprint})
        summaries.append(summary)
        experiments.append(experiment)
        if write:
            out.mkdir(parents=True, exist_ok=True)
            stem = f"{which}_{tag}"
            files.append(write_csv(out / f"{stem}.csv", summary, which,
                                   experiment.fingerprint))
            title = f"{which} ({tag})"
            if which == "strongly-convex":
                title += ", invented instance"
            files.append(write_svg(out / f"{stem}.svg", summary, title=title))
    return SuiteResult(which, summaries, files, experiments)
