"""
Flat ``key = value`` experiment documents.

Lines hold ``section.key = value``; ``#`` starts a comment. Every key has a
default, unknown keys are rejected, and every value is checked with an error
naming its key. The normalized document hashes to a stable fingerprint that
is embedded in every output file.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import EntropyMap, EuclideanMap, DomainDescriptor
from .netgraph import random_schedule
from .objective import nesterov_problem, strongly_convex_problem
from .solver import AlgorithmConfig, StepSchedule, fingerprint, AVERAGING


class ConfigError(ValueError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


DEFAULTS = {
    "problem.kind": "nesterov",
    "problem.n": 3,
    "problem.N": 5,
    "problem.c_seed": 2024,
    "problem.c": "",
    "problem.sigma_f": 1.0,
    "problem.anchors": "center",
    "problem.optimum": "auto",
    "network.radius": 0.6,
    "network.B": 1,
    "network.period": 1,
    "network.graph_seed": 7,
    "map.kind": "entropy",
    "map.epsilon": 1e-12,
    "oracle.mu": 1e-4,
    "oracle.direction_scale": 0.5,
    "algorithm.variant": "drgfmd",
    "algorithm.estimator_site": "y",
    "algorithm.schedule": "sqrt",
    "algorithm.eta": 1.0,
    "algorithm.rho": 1.0,
    "algorithm.delta": 0.5,
    "algorithm.averaging": "running-mean,reciprocal,alpha-weighted",
    "algorithm.T": 10_000,
    "algorithm.tracked_node": 0,
    "trials.count": 30,
    "trials.base_seed": 1,
    "output.directory": "out",
    "output.checkpoints": "thinned",
}

_CHOICES = {
    "problem.kind": ("nesterov", "strongly-convex"),
    "problem.optimum": ("auto", "none"),
    "map.kind": ("euclidean", "entropy"),
    "algorithm.variant": ("drgfmd", "drgfmd-prime", "dgfp"),
    "algorithm.estimator_site": ("y", "x"),
    "algorithm.schedule": ("sqrt", "strongly-convex", "power", "scaled-harmonic"),
    "output.checkpoints": ("thinned", "all"),
}
# (type, lower bound, lower bound inclusive)
_NUMBERS = {
    "problem.n": (int, 1, True),
    "problem.N": (int, 1, True),
    "problem.c_seed": (int, 0, True),
    "problem.sigma_f": (float, 0.0, False),
    "network.radius": (float, 0.0, False),
    "network.B": (int, 1, True),
    "network.period": (int, 1, True),
    "network.graph_seed": (int, 0, True),
    "map.epsilon": (float, 0.0, False),
    "oracle.mu": (float, 0.0, False),
    "oracle.direction_scale": (float, 0.0, False),
    "algorithm.eta": (float, 0.0, False),
    "algorithm.rho": (float, 0.0, False),
    "algorithm.delta": (float, 0.0, False),
    "algorithm.T": (int, 0, True),
    "algorithm.tracked_node": (int, 0, True),
    "trials.count": (int, 1, True),
    "trials.base_seed": (int, 0, True),
}


def parse_text(text):
    """Raw ``{key: string}`` mapping of a config document."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        if key in raw:
            raise ConfigError(key, "duplicate key")
        raw[key] = value
    return raw


def load(path):
    with open(path, encoding="utf-8") as fh:
        return normalize(parse_text(fh.read()))


def _number(key, value):
    kind, low, inclusive = _NUMBERS[key]
    try:
        if kind is int:
            if isinstance(value, bool):
                raise ValueError
            if isinstance(value, str) and value.strip().lstrip("-").isdigit():
                v = int(value)
            else:
                f = float(value)
                if not f.is_integer():
                    raise ValueError
                v = int(f)
        else:
            v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected {kind.__name__}, got {value!r}") from None
    if not np.isfinite(v) or (v < low if inclusive else v <= low):
        op = ">=" if inclusive else ">"
        raise ConfigError(key, f"must be {op} {low}")
    return v


def normalize(raw):
    """Defaults filled in, values typed and validated."""
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    doc = dict(DEFAULTS)
    doc.update(raw)
    for key in _NUMBERS:
        doc[key] = _number(key, doc[key])
    for key, options in _CHOICES.items():
        doc[key] = str(doc[key]).strip()
        if doc[key] not in options:
            raise ConfigError(key, f"expected one of {', '.join(options)}")
    modes = doc["algorithm.averaging"]
    if isinstance(modes, str):
        modes = [m.strip() for m in modes.split(",") if m.strip()]
    for m in modes:
        if m not in AVERAGING:
            raise ConfigError("algorithm.averaging", f"unknown mode {m!r}")
    doc["algorithm.averaging"] = ",".join(m for m in AVERAGING if m in modes)
    if doc["problem.optimum"] == "none" and modes:
        raise ConfigError("algorithm.averaging",
                          "gap metrics need a known optimum (problem.optimum = auto)")
    if doc["network.B"] > doc["network.period"]:
        raise ConfigError("network.B", "must not exceed network.period")
    if doc["algorithm.tracked_node"] >= doc["problem.N"]:
        raise ConfigError("algorithm.tracked_node", "must be below problem.N")
    if doc["map.epsilon"] >= 1.0 / doc["problem.n"]:
        raise ConfigError("map.epsilon", "must be below 1/n")
    if doc["algorithm.schedule"] == "power":
        if not doc["algorithm.delta"] < 1:
            raise ConfigError("algorithm.delta", "must lie in (0, 1)")
        if doc["algorithm.rho"] > 2 ** doc["algorithm.delta"]:
            raise ConfigError("algorithm.rho", "must be <= 2^delta")
    doc["problem.c"] = _format_c(doc["problem.c"], doc["problem.N"])
    doc["problem.anchors"] = _format_anchors(doc["problem.anchors"], doc["problem.N"],
                                             doc["problem.n"])
    doc["output.directory"] = str(doc["output.directory"])
    return doc


def _format_c(value, N):
    if isinstance(value, (list, tuple, np.ndarray)):
        value = ",".join(repr(float(v)) for v in value)
    value = str(value).strip()
    if not value:
        return ""
    try:
        c = [float(v) for v in value.split(",")]
    except ValueError:
        raise ConfigError("problem.c", "expected comma-separated numbers") from None
    if len(c) != N or any(not np.isfinite(v) or v <= 0 for v in c):
        raise ConfigError("problem.c", f"need {N} positive weights")
    return ",".join(repr(v) for v in c)


def _format_anchors(value, N, n):
    value = str(value).strip()
    if value == "center":
        return value
    try:
        rows = [[float(v) for v in row.split(",")] for row in value.split(";")]
    except ValueError:
        raise ConfigError("problem.anchors", "expected 'center' or rows 'a,b;c,d'") from None
    A = np.asarray(rows, dtype=float) if all(len(r) == n for r in rows) else None
    if A is None or A.shape != (N, n):
        raise ConfigError("problem.anchors", f"need {N} rows of {n} numbers")
    return ";".join(",".join(repr(v) for v in r) for r in rows)


@dataclass(eq=False)
class Experiment:
    doc: dict
    problem: object
    topology: object
    algorithm: AlgorithmConfig
    n_trials: int
    base_seed: int

    @property
    def fingerprint(self):
        return fingerprint(self.doc)


def build(doc):
    """Problem, topology and algorithm configuration of a normalized document."""
    n, N = doc["problem.n"], doc["problem.N"]
    if doc["problem.c"]:
        c = np.array([float(v) for v in doc["problem.c"].split(",")])
    else:
        c = np.random.default_rng(doc["problem.c_seed"]).uniform(0.5, 1.5, N)
    if doc["problem.kind"] == "nesterov":
        problem = nesterov_problem(N, n, c)
    else:
        if doc["problem.anchors"] == "center":
            anchors = np.full((N, n), 1.0 / n)
        else:
            anchors = np.array([[float(v) for v in r.split(",")]
                                for r in doc["problem.anchors"].split(";")])
        problem = strongly_convex_problem(N, n, c, doc["problem.sigma_f"], anchors)
    if doc["problem.optimum"] == "none":
        problem.optimum = None

    try:
        topology = random_schedule(N, doc["network.radius"], doc["network.period"],
                                   doc["network.B"],
                                   np.random.default_rng(doc["network.graph_seed"]))
    except (RuntimeError, ValueError) as exc:
        raise ConfigError("network.radius", str(exc)) from None

    if doc["map.kind"] == "entropy":
        mmap = EntropyMap(n, floor=doc["map.epsilon"])
    else:
        mmap = EuclideanMap(DomainDescriptor.simplex(n))
    kind = doc["algorithm.schedule"]
    try:
        if kind == "sqrt":
            schedule = StepSchedule.sqrt(doc["algorithm.eta"])
        elif kind == "strongly-convex":
            schedule = StepSchedule.strongly_convex(mmap.lipschitz_grad, problem.sigma_f)
        elif kind == "power":
            schedule = StepSchedule.power(doc["algorithm.rho"], doc["algorithm.delta"])
        else:
            schedule = StepSchedule.scaled_harmonic()
    except ValueError as exc:
        raise ConfigError("algorithm.schedule", str(exc)) from None
    modes = tuple(m for m in doc["algorithm.averaging"].split(",") if m)
    try:
        algorithm = AlgorithmConfig(
            mmap, schedule, doc["algorithm.T"], mu=doc["oracle.mu"],
            direction_scale=doc["oracle.direction_scale"],
            variant=doc["algorithm.variant"],
            estimator_site=doc["algorithm.estimator_site"], averaging=modes,
            tracked_node=doc["algorithm.tracked_node"],
            checkpoints=doc["output.checkpoints"])
    except ValueError as exc:
        raise ConfigError("algorithm.variant", str(exc)) from None
    if algorithm.variant == "drgfmd-prime" and problem.sigma_f <= 0:
        raise ConfigError("algorithm.variant",
                          "drgfmd-prime needs problem.kind = strongly-convex")
    return Experiment(doc, problem, topology, algorithm, doc["trials.count"],
                      doc["trials.base_seed"])


def dumps(doc):
    """Canonical text rendering of a normalized document."""
    return "".join(f"{k} = {doc[k]}\n" for k in DEFAULTS)
