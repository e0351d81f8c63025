"""
Distributed randomized gradient-free mirror descent and its variants.

One iteration, for every agent i:

    y_i  = sum_j P_ij x_j                          (consensus)
    g_i  = oracle at z_i (y_i or x_i)
    x_i' = argmin_x  a_t <g_i, x> + D(x, y_i)      (local mirror step)

``drgfmd-prime`` scales the step by L_phi / sigma_f, ``dgfp`` replaces the
mirror step by the Euclidean projection of y_i - a_t g_i.

The engine advances a batch of independent trials together; each trial's
arithmetic is elementwise identical to a single-trial run, so a batch
reproduces the single runs bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
import hashlib
import json
import math

import numpy as np

from .geometry import EuclideanMap, EntropyMap, simplex_projection
from .objective import direction_stream, mix_seed


VARIANTS = ("drgfmd", "drgfmd-prime", "dgfp")
AVERAGING = ("running-mean", "reciprocal", "alpha-weighted")
SCHEDULES = ("sqrt", "strongly-convex", "power", "scaled-harmonic")


class RunAborted(RuntimeError):
    def __init__(self, iteration, agent, trial=None, what="non-finite iterate"):
        self.iteration, self.agent, self.trial = iteration, agent, trial
        where = f"iteration {iteration}, agent {agent}"
        if trial is not None:
            where += f", trial {trial}"
        super().__init__(f"{what} at {where}")


class UnsupportedBound(ValueError):
    """The requested bound needs inputs the configuration does not provide."""


# -- step sizes ---------------------------------------------------------------

@dataclass(frozen=True)
class StepSchedule:
    kind: str
    eta: float = 1.0
    lipschitz_phi: float | None = None
    sigma_f: float | None = None
    rho: float = 1.0
    delta: float = 0.5

    def __post_init__(self):
        if self.kind not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.kind!r}")
        if self.kind == "sqrt" and self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.kind == "strongly-convex":
            if not self.lipschitz_phi or not self.sigma_f or self.sigma_f <= 0:
                raise ValueError("strongly-convex schedule needs L_phi and sigma_f")
        if self.kind == "power":
            if not (0 < self.delta < 1):
                raise ValueError("power schedule needs 0 < delta < 1")
            if not (0 < self.rho <= 2 ** self.delta):
                raise ValueError("power schedule needs 0 < rho <= 2^delta "
                                 "to stay non-increasing")

    @classmethod
    def sqrt(cls, eta=1.0):
        return cls("sqrt", eta=eta)

    @classmethod
    def strongly_convex(cls, lipschitz_phi, sigma_f):
        return cls("strongly-convex", lipschitz_phi=lipschitz_phi, sigma_f=sigma_f)

    @classmethod
    def power(cls, rho, delta):
        return cls("power", rho=rho, delta=delta)

    @classmethod
    def scaled_harmonic(cls):
        return cls("scaled-harmonic")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        safe = np.maximum(t, 1.0)
        if self.kind == "sqrt":
            a = self.eta / np.sqrt(t + 1.0)
        elif self.kind == "strongly-convex":
            r = self.lipschitz_phi / self.sigma_f
            a = np.where(t >= 1, r / safe, r)
        elif self.kind == "power":
            a = np.where(t >= 1, self.rho / (t + 1.0) ** self.delta, 1.0)
        else:
            a = np.where(t >= 1, 2.0 / (t + 1.0), 1.0)
        return a if a.ndim else float(a)

    def first(self):
        return float(self(0))

    def satisfies_scaled_condition(self, horizon):
        """(1 - a_t) / a_t^2 <= 1 / a_{t-1}^2 for 1 <= t <= horizon, with a_0 = 1."""
        if abs(self.first() - 1.0) > 1e-15:
            return False
        t = np.arange(1, horizon + 1)
        a, prev = self(t), self(t - 1)
        return bool(np.all((1.0 - a) / a ** 2 <= 1.0 / prev ** 2 * (1 + 1e-12)))

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}


# -- configuration ------------------------------------------------------------

def fingerprint(doc):
    """Stable short hash of a JSON-serializable document."""
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass(eq=False)
class AlgorithmConfig:
    mirror_map: object
    schedule: StepSchedule
    horizon: int
    mu: object = 1e-4
    direction_scale: float = 1.0
    variant: str = "drgfmd"
    estimator_site: str = "y"
    averaging: tuple = ("running-mean", "reciprocal", "alpha-weighted")
    tracked_node: int = 0
    x0: np.ndarray | None = None
    checkpoints: str = "thinned"
    label: str = ""

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.estimator_site not in ("y", "x"):
            raise ValueError("estimator_site must be 'y' or 'x'")
        self.averaging = tuple(self.averaging)
        for mode in self.averaging:
            if mode not in AVERAGING:
                raise ValueError(f"unknown averaging mode {mode!r}")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.checkpoints not in ("thinned", "all"):
            raise ValueError("checkpoints must be 'thinned' or 'all'")
        if self.variant == "dgfp" and not isinstance(self.mirror_map, EuclideanMap):
            self.mirror_map = EuclideanMap(self.mirror_map.domain)
        if self.variant == "drgfmd-prime" and self.mirror_map.lipschitz_grad is None:
            raise ValueError("drgfmd-prime needs a gradient-Lipschitz mirror map")

    def checkpoint_times(self):
        T = self.horizon
        if self.checkpoints == "all":
            return np.arange(1, T + 1)
        stride = max(1, math.ceil(T / 400))
        ts = set(range(1, min(100, T) + 1))
        ts.update(range(stride, T + 1, stride))
        if T >= 1:
            ts.add(T)
        return np.array(sorted(t for t in ts if t <= 100 or t % stride == 0 or t == T))

    def snapshot(self):
        m = self.mirror_map
        return {
            "variant": self.variant,
            "estimator_site": self.estimator_site,
            "averaging": list(self.averaging),
            "map": {"kind": m.name, "dimension": m.dimension,
                    "floor": getattr(m, "floor", None)},
            "schedule": self.schedule.to_dict(),
            "horizon": self.horizon,
            "mu": np.atleast_1d(self.mu).tolist(),
            "direction_scale": self.direction_scale,
            "tracked_node": self.tracked_node,
            "x0": None if self.x0 is None else np.asarray(self.x0).tolist(),
            "checkpoints": self.checkpoints,
        }

    def fingerprint(self):
        return fingerprint(self.snapshot())


# -- single-step operations ---------------------------------------------------

def consensus_step(X, mixing):
    """y_i = sum_j P_ij x_j along the agent axis (second to last)."""
    P = np.asarray(getattr(mixing, "entries", mixing), dtype=float)
    X = np.asarray(X, dtype=float)
    N = X.shape[-2]
    if P.shape != (N, N):
        raise ValueError(f"mixing matrix {P.shape} does not match {N} agents")
    # fixed summation order keeps batched and single runs bit-identical
    Y = P[:, 0, None] * X[..., 0:1, :]
    for j in range(1, N):
        Y = Y + P[:, j, None] * X[..., j:j + 1, :]
    return Y


def local_step(y, g, mirror_map, alpha, variant="drgfmd", sigma_f=None):
    if variant == "drgfmd":
        return mirror_map.step(y, g, alpha)
    if variant == "drgfmd-prime":
        if mirror_map.lipschitz_grad is None or not sigma_f:
            raise ValueError("drgfmd-prime needs L_phi and sigma_f")
        return mirror_map.step(y, g, alpha * mirror_map.lipschitz_grad / sigma_f)
    if variant == "dgfp":
        return simplex_projection(np.asarray(y) - alpha * np.asarray(g))
    raise ValueError(f"unknown variant {variant!r}")


@dataclass
class Averages:
    """Running numerators and denominators of the three averaging sequences."""

    modes: tuple
    num: dict = field(default_factory=dict)
    den: dict = field(default_factory=dict)

    def update(self, x, alpha):
        weights = {"running-mean": 1.0, "reciprocal": 1.0 / alpha,
                   "alpha-weighted": alpha}
        for mode in self.modes:
            w = weights[mode]
            if mode in self.num:
                self.num[mode] = self.num[mode] + w * x
                self.den[mode] = self.den[mode] + w
            else:
                self.num[mode] = w * np.asarray(x, dtype=float)
                self.den[mode] = w
        return self

    def value(self, mode):
        return self.num[mode] / self.den[mode]


def update_averages(state, x_l, alpha_t, t):
    if t < 1:
        raise ValueError("averages accumulate from t = 1")
    return state.update(x_l, alpha_t)


# -- runs ---------------------------------------------------------------------

@dataclass(eq=False)
class RunRecord:
    config: dict
    fingerprint: str
    seed: int
    x0: np.ndarray
    t: np.ndarray
    x: np.ndarray
    averages: dict
    f_values: dict
    gaps: dict
    consensus: np.ndarray
    proj_error: np.ndarray
    disagreement: np.ndarray
    f_star: float | None


@dataclass(eq=False)
class BatchRecord:
    """Trajectories of several trials; leading axis indexes trials."""

    config: dict
    fingerprint: str
    seeds: list
    x0: np.ndarray
    t: np.ndarray
    x: np.ndarray
    averages: dict
    f_values: dict
    gaps: dict
    consensus: np.ndarray
    proj_error: np.ndarray
    disagreement: np.ndarray
    f_star: float | None

    def trial(self, k):
        return RunRecord(self.config, self.fingerprint, self.seeds[k], self.x0,
                         self.t, self.x[k],
                         {m: v[k] for m, v in self.averages.items()},
                         {m: v[k] for m, v in self.f_values.items()},
                         {m: v[k] for m, v in self.gaps.items()},
                         self.consensus[k], self.proj_error[k],
                         self.disagreement[k], self.f_star)


def _initial_point(problem, config):
    if config.x0 is not None:
        x0 = np.broadcast_to(np.asarray(config.x0, dtype=float),
                             (problem.n_agents, problem.dimension)).copy()
    else:
        x0 = np.tile(problem.domain.center(), (problem.n_agents, 1))
    if not problem.domain.contains(x0):
        raise ValueError("initial point is infeasible")
    return x0


def validate(problem, topology, config):
    if topology.node_count != problem.n_agents:
        raise ValueError("topology and problem disagree on the number of agents")
    if config.mirror_map.dimension != problem.dimension:
        raise ValueError("mirror map dimension does not match the problem")
    if not 0 <= config.tracked_node < problem.n_agents:
        raise ValueError("tracked node out of range")
    mu = np.atleast_1d(np.asarray(config.mu, dtype=float))
    if mu.size not in (1, problem.n_agents) or np.any(mu <= 0):
        raise ValueError("mu needs one positive value or one per agent")
    if config.variant == "drgfmd-prime":
        if problem.sigma_f <= 0:
            raise ValueError("drgfmd-prime needs strongly convex objectives")
        if not config.schedule.satisfies_scaled_condition(config.horizon):
            raise ValueError("schedule violates (1 - a_t)/a_t^2 <= 1/a_{t-1}^2")
    topology.validate()


def simulate(problem, topology, config, seeds, chunk=512):
    """Run one trial per seed, all advanced together."""
    validate(problem, topology, config)
    seeds = [int(s) for s in seeds]
    K, N, n = len(seeds), problem.n_agents, problem.dimension
    T = config.horizon
    mmap = config.mirror_map
    mu = np.broadcast_to(np.atleast_1d(np.asarray(config.mu, dtype=float)), (N,))
    mu_col = mu[:, None]
    scale = math.sqrt(config.direction_scale)
    sigma_f = problem.sigma_f
    l = config.tracked_node
    f_star = problem.f_star

    x0 = _initial_point(problem, config)
    X = np.broadcast_to(x0, (K, N, n)).copy()
    ts = config.checkpoint_times()
    C = len(ts)
    rec_x = np.empty((K, C, N, n))
    rec_avg = {m: np.empty((K, C, n)) for m in config.averaging}
    rec_f = {m: np.empty((K, C)) for m in config.averaging}
    rec_cons = np.empty((K, C))
    rec_proj = np.empty((K, C, N))
    rec_dis = np.empty((K, C, N))
    avg = Averages(config.averaging)

    streams = [[direction_stream(s, i) for i in range(N)] for s in seeds]
    block = None
    c = 0
    for t in range(T):
        j = t % chunk
        if j == 0:
            m = min(chunk, T - t)
            block = np.stack([np.stack([g.standard_normal((m, n)) for g in row])
                              for row in streams])            # (K, N, m, n)
        alpha = config.schedule(t)
        Y = consensus_step(X, topology.matrix(t))
        Z = Y if config.estimator_site == "y" else X
        xi = scale * block[:, :, j, :]
        fz = problem.agent_values(Z)
        fp = problem.agent_values(Z + mu_col * xi)
        G = ((fp - fz) / mu)[..., None] * xi
        X_new = local_step(Y, G, mmap, alpha, config.variant, sigma_f)
        if not np.all(np.isfinite(X_new)):
            k, i = np.argwhere(~np.isfinite(X_new).all(axis=-1))[0]
            raise RunAborted(t + 1, int(i), int(k))
        alpha_next = config.schedule(t + 1)
        avg.update(X_new[:, l, :], alpha_next)
        if c < C and ts[c] == t + 1:
            rec_x[:, c] = X_new
            for mode in config.averaging:
                v = avg.value(mode)
                rec_avg[mode][:, c] = v
                rec_f[mode][:, c] = problem.global_value(v)
            diff = X_new[:, :, None, :] - X_new[:, None, :, :]
            rec_cons[:, c] = np.sqrt((diff ** 2).sum(-1)).max(axis=(1, 2))
            rec_proj[:, c] = np.linalg.norm(X_new - Y, axis=-1)
            rec_dis[:, c] = np.linalg.norm(X_new - X_new.mean(axis=1, keepdims=True),
                                           axis=-1)
            c += 1
        X = X_new

    gaps = {m: (v - f_star if f_star is not None else np.full_like(v, np.nan))
            for m, v in rec_f.items()}
    return BatchRecord(config.snapshot(), config.fingerprint(), seeds, x0, ts,
                       rec_x, rec_avg, rec_f, gaps, rec_cons, rec_proj, rec_dis,
                       f_star)


def run(problem, topology, config, seed):
    """Single deterministic run; ``seed`` keys the direction streams."""
    return simulate(problem, topology, config, [seed]).trial(0)


def trial_seeds(base_seed, n_trials):
    return [mix_seed(base_seed, k) for k in range(n_trials)]


# -- per-iterate expectation bounds -------------------------------------------

def _effective_steps(t, config):
    a = config.schedule(np.asarray(t, dtype=float))
    if config.variant == "drgfmd-prime":
        raise UnsupportedBound("iterate bounds are stated for drgfmd and dgfp")
    return a


def projection_error_bound(t, problem, config):
    """
    Bound (n+4) L_hat a_{t-1} / sigma_phi on E||x_i^t - y_i^{t-1}|| at
    checkpoint(s) t >= 1.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    a = _effective_steps(t - 1, config)
    n, L = problem.dimension, problem.l_hat
    return (n + 4) * L * a / config.mirror_map.sigma_phi


def disagreement_bound(t, problem, config, certificate):
    """
    Bound on E||x_i^t - xbar^t||:
    N Gamma (n+4) L_hat / sigma_phi * sum_{k=1}^{t-1} gamma^(t-k) a_{k-1}
    + 2 (n+4) L_hat a_{t-1} / sigma_phi, for identical starting points.
    """
    t = np.atleast_1d(np.asarray(t, dtype=int))
    if np.any(t < 1):
        raise ValueError("checkpoints must be >= 1")
    n, N, L = problem.dimension, problem.n_agents, problem.l_hat
    sp = config.mirror_map.sigma_phi
    gam, Gam = certificate.gamma, certificate.gamma_big
    top = int(t.max())
    a = _effective_steps(np.arange(0, top), config)
    # S_1 = 0, S_{t+1} = gamma (S_t + a_{t-1})
    S = np.zeros(top + 1)
    for k in range(1, top):
        S[k + 1] = gam * (S[k] + a[k - 1])
    coef = (n + 4) * L / sp
    return N * Gam * coef * S[t] + 2 * coef * a[t - 1]


# -- bound constants ----------------------------------------------------------

@dataclass(eq=False)
class BoundConstants:
    theorem: str
    constants: dict
    inputs: dict
    fingerprint: str
    schedule: StepSchedule
    surrogates: tuple = ()

    @property
    def smoothing_floor(self):
        return self.constants["B1"]

    def curve(self, T):
        """Theoretical gap bound at horizon(s) T."""
        T = np.atleast_1d(np.asarray(T, dtype=float))
        k, c = self.inputs, self.constants
        B1 = c["B1"]
        out = np.full(T.shape, np.nan)
        for idx, h in enumerate(T):
            if h < 1:
                continue
            if self.theorem == "theorem-3":
                out[idx] = B1 + c["C1"] / math.sqrt(h)
            elif self.theorem == "remark-8":
                out[idx] = B1 + c["C1_prime"] / math.sqrt(h)
            elif self.theorem == "theorem-2":
                s = _alpha_sum(self.schedule, int(h))
                aT = self.schedule(h)
                out[idx] = B1 + k["d_phi_sq"] / (h * aT) + c["B3_coeff"] * s / h
            elif self.theorem == "theorem-4":
                if h >= 8:
                    out[idx] = B1 + c["C2"] * math.log(h) / h
            elif self.theorem == "theorem-6":
                d = k["delta"]
                out[idx] = (B1 + c["C_delta_1"] / (h + 1) ** (1 - d)
                            + c["C_delta_2"] / (h + 1) ** d)
            elif self.theorem == "theorem-5":
                aT = self.schedule(h)
                inv = _inv_alpha_sum(self.schedule, int(h))
                out[idx] = B1 + (k["d_phi_sq"] / aT ** 2 + c["centralized"] * h
                                 + c["C_tilde"] / aT * _alpha_sum(self.schedule, int(h))) / inv
            elif self.theorem == "theorem-7":
                aT = self.schedule(h)
                inv = _inv_alpha_sum(self.schedule, int(h))
                out[idx] = B1 + (c["initial"] + c["centralized"] * h
                                 + c["C_tilde"] / aT * _alpha_sum(self.schedule, int(h))) / inv
        return out


def _alpha_sum(schedule, T):
    return float(np.sum(schedule(np.arange(0, T + 1))))


def _inv_alpha_sum(schedule, T):
    return float(np.sum(1.0 / schedule(np.arange(1, T + 1))))


def _require(inputs, names, theorem):
    missing = [k for k in names if inputs.get(k) is None]
    if missing:
        raise UnsupportedBound(f"{theorem} needs {', '.join(missing)}")


def select_theorem(config, problem):
    kind = config.schedule.kind
    if config.variant == "drgfmd-prime":
        return "theorem-7"
    if "reciprocal" in config.averaging and "running-mean" not in config.averaging:
        return "theorem-6" if kind == "power" else "theorem-5"
    if kind == "strongly-convex":
        return "theorem-4"
    if kind == "sqrt":
        return "theorem-3" if config.estimator_site == "y" else "remark-8"
    return "theorem-2"


def bound_constants(config, problem, certificate, theorem=None, x_star=None):
    """
    Evaluate the constants of the convergence theorem matching ``config``
    (or the one named by ``theorem``).
    """
    theorem = theorem or select_theorem(config, problem)
    mmap = config.mirror_map
    sched = config.schedule
    N, n = problem.n_agents, problem.dimension
    mu = np.broadcast_to(np.atleast_1d(np.asarray(config.mu, dtype=float)), (N,))
    inputs = {
        "n": n, "N": N, "L_hat": problem.l_hat, "sigma_phi": mmap.sigma_phi,
        "sigma_f": problem.sigma_f or None, "L_phi": mmap.lipschitz_grad,
        "d_phi_sq": mmap.diameter_sq, "Gamma": certificate.gamma_big,
        "gamma": certificate.gamma, "eta": sched.eta if sched.kind == "sqrt" else None,
        "rho": sched.rho if sched.kind == "power" else None,
        "delta": sched.delta if sched.kind == "power" else None,
        "mu_bar": float(mu.mean()),
    }
    L, sp, Gam, gam = inputs["L_hat"], inputs["sigma_phi"], inputs["Gamma"], inputs["gamma"]
    q = (n + 4) ** 2 * L ** 2
    net = N * q * Gam / (sp * (1 - gam))
    c = {"B1": math.sqrt(n) * L * inputs["mu_bar"]}
    c_tilde = 2 * net + 4 * q / sp
    surrogates = ("d_phi_sq",) if mmap.diameter_is_surrogate else ()

    if theorem == "theorem-2":
        _require(inputs, ["d_phi_sq"], theorem)
        c["B3_coeff"] = 9 * q / (2 * sp) + 2 * net
    elif theorem == "theorem-3":
        _require(inputs, ["d_phi_sq", "eta"], theorem)
        eta, d2 = inputs["eta"], inputs["d_phi_sq"]
        c["C1"] = (math.sqrt(2) * d2 / eta + 9 * math.sqrt(2) * q * eta / sp
                   + 4 * math.sqrt(2) * net * eta * gam)
    elif theorem == "remark-8":
        _require(inputs, ["d_phi_sq", "eta"], theorem)
        eta, d2 = inputs["eta"], inputs["d_phi_sq"]
        c["C1_prime"] = (math.sqrt(2) * d2 / eta + 8 * math.sqrt(2) * N * net * eta
                         + math.sqrt(2) * (16 * N + 1) * q * eta / sp)
    elif theorem == "theorem-4":
        _require(inputs, ["L_phi", "sigma_f"], theorem)
        c["C2"] = (4 * N * net + (16 * N + 1) * q / (2 * sp)) * 2 * inputs["L_phi"] / inputs["sigma_f"]
    elif theorem == "theorem-5":
        _require(inputs, ["d_phi_sq"], theorem)
        c["C_tilde"] = c_tilde
        c["centralized"] = q / (2 * sp)
    elif theorem == "theorem-6":
        _require(inputs, ["d_phi_sq", "rho", "delta"], theorem)
        rho, d = inputs["rho"], inputs["delta"]
        p = 1 - 2.0 ** (-(1 + d))
        c["p"] = p
        c["C_tilde"] = c_tilde
        c["C_delta_1"] = (d + 1) * inputs["d_phi_sq"] / (p * rho)
        c["C_delta_2"] = (q / (2 * sp) + c_tilde * (rho + 1 - d) / (rho * (1 - d))) * rho * (d + 1) / p
    elif theorem == "theorem-7":
        _require(inputs, ["L_phi", "sigma_f"], theorem)
        xs = problem.x_star if x_star is None else x_star
        if xs is None:
            raise UnsupportedBound("theorem-7 needs the optimum for the initial divergence")
        x0 = _initial_point(problem, config)
        delta0 = float(np.max(mmap.bregman(xs, x0)))
        inputs["delta_phi_0"] = delta0
        surrogates = surrogates + ("delta_phi_0",)
        Lp, sf = inputs["L_phi"], inputs["sigma_f"]
        c["C_tilde"] = c_tilde
        c["initial"] = sf * delta0 / Lp
        c["centralized"] = Lp * q / (2 * sf * sp)
    else:
        raise UnsupportedBound(f"unknown theorem {theorem!r}")
    if any(not (math.isfinite(v) and v >= 0) for v in c.values()):
        raise UnsupportedBound(f"{theorem}: non-finite constant")
    return BoundConstants(theorem, c, inputs, config.fingerprint(), sched, surrogates)
