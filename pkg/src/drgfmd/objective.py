"""
Local objectives, Gaussian smoothing and the random gradient-free oracle.

The oracle for agent i at iteration t is

    g = (f_i(z + mu_i xi) - f_i(z)) / mu_i * xi,   xi ~ N(0, s I).

Directions come from keyed streams: the stream for (trial seed, agent) yields
one block of n standard normals per iteration, so a direction is a pure
function of (base seed, trial, agent, iteration).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.special import erf

from .geometry import DomainDescriptor, simplex_projection


MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15


def mix_seed(base_seed, k):
    """
    Seed of trial ``k``: the (k+1)-th output of a SplitMix64 generator
    started at ``base_seed``.
    """
    z = (int(base_seed) + (int(k) + 1) * GOLDEN64) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def direction_stream(seed, agent):
    """Standard-normal stream keyed by (run seed, agent)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(
        entropy=int(seed), spawn_key=(int(agent),))))


# -- objectives ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LocalObjective:
    """
    A local cost f_i. ``func`` is vectorized over leading axes.

    ``nesterov_weight`` and ``anchor`` describe the structured family
    c * nesterov(x) + (sigma_f / 2) ||x - anchor||^2 when the objective
    belongs to it, which lets the optimum and smoothed closed forms be used.
    """

    func: object
    lipschitz: float
    strong_convexity: float = 0.0
    nesterov_weight: float | None = None
    anchor: np.ndarray | None = None

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    @property
    def piecewise_linear(self):
        return self.nesterov_weight is not None and self.strong_convexity == 0.0


@dataclass(eq=False)
class ProblemInstance:
    agents: list
    domain: DomainDescriptor
    optimum: tuple | None = None
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    @property
    def n_agents(self):
        return len(self.agents)

    @property
    def dimension(self):
        return self.domain.dimension

    @property
    def l_hat(self):
        return max(a.lipschitz for a in self.agents)

    @property
    def sigma_f(self):
        return min(a.strong_convexity for a in self.agents)

    @property
    def f_star(self):
        return None if self.optimum is None else self.optimum[0]

    @property
    def x_star(self):
        return None if self.optimum is None else self.optimum[1]

    def global_value(self, x):
        """f(x) = (1/N) sum_i f_i(x)."""
        return sum(a(x) for a in self.agents) / self.n_agents

    def agent_values(self, Z):
        """f_i(Z[..., i, :]) stacked along the agent axis."""
        return np.stack([a(Z[..., i, :]) for i, a in enumerate(self.agents)], axis=-1)


def nesterov_term(x):
    """|x_1 - 1| + sum_k |1 + x_{k+1} - 2 x_k|."""
    x = np.asarray(x, dtype=float)
    val = np.abs(x[..., 0] - 1.0)
    if x.shape[-1] > 1:
        val = val + np.abs(1.0 + x[..., 1:] - 2.0 * x[..., :-1]).sum(axis=-1)
    return val


def nesterov_lipschitz(n):
    """l2 Lipschitz bound of the Nesterov term (each kink term has norm <= 3)."""
    return 1.0 + 3.0 * (n - 1)


def _nesterov_affine(n):
    """Rows (a_k, b_k) of the affine pieces a_k + <b_k, x> inside the absolute values."""
    A = np.zeros((n, n))
    a = np.ones(n)
    A[0, 0], a[0] = 1.0, -1.0
    for k in range(1, n):
        A[k, k] = 1.0
        A[k, k - 1] = -2.0
    return a, A


def smoothed_nesterov(x, mu, scale=1.0):
    """
    Exact Gaussian smoothing E[h(x + mu xi)] of the Nesterov term h and its
    gradient, xi ~ N(0, scale I). Each |m + s Z| has the folded-normal mean.
    """
    x = np.asarray(x, dtype=float)
    a, A = _nesterov_affine(x.shape[-1])
    m = a + x @ A.T
    s = mu * math.sqrt(scale) * np.linalg.norm(A, axis=1)
    r = m / (s * math.sqrt(2.0))
    val = (s * math.sqrt(2.0 / math.pi) * np.exp(-r * r) + m * erf(r)).sum(-1)
    grad = erf(r) @ A
    return val, grad


def nesterov_problem(n_agents, dimension, c):
    c = np.asarray(c, dtype=float)
    if c.shape != (n_agents,):
        raise ValueError("need one weight per agent")
    if np.any(c <= 0):
        raise ValueError("Nesterov weights must be positive")
    L = nesterov_lipschitz(dimension)
    agents = [LocalObjective(lambda x, ci=ci: ci * nesterov_term(x), ci * L,
                             nesterov_weight=float(ci)) for ci in c]
    prob = ProblemInstance(agents, DomainDescriptor.simplex(dimension),
                           kind="nesterov", params={"c": c.tolist()})
    prob.optimum = lp_optimum(prob)
    return prob


def strongly_convex_problem(n_agents, dimension, c, sigma_f, anchors):
    """c_i * nesterov(x) + (sigma_f / 2) ||x - a_i||^2 on the simplex."""
    c = np.asarray(c, dtype=float)
    anchors = np.asarray(anchors, dtype=float)
    if c.shape != (n_agents,) or anchors.shape != (n_agents, dimension):
        raise ValueError("need one weight and one anchor per agent")
    if np.any(c < 0):
        raise ValueError("weights must be non-negative")
    if sigma_f <= 0:
        raise ValueError("sigma_f must be positive")
    vertices = np.eye(dimension)
    agents = []
    for ci, ai in zip(c, anchors):
        reach = np.linalg.norm(vertices - ai, axis=1).max()
        L = ci * nesterov_lipschitz(dimension) + sigma_f * reach

        def f(x, ci=ci, ai=ai):
            d = x - ai
            return ci * nesterov_term(x) + 0.5 * sigma_f * (d * d).sum(-1)
        agents.append(LocalObjective(f, L, strong_convexity=float(sigma_f),
                                     nesterov_weight=float(ci), anchor=ai.copy()))
    prob = ProblemInstance(agents, DomainDescriptor.simplex(dimension),
                           kind="strongly-convex",
                           params={"c": c.tolist(), "sigma_f": float(sigma_f),
                                   "anchors": anchors.tolist()})
    prob.optimum = composite_optimum(prob)
    return prob


def _epigraph_constraints(n):
    """Inequalities +-(a_k + <b_k, x>) <= u_k over variables (x, u)."""
    a, A = _nesterov_affine(n)
    I = np.eye(n)
    A_ub = np.block([[A, -I], [-A, -I]])
    b_ub = np.concatenate([-a, a])
    A_eq = np.concatenate([np.ones(n), np.zeros(n)])[None, :]
    return A_ub, b_ub, A_eq


def lp_optimum(problem):
    """
    Optimal value and one minimizer of a pure piecewise-linear Nesterov
    instance, via the epigraph linear program.
    """
    if not all(a.piecewise_linear for a in problem.agents):
        raise NotImplementedError("lp_optimum needs a piecewise-linear Nesterov instance")
    n = problem.dimension
    weight = sum(a.nesterov_weight for a in problem.agents) / problem.n_agents
    if n == 1:
        return 0.0, np.ones(1)
    A_ub, b_ub, A_eq = _epigraph_constraints(n)
    cost = np.concatenate([np.zeros(n), np.ones(n)])
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * (2 * n), method="highs")
    if res.status != 0:
        raise RuntimeError(f"linear program failed: {res.message}")
    x = simplex_projection(res.x[:n])
    return float(weight * nesterov_term(x)), x


def composite_optimum(problem):
    """
    Minimizer of the strongly convex composite instance: SLSQP on the
    epigraph form, warm-started from the piecewise-linear LP solution.
    """
    n = problem.dimension
    N = problem.n_agents
    cbar = sum(a.nesterov_weight for a in problem.agents) / N
    sigma = problem.sigma_f
    abar = np.mean([a.anchor for a in problem.agents], axis=0)
    if n == 1:
        x = np.ones(1)
        return float(problem.global_value(x)), x
    A_ub, b_ub, A_eq = _epigraph_constraints(n)

    def obj(v):
        d = v[:n] - abar
        return cbar * v[n:].sum() + 0.5 * sigma * d @ d

    def jac(v):
        return np.concatenate([sigma * (v[:n] - abar), np.full(n, cbar)])

    x0 = simplex_projection(abar)
    a, A = _nesterov_affine(n)
    v0 = np.concatenate([x0, np.abs(a + A @ x0)])
    cons = [{"type": "ineq", "fun": lambda v: b_ub - A_ub @ v, "jac": lambda v: -A_ub},
            {"type": "eq", "fun": lambda v: A_eq @ v - 1.0, "jac": lambda v: A_eq}]
    res = minimize(obj, v0, jac=jac, constraints=cons, method="SLSQP",
                   bounds=[(0, None)] * n + [(None, None)] * n,
                   options={"ftol": 1e-15, "maxiter": 2000})
    x = simplex_projection(res.x[:n])
    return float(problem.global_value(x)), x


# -- oracle -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GradientFreeOracle:
    mu: np.ndarray
    direction_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        if np.any(mu <= 0):
            raise ValueError("smoothing parameters must be positive")
        if self.direction_scale <= 0:
            raise ValueError("direction scale must be positive")
        object.__setattr__(self, "mu", mu)

    def direction(self, agent, iteration, trial, dimension):
        stream = direction_stream(mix_seed(self.seed, trial), agent)
        block = stream.standard_normal((iteration + 1, dimension))
        return math.sqrt(self.direction_scale) * block[iteration]


def oracle_estimate(f, z, mu, xi):
    """(f(z + mu xi) - f(z)) / mu * xi, vectorized over leading axes of xi."""
    if np.any(np.asarray(mu) <= 0):
        raise ValueError("mu must be positive")
    diff = (f(z + mu * xi) - f(z)) / mu
    return diff[..., None] * xi


def oracle_sample(oracle, f, z, agent, iteration, trial):
    z = np.asarray(z, dtype=float)
    xi = oracle.direction(agent, iteration, trial, z.shape[-1])
    return oracle_estimate(f, z, oracle.mu[agent % len(oracle.mu)], xi)


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def smoothed_value_mc(f, x, mu, samples, rng, scale=1.0):
    """Monte Carlo estimate of E[f(x + mu xi)] with its standard error."""
    if samples < 2:
        raise ValueError("need at least two samples")
    x = np.asarray(x, dtype=float)
    xi = _rng(rng).standard_normal((samples, x.shape[-1])) * math.sqrt(scale)
    vals = f(x + mu * xi)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


@dataclass
class CheckReport:
    name: str
    status: str
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.status == "pass"


def lemma4_sandwich_check(f, x, mu, l_hat, samples, rng):
    """f(x) <= f_mu(x) <= f(x) + sqrt(n) mu L within 4 standard errors."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    est, se = smoothed_value_mc(f, x, mu, samples, rng)
    fx = float(f(x))
    width = math.sqrt(n) * mu * l_hat
    details = {"estimate": est, "stderr": se, "f": fx, "upper": fx + width}
    if 4 * se >= width / 4:
        return CheckReport("smoothing sandwich", "inconclusive", details)
    ok = est >= fx - 4 * se and est <= fx + width + 4 * se
    return CheckReport("smoothing sandwich", "pass" if ok else "fail", details)


def smoothed_gradient_fd(f, z, mu, samples, rng, h=None):
    """
    Central differences of the smoothed value with common random numbers.
    Returns (gradient estimate, per-component standard error).
    """
    z = np.asarray(z, dtype=float)
    n = z.shape[-1]
    h = mu / 10.0 if h is None else h
    xi = _rng(rng).standard_normal((samples, n))
    base = z + mu * xi
    grad, se = np.empty(n), np.empty(n)
    for d in range(n):
        e = np.zeros(n)
        e[d] = h
        q = (f(base + e) - f(base - e)) / (2 * h)
        grad[d] = q.mean()
        se[d] = q.std(ddof=1) / math.sqrt(samples)
    return grad, se


def oracle_moment_check(f, z, mu, l_hat, samples, rng, exact_grad=None):
    """
    Unbiasedness E[g] = grad f_mu(z) within 5 combined standard errors and the
    second-moment bound E||g||^2 <= (n+4)^2 L^2 within 4 standard errors.
    """
    if samples < 10_000:
        raise ValueError("need at least 1e4 samples")
    rng = _rng(rng)
    z = np.asarray(z, dtype=float)
    n = z.shape[-1]
    xi = rng.standard_normal((samples, n))
    g = oracle_estimate(f, z, mu, xi)
    g_mean = g.mean(axis=0)
    g_se = g.std(axis=0, ddof=1) / math.sqrt(samples)
    if exact_grad is not None:
        ref, ref_se = np.asarray(exact_grad(z), dtype=float), np.zeros(n)
    else:
        ref, ref_se = smoothed_gradient_fd(f, z, mu, samples, rng)
    combined = np.sqrt(g_se ** 2 + ref_se ** 2)
    discrepancy = np.abs(g_mean - ref)
    unbiased = bool(np.all(discrepancy <= 5 * combined + 1e-12))
    sq = (g * g).sum(axis=1)
    sq_mean, sq_se = sq.mean(), sq.std(ddof=1) / math.sqrt(samples)
    bound = (n + 4) ** 2 * l_hat ** 2
    moment = bool(sq_mean <= bound + 4 * sq_se)
    details = {"mean": g_mean, "reference": ref, "discrepancy": discrepancy,
               "tolerance": 5 * combined, "second_moment": sq_mean,
               "second_moment_bound": bound}
    status = "pass" if unbiased and moment else "fail"
    details["unbiased"] = unbiased
    details["moment"] = moment
    return CheckReport("oracle moments", status, details)
