import itertools
import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from drgfmd.objective import (mix_seed, direction_stream, nesterov_term,
                              nesterov_lipschitz, nesterov_problem,
                              strongly_convex_problem, lp_optimum, smoothed_nesterov,
                              smoothed_value_mc, oracle_estimate, oracle_sample,
                              GradientFreeOracle, LocalObjective, ProblemInstance,
                              lemma4_sandwich_check, oracle_moment_check)
from drgfmd.geometry import DomainDescriptor


def splitmix64(state, count):
    """Reference SplitMix64 stream."""
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) % 2**64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) % 2**64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) % 2**64
        out.append(z ^ (z >> 31))
    return out


def test_mix_seed_is_splitmix64():
    for base in (0, 1, 12345, 2**63 + 7):
        assert [mix_seed(base, k) for k in range(5)] == splitmix64(base, 5)


def test_direction_streams_are_keyed():
    a = direction_stream(5, 0).standard_normal(4)
    assert np.array_equal(a, direction_stream(5, 0).standard_normal(4))
    assert not np.array_equal(a, direction_stream(5, 1).standard_normal(4))
    assert not np.array_equal(a, direction_stream(6, 0).standard_normal(4))


def test_nesterov_term_by_hand():
    assert nesterov_term([1.0]) == 0.0
    # |2/3 - 1| + |1 + 1/3 - 4/3|
    assert nesterov_term([2 / 3, 1 / 3]) == pytest.approx(1 / 3, abs=1e-15)
    assert nesterov_term([1 / 3, 1 / 3, 1 / 3]) == pytest.approx(2 / 3 + 2 / 3 + 2 / 3)
    assert nesterov_lipschitz(3) == 7.0


def _vertex_enumeration_min(n):
    """
    Minimum of the Nesterov term over the simplex by enumerating vertices of
    the arrangement of its kink hyperplanes and the simplex facets.
    """
    planes = []
    planes.append((np.eye(n)[0], 1.0))                # x_1 = 1
    for k in range(1, n):
        row = np.zeros(n)
        row[k], row[k - 1] = 1.0, -2.0
        planes.append((row, -1.0))                    # x_{k+1} - 2 x_k = -1
    for d in range(n):
        planes.append((np.eye(n)[d], 0.0))            # x_d = 0
    best = math.inf
    for combo in itertools.combinations(planes, n - 1):
        M = np.vstack([np.ones(n)] + [p[0] for p in combo])
        rhs = np.array([1.0] + [p[1] for p in combo])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, rhs)
        if x.min() >= -1e-12:
            best = min(best, float(nesterov_term(np.clip(x, 0, None))))
    return best


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_lp_optimum_matches_vertex_enumeration(n):
    c = np.array([0.7, 1.3, 1.0])
    prob = nesterov_problem(3, n, c)
    f_star, x_star = prob.optimum
    assert f_star == pytest.approx(c.mean() * _vertex_enumeration_min(n), abs=1e-6)
    assert prob.global_value(x_star) == pytest.approx(f_star, abs=1e-9)
    assert prob.domain.contains(x_star)


def test_lp_optimum_known_values():
    prob = nesterov_problem(1, 2, [1.0])
    assert prob.f_star == pytest.approx(1 / 3, abs=1e-9)
    np.testing.assert_allclose(prob.x_star, [2 / 3, 1 / 3], atol=1e-8)
    assert nesterov_problem(1, 3, [1.0]).f_star == pytest.approx(2 / 3, abs=1e-9)


def test_lp_optimum_rejects_composite():
    prob = strongly_convex_problem(1, 2, [1.0], 1.0, [[0.5, 0.5]])
    with pytest.raises(NotImplementedError):
        lp_optimum(prob)


def test_nonpositive_weight_rejected():
    with pytest.raises(ValueError):
        nesterov_problem(2, 3, [1.0, 0.0])


def test_strongly_convex_pure_quadratic():
    # c = 0: minimize mean of ||x - a_i||^2 / 2 with anchors (2, 0), (0, 0)
    prob = strongly_convex_problem(2, 2, [0.0, 0.0], 1.0, [[2.0, 0.0], [0.0, 0.0]])
    np.testing.assert_allclose(prob.x_star, [1.0, 0.0], atol=1e-7)
    assert prob.f_star == pytest.approx(0.5, abs=1e-9)


def _nested_minimum(f):
    """min over the 2-simplex of x = (s, t, 1 - s - t) by nested scalar searches."""
    def inner(s):
        r = minimize_scalar(lambda t: f(np.array([s, t, 1 - s - t])),
                            bounds=(0.0, 1.0 - s), method="bounded",
                            options={"xatol": 1e-11})
        return r.fun
    r = minimize_scalar(inner, bounds=(0.0, 1.0), method="bounded",
                        options={"xatol": 1e-11})
    return r.fun


def test_strongly_convex_optimum_against_nested_search():
    c = np.random.default_rng(7).uniform(0.5, 1.5, 5)
    prob = strongly_convex_problem(5, 3, c, 1.0, np.full((5, 3), 1 / 3))
    assert prob.f_star == pytest.approx(_nested_minimum(prob.global_value), abs=1e-6)


def test_strongly_convex_lipschitz_covers_gradients():
    prob = strongly_convex_problem(1, 3, [1.0], 1.0, [[1 / 3] * 3])
    rng = np.random.default_rng(0)
    f = prob.agents[0]
    x, y = rng.dirichlet(np.ones(3), size=(2, 2000))
    ratio = np.abs(f(x) - f(y)) / np.linalg.norm(x - y, axis=1)
    assert ratio.max() <= f.lipschitz


def test_smoothed_nesterov_single_kink_folded_normal():
    # n = 1: h(x) = |x - 1|; E|m + mu Z| is the folded-normal mean
    mu, x = 0.3, 0.8
    m, s = x - 1.0, mu
    folded = s * math.sqrt(2 / math.pi) * math.exp(-m * m / (2 * s * s)) \
        + m * (1 - 2 * norm.cdf(-m / s))
    val, grad = smoothed_nesterov(np.array([x]), mu)
    assert val == pytest.approx(folded, rel=1e-12)
    assert grad[0] == pytest.approx(1 - 2 * norm.cdf(-m / s), rel=1e-12)


def test_smoothed_nesterov_against_monte_carlo():
    rng = np.random.default_rng(3)
    f = lambda z: nesterov_term(z)
    for n in (2, 3):
        x = rng.dirichlet(np.ones(n))
        val, _ = smoothed_nesterov(x, 0.2, scale=0.5)
        est, se = smoothed_value_mc(f, x, 0.2, 200_000, rng, scale=0.5)
        assert abs(est - val) <= 5 * se


def test_smoothed_quadratic_closed_form():
    # E||x + mu xi||^2 = ||x||^2 + mu^2 n
    rng = np.random.default_rng(1)
    x = np.array([0.2, 0.5, 0.3])
    est, se = smoothed_value_mc(lambda z: (z * z).sum(-1), x, 0.1, 200_000, rng)
    assert abs(est - (x @ x + 0.01 * 3)) <= 5 * se


def test_oracle_estimate_formula():
    f = lambda z: (z * z).sum(-1)
    z, xi, mu = np.array([1.0, 2.0]), np.array([0.5, -1.0]), 0.1
    expected = ((z + mu * xi) @ (z + mu * xi) - z @ z) / mu * xi
    np.testing.assert_allclose(oracle_estimate(f, z, mu, xi), expected, rtol=1e-14)
    with pytest.raises(ValueError):
        oracle_estimate(f, z, 0.0, xi)


def test_oracle_sample_deterministic_and_keyed():
    prob = nesterov_problem(2, 3, [1.0, 1.0])
    orc = GradientFreeOracle(np.array([1e-4, 1e-4]), 0.5, seed=9)
    z = np.full(3, 1 / 3)
    g1 = oracle_sample(orc, prob.agents[0], z, 0, 4, 2)
    assert np.array_equal(g1, oracle_sample(orc, prob.agents[0], z, 0, 4, 2))
    assert not np.array_equal(g1, oracle_sample(orc, prob.agents[0], z, 0, 5, 2))
    # direction t is the t-th block of the (trial seed, agent) stream
    block = direction_stream(mix_seed(9, 2), 1).standard_normal((4, 3))[3]
    np.testing.assert_array_equal(orc.direction(1, 3, 2, 3), math.sqrt(0.5) * block)


def test_oracle_rejects_bad_parameters():
    with pytest.raises(ValueError):
        GradientFreeOracle(np.array([0.0]))
    with pytest.raises(ValueError):
        GradientFreeOracle(np.array([1e-3]), direction_scale=0.0)


def test_sandwich_and_moments_pass_on_nesterov():
    rng = np.random.default_rng(12)
    prob = nesterov_problem(1, 3, [1.0])
    f = prob.agents[0]
    x = np.array([0.5, 0.3, 0.2])
    assert lemma4_sandwich_check(f, x, 1e-2, f.lipschitz, 50_000, rng).passed
    rep = oracle_moment_check(f, x, 1e-2, f.lipschitz, 50_000, rng,
                              exact_grad=lambda z: smoothed_nesterov(z, 1e-2)[1])
    assert rep.passed


def test_moment_check_without_exact_gradient():
    rng = np.random.default_rng(13)
    f = lambda z: (z * z).sum(-1)
    rep = oracle_moment_check(f, np.array([0.2, 0.8]), 1e-2, 2 * math.sqrt(2),
                              50_000, rng)
    assert rep.details["unbiased"]


def test_moment_check_detects_biased_gradient():
    rng = np.random.default_rng(14)
    f = lambda z: (z * z).sum(-1)
    rep = oracle_moment_check(f, np.array([0.2, 0.8]), 1e-2, 3.0, 50_000, rng,
                              exact_grad=lambda z: 2 * z + 0.5)
    assert rep.status == "fail"


def test_moment_check_needs_samples():
    with pytest.raises(ValueError):
        oracle_moment_check(lambda z: z.sum(-1), np.ones(2) / 2, 1e-2, 1.0, 100, 0)


def test_agent_values_stack():
    prob = nesterov_problem(2, 2, [1.0, 2.0])
    Z = np.array([[[0.5, 0.5], [2 / 3, 1 / 3]]])
    vals = prob.agent_values(Z)
    np.testing.assert_allclose(vals, [[1.0 * nesterov_term([0.5, 0.5]), 2.0 / 3]])
