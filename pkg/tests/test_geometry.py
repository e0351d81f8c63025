import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from drgfmd.geometry import (DomainDescriptor, DomainError, EntropyMap, EuclideanMap,
                             MirrorMap, simplex_projection, mirror_step, bregman,
                             projected_gradient_argmin, three_point_check,
                             separate_convexity_check, clamp_to_floor)


def test_projection_examples():
    np.testing.assert_allclose(simplex_projection([0.5, 0.5]), [0.5, 0.5])
    np.testing.assert_allclose(simplex_projection([2.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(simplex_projection([1.0, 1.0, 1.0]), [1 / 3] * 3)
    np.testing.assert_allclose(simplex_projection([0.3, 0.1, -0.5]), [0.6, 0.4, 0.0])


def test_projection_ties_are_symmetric():
    x = simplex_projection([0.7, 0.7, 0.1])
    assert x[0] == x[1]


def _grid_projection(v, steps=400):
    """Brute-force nearest point on a barycentric grid, refined locally."""
    n = len(v)
    best, best_d = None, math.inf
    for k in itertools.product(range(steps + 1), repeat=n - 1):
        if sum(k) > steps:
            continue
        x = np.array(k + (steps - sum(k),)) / steps
        d = ((x - v) ** 2).sum()
        if d < best_d:
            best, best_d = x, d
    return best


def test_projection_against_grid_oracle():
    rng = np.random.default_rng(11)
    for _ in range(20):
        v = rng.normal(0, 1, 3)
        assert np.abs(simplex_projection(v) - _grid_projection(v)).max() <= 1.5 / 400


@given(arrays(np.float64, st.integers(1, 8), elements=st.floats(-50, 50)))
@settings(max_examples=200, deadline=None)
def test_projection_variational_inequality(v):
    x = simplex_projection(v)
    assert abs(x.sum() - 1) <= 1e-9 and x.min() >= 0
    r = v - x
    # <v - x, z - x> <= 0 for every vertex z characterizes the projection
    assert r.max() - r @ x <= 1e-9 * max(1.0, np.abs(v).max())


def test_projection_is_idempotent():
    rng = np.random.default_rng(2)
    x = rng.dirichlet(np.ones(5), size=100)
    np.testing.assert_allclose(simplex_projection(x), x, atol=1e-15)


def test_entropy_bregman_example():
    m = EntropyMap(2)
    # KL((0.5, 0.5) || (0.25, 0.75))
    expected = 0.5 * math.log(2) + 0.5 * math.log(2 / 3)
    assert m.bregman([0.5, 0.5], [0.25, 0.75]) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.143841, abs=1e-6)


def test_entropy_step_example():
    x = mirror_step(EntropyMap(2), [0.5, 0.5], [math.log(3), 0.0], 1.0)
    np.testing.assert_allclose(x, [0.25, 0.75], atol=1e-15)


def test_zero_gradient_step_is_identity():
    y = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(mirror_step(EntropyMap(3), y, np.zeros(3), 0.7), y,
                               atol=1e-15)
    np.testing.assert_allclose(
        mirror_step(EuclideanMap(DomainDescriptor.simplex(3)), y, np.zeros(3), 0.7), y)


def test_entropy_divergence_below_floor_raises():
    with pytest.raises(DomainError):
        EntropyMap(2).bregman([0.5, 0.5], [1.0, 0.0])


def test_nonpositive_alpha_rejected():
    with pytest.raises(ValueError):
        mirror_step(EntropyMap(2), [0.5, 0.5], [1.0, 0.0], 0.0)


def test_entropy_step_stays_above_floor():
    m = EntropyMap(3, floor=1e-12)
    x = m.step(np.array([0.5, 0.5 - 1e-12, 1e-12]), np.array([0.0, 0.0, 1e6]), 1.0)
    assert x.min() >= 1e-12 and abs(x.sum() - 1) < 1e-12


def test_clamp_to_floor():
    x = clamp_to_floor(np.array([0.0, 0.4, 0.6]), 0.01)
    assert x[0] == 0.01 and abs(x.sum() - 1) < 1e-15


class _GenericEntropy(MirrorMap):
    """Negative entropy without the closed-form step."""

    def __init__(self, n):
        super().__init__(DomainDescriptor.simplex(n, interior_floor=1e-12), 1.0)

    def phi(self, x):
        return np.sum(x * np.log(x), axis=-1)

    def grad_phi(self, x):
        return np.log(x) + 1.0


def test_generic_map_uses_numerical_solver():
    y, g = np.array([0.2, 0.3, 0.5]), np.array([1.0, -0.5, 0.2])
    got = _GenericEntropy(3).step(y, g, 0.5)
    np.testing.assert_allclose(got, EntropyMap(3).step(y, g, 0.5), atol=1e-7)


def test_euclidean_step_against_numerical_argmin():
    rng = np.random.default_rng(5)
    m = EuclideanMap(DomainDescriptor.simplex(4))
    for _ in range(50):
        y, g = rng.dirichlet(np.ones(4)), rng.normal(0, 1, 4)
        np.testing.assert_allclose(m.step(y, g, 0.3),
                                   projected_gradient_argmin(m, y, g, 0.3), atol=1e-7)


def test_box_domain():
    dom = DomainDescriptor("box", 2, lower=0.0, upper=1.0)
    np.testing.assert_array_equal(dom.project([2.0, -1.0]), [1.0, 0.0])
    assert dom.contains([0.5, 0.5]) and not dom.contains([1.5, 0.5])
    with pytest.raises(ValueError):
        DomainDescriptor("box", 2, lower=1.0, upper=0.0)


def test_separate_convexity_rejects_bad_weights():
    m = EntropyMap(2)
    with pytest.raises(ValueError):
        separate_convexity_check(m, [0.5, 0.5], [[0.5, 0.5], [0.2, 0.8]], [0.7, 0.7])


def test_separate_convexity_holds():
    rng = np.random.default_rng(9)
    for m in (EntropyMap(3), EuclideanMap(DomainDescriptor.simplex(3))):
        for _ in range(100):
            x = rng.dirichlet(np.ones(3))
            ys = rng.dirichlet(np.ones(3), size=3)
            assert separate_convexity_check(m, x, ys, rng.dirichlet(np.ones(3))) <= 1e-12


def test_bregman_nonnegative_and_zero_on_diagonal():
    rng = np.random.default_rng(4)
    x, y = rng.dirichlet(np.ones(5), size=(2, 500))
    for m in (EntropyMap(5), EuclideanMap(DomainDescriptor.simplex(5))):
        assert bregman(m, x, y).min() >= -1e-15
        np.testing.assert_allclose(bregman(m, x, x), 0.0, atol=1e-15)
