"""
Mirror maps, Bregman divergences and the proximal mirror step.

Two maps ship: the Euclidean map phi(x) = ||x||^2 / 2 and negative entropy
phi(x) = sum x_d ln x_d on the probability simplex. Every array routine
accepts a batch of points along leading axes; the last axis is the
coordinate axis.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np


SIMPLEX_TOL = 1e-10


class DomainError(ValueError):
    """A point falls outside the domain an operation requires."""


@dataclass(frozen=True)
class DomainDescriptor:
    kind: str
    dimension: int
    lower: float | None = None
    upper: float | None = None
    interior_floor: float = 0.0

    def __post_init__(self):
        if self.kind not in ("simplex", "box", "full-space"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.kind == "box" and (self.lower is None or self.upper is None
                                   or self.lower > self.upper):
            raise ValueError("box domain needs lower <= upper")

    @classmethod
    def simplex(cls, dimension, interior_floor=0.0):
        return cls("simplex", dimension, interior_floor=interior_floor)

    def contains(self, x, tol=SIMPLEX_TOL):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension or not np.all(np.isfinite(x)):
            return False
        if self.kind == "simplex":
            return bool(np.all(np.abs(x.sum(-1) - 1.0) <= tol) and np.all(x >= 0.0))
        if self.kind == "box":
            return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))
        return True

    def project(self, v):
        """Euclidean projection onto the domain."""
        v = np.asarray(v, dtype=float)
        if self.kind == "simplex":
            return simplex_projection(v)
        if self.kind == "box":
            return np.clip(v, self.lower, self.upper)
        return v.copy()

    def center(self):
        if self.kind == "simplex":
            return np.full(self.dimension, 1.0 / self.dimension)
        if self.kind == "box":
            return np.full(self.dimension, 0.5 * (self.lower + self.upper))
        return np.zeros(self.dimension)

    def sample(self, rng, size=()):
        """Random domain points (uniform on simplex and box)."""
        shape = tuple(np.atleast_1d(size)) if size != () else ()
        if self.kind == "simplex":
            return rng.dirichlet(np.ones(self.dimension), size=shape or None)
        if self.kind == "box":
            return rng.uniform(self.lower, self.upper, size=shape + (self.dimension,))
        return rng.standard_normal(shape + (self.dimension,))


def simplex_projection(v):
    """
    Euclidean projection onto the probability simplex, sort-and-threshold.

    Works along the last axis. The descending sort is stable, so equal
    coordinates keep index order.
    """
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    u = -np.sort(-v, axis=-1, kind="stable")
    css = np.cumsum(u, axis=-1) - 1.0
    k = np.arange(1, n + 1)
    cond = u - css / k > 0
    rho = cond.sum(axis=-1, keepdims=True) - 1
    tau = np.take_along_axis(css, rho, axis=-1) / (rho + 1)
    return np.maximum(v - tau, 0.0)


class MirrorMap:
    """
    Distance-generating function with its Bregman divergence.

    Subclasses provide ``phi`` and ``grad_phi``; ``step`` defaults to a
    generic projected-gradient solve of the proximal subproblem.
    """

    name = "generic"

    def __init__(self, domain, sigma_phi, lipschitz_grad=None, diameter_sq=None,
                 diameter_is_surrogate=False):
        self.domain = domain
        self.dimension = domain.dimension
        self.sigma_phi = float(sigma_phi)
        self.lipschitz_grad = lipschitz_grad
        self.diameter_sq = diameter_sq
        self.diameter_is_surrogate = diameter_is_surrogate

    def phi(self, x):
        raise NotImplementedError

    def grad_phi(self, x):
        raise NotImplementedError

    def check_interior(self, y):
        pass

    def bregman(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.check_interior(y)
        return self.phi(x) - self.phi(y) - np.sum(self.grad_phi(y) * (x - y), axis=-1)

    def step(self, y, g, alpha):
        return projected_gradient_argmin(self, y, g, alpha)

    def __repr__(self):
        return f"{type(self).__name__}(dimension={self.dimension}, domain={self.domain.kind})"


class EuclideanMap(MirrorMap):
    """phi(x) = ||x||^2 / 2; the step is a Euclidean projection."""

    name = "euclidean"

    def __init__(self, domain):
        # sup over the simplex of ||x - y||^2 / 2 is attained at two vertices
        diam = 1.0 if domain.kind == "simplex" else None
        if domain.kind == "box":
            diam = 0.5 * domain.dimension * (domain.upper - domain.lower) ** 2
        super().__init__(domain, sigma_phi=1.0, lipschitz_grad=1.0, diameter_sq=diam)

    def phi(self, x):
        return 0.5 * np.sum(np.asarray(x) ** 2, axis=-1)

    def grad_phi(self, x):
        return np.asarray(x, dtype=float)

    def bregman(self, x, y):
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return 0.5 * np.sum(d * d, axis=-1)

    def step(self, y, g, alpha):
        return self.domain.project(np.asarray(y) - alpha * np.asarray(g))


class EntropyMap(MirrorMap):
    """
    Negative entropy on the epsilon-interior of the probability simplex.

    Strongly convex with modulus 1 and gradient-Lipschitz with constant
    1/epsilon there. The reported diameter ln(n/epsilon) is a finite
    surrogate for the unbounded divergence on the closed simplex.
    """

    name = "entropy"

    def __init__(self, dimension, floor=1e-12):
        if not (0 < floor < 1.0 / dimension):
            raise ValueError("floor must lie in (0, 1/n)")
        domain = DomainDescriptor.simplex(dimension, interior_floor=floor)
        super().__init__(domain, sigma_phi=1.0, lipschitz_grad=1.0 / floor,
                         diameter_sq=math.log(dimension / floor),
                         diameter_is_surrogate=True)
        self.floor = floor

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
        return terms.sum(axis=-1)

    def grad_phi(self, x):
        return np.log(np.asarray(x, dtype=float)) + 1.0

    def check_interior(self, y):
        if np.any(np.asarray(y) < self.floor):
            raise DomainError("entropy divergence needs y above the interior floor")

    def bregman(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.check_interior(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xlog = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0) / y), 0.0)
        return np.sum(xlog - x + y, axis=-1)

    def step(self, y, g, alpha):
        """Exponentiated-gradient step x ~ y exp(-alpha g), kept above the floor."""
        y = np.asarray(y, dtype=float)
        w = np.log(y) - alpha * np.asarray(g, dtype=float)
        w = w - w.max(axis=-1, keepdims=True)
        x = np.exp(w)
        x /= x.sum(axis=-1, keepdims=True)
        return clamp_to_floor(x, self.floor)


def clamp_to_floor(x, floor, passes=4):
    """Raise coordinates below ``floor`` to it and rescale the rest to sum 1."""
    x = np.asarray(x, dtype=float)
    for _ in range(passes):
        # only rows below the floor are touched, so batched points evolve
        # exactly as they would alone
        rows = np.any(x < floor, axis=-1, keepdims=True)
        if not rows.any():
            break
        low = x <= floor
        n_low = low.sum(axis=-1, keepdims=True)
        free = np.where(low, 0.0, x).sum(axis=-1, keepdims=True)
        x = np.where(rows, np.where(low, floor, x * (1.0 - n_low * floor) / free), x)
    return x


def bregman(mirror_map, x, y):
    return mirror_map.bregman(x, y)


def mirror_step(mirror_map, y, g, alpha):
    """argmin over the domain of alpha <g, x> + D(x, y)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return mirror_map.step(y, g, alpha)


def projected_gradient_argmin(mirror_map, y, g, alpha, tol=1e-10, max_iter=10_000):
    """
    Generic proximal-step solver: spectral projected gradient on
    F(x) = alpha <g, x> + D(x, y) with Euclidean projection onto the domain.
    Single point only.
    """
    y = np.asarray(y, dtype=float)
    g = np.asarray(g, dtype=float)
    dom = mirror_map.domain
    floor = dom.interior_floor
    gy = mirror_map.grad_phi(y)

    def project(v):
        p = dom.project(v)
        if floor > 0:
            p = clamp_to_floor(p, floor)
        return p

    def F(x):
        return alpha * g @ x + mirror_map.bregman(x, y)

    def dF(x):
        return alpha * g + mirror_map.grad_phi(x) - gy

    x = project(y)
    grad = dF(x)
    step = 1.0
    fx = F(x)
    for _ in range(max_iter):
        d = project(x - step * grad) - x
        if np.max(np.abs(d)) <= tol * max(step, 1.0):
            break
        # Armijo backtracking along the projected direction
        lam, slope = 1.0, grad @ d
        while True:
            x_new = x + lam * d
            f_new = F(x_new)
            if f_new <= fx + 1e-4 * lam * slope or lam < 1e-12:
                break
            lam *= 0.5
        grad_new = dF(x_new)
        s, r = x_new - x, grad_new - grad
        sr = s @ r
        step = min(max(s @ s / sr, 1e-12), 1e12) if sr > 0 else 1e12
        x, grad, fx = x_new, grad_new, f_new
    return x


def three_point_check(mirror_map, x, y, z):
    """<grad phi(x) - grad phi(y), y - z> - (D(z,x) - D(z,y) - D(y,x))."""
    x, y, z = (np.asarray(a, dtype=float) for a in (x, y, z))
    lhs = np.sum((mirror_map.grad_phi(x) - mirror_map.grad_phi(y)) * (y - z), axis=-1)
    rhs = (mirror_map.bregman(z, x) - mirror_map.bregman(z, y)
           - mirror_map.bregman(y, x))
    return lhs - rhs


def separate_convexity_check(mirror_map, x, ys, thetas):
    """D(x, sum theta_j y_j) - sum theta_j D(x, y_j); non-positive for valid maps."""
    thetas = np.asarray(thetas, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(thetas < 0) or abs(thetas.sum() - 1.0) > 1e-12:
        raise ValueError("thetas must be a convex combination")
    if len(thetas) != len(ys):
        raise ValueError("one weight per point required")
    mix = np.tensordot(thetas, ys, axes=1)
    each = np.array([mirror_map.bregman(x, yj) for yj in ys])
    return mirror_map.bregman(x, mix) - thetas @ each
