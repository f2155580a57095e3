"""Feasible-set factories.

Each factory returns a :class:`~fenchelgame.core.FeasibleSet` whose
``bregman_project(c, g, step, geometry)`` solves

    argmin_{x in K}  step * <x, g> + V_c(x)

for the geometries it supports and raises ``UnsupportedGeometry`` otherwise.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from .core import BregmanGeometry, FeasibleSet, euclidean_geometry
from .errors import ProjectionFailure, UnsupportedGeometry

__all__ = [
    "unconstrained",
    "nonnegative_orthant",
    "simplex",
    "make_ball_set",
    "project_simplex",
    "weighted_ball_projection",
]

_EUCLID = euclidean_geometry()


def _unconstrained_step(c, g, step, geometry):
    """Closed-form minimizer of step*<x,g> + V_c(x) over R^d."""
    kind = geometry.kind
    if kind == "euclidean":
        return c - step * g
    if kind == "weighted_euclidean":
        return c - step * g / geometry.weights
    raise UnsupportedGeometry(f"no unconstrained step for {kind} geometry")


def unconstrained(dim: int) -> FeasibleSet:
    """K = R^d. Gauge is identically 0 and there is no linear oracle."""

    def project(c, g, step, geometry: BregmanGeometry = _EUCLID):
        return _unconstrained_step(np.asarray(c, float), np.asarray(g, float),
                                   float(step), geometry)

    return FeasibleSet(
        dim=dim,
        contains=lambda x, tol=1e-9: bool(np.all(np.isfinite(x))),
        bregman_project=project,
        gauge=lambda x: 0.0,
        unconstrained=True,
        name="unconstrained",
    )


def nonnegative_orthant(dim: int) -> FeasibleSet:
    """K = {x : x >= 0}; for dim = 1 this is the half-line [0, inf)."""

    def project(c, g, step, geometry: BregmanGeometry = _EUCLID):
        u = _unconstrained_step(np.asarray(c, float), np.asarray(g, float),
                                float(step), geometry)
        # separable geometries: the projection clamps coordinatewise
        return np.maximum(u, 0.0)

    return FeasibleSet(
        dim=dim,
        contains=lambda x, tol=1e-9: bool(np.all(np.asarray(x) >= -tol)),
        bregman_project=project,
        name="nonnegative_orthant",
    )


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def simplex(dim: int) -> FeasibleSet:
    """Probability simplex. Supports Euclidean and entropy geometries.

    The linear oracle returns the vertex with the smallest coefficient,
    breaking ties toward the lowest index. The set does not contain the
    origin, so there is no gauge.
    """

    def project(c, g, step, geometry: BregmanGeometry = _EUCLID):
        c = np.asarray(c, float)
        g = np.asarray(g, float)
        if geometry.kind == "euclidean":
            return project_simplex(c - step * g)
        if geometry.kind == "entropy":
            # multiplicative weights: x ~ c * exp(-step * g)
            with np.errstate(divide="ignore"):
                logits = np.log(c) - step * g
            return np.exp(logits - logsumexp(logits))
        raise UnsupportedGeometry(f"simplex does not support {geometry.kind}")

    def oracle(g):
        x = np.zeros(dim)
        x[int(np.argmin(g))] = 1.0
        return x

    def contains(x, tol=1e-9):
        x = np.asarray(x)
        return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol * dim)

    return FeasibleSet(
        dim=dim,
        contains=contains,
        bregman_project=project,
        linear_oracle=oracle,
        # KL from the uniform point is at most log d
        divergence_bound_D=math.log(dim) if dim > 1 else 0.0,
        name="simplex",
    )


def weighted_ball_projection(u, w, radius, tol=1e-12, max_iter=200):
    """argmin_{||x|| <= r} sum_i w_i (x_i - u_i)^2 / 2.

    Solved on the dual scale: x(lam) = w*u / (w + lam), with lam >= 0 found
    by safeguarded Newton on 1/||x(lam)|| - 1/r, which is nearly linear.

    Raises
    ------
    ProjectionFailure
        If the multiplier is not bracketed to ``tol`` within ``max_iter``.
    """
    u = np.asarray(u, float)
    w = np.asarray(w, float)
    if np.linalg.norm(u) <= radius:
        return u.copy()
    wu = w * u
    # ||x(lam)|| <= ||w*u|| / lam, so this upper bracket is feasible
    lo, hi = 0.0, float(np.linalg.norm(wu)) / radius
    lam = 0.5 * (lo + hi)
    for _ in range(max_iter):
        x = wu / (w + lam)
        nx = float(np.linalg.norm(x))
        phi = 1.0 / nx - 1.0 / radius
        if phi < 0:
            lo = lam
        else:
            hi = lam
        if hi - lo <= tol * max(1.0, hi) or abs(nx - radius) <= tol * radius:
            break
        # d/dlam (1/||x||) = sum x_i^2 / (w_i + lam) / ||x||^3
        dphi = float(np.sum(x * x / (w + lam))) / nx**3
        step = lam - phi / dphi if dphi > 0 else -1.0
        lam = step if lo < step < hi else 0.5 * (lo + hi)
    else:
        raise ProjectionFailure("ball projection did not converge")
    x = wu / (w + lam)
    # remove the last rounding excess so membership holds to machine precision
    nx = float(np.linalg.norm(x))
    if nx > radius:
        x *= radius / nx
    return x


def make_ball_set(dim: int, p: float = 2.0, radius: float = 1.0) -> FeasibleSet:
    """The l_p ball {x : ||x||_p <= r} for p in (1, inf].

    Gauge is ||x||_p / r. The linear oracle uses the dual-norm formula
    x = -r sign(g) |g|^(q-1) / ||g||_q^(q-1) with 1/p + 1/q = 1, which is
    -r g / ||g||_2 for p = 2; at g = 0 every point is optimal and the origin
    is returned. Bregman projection is available for p = 2 under Euclidean
    and weighted Euclidean geometries.
    """
    p = float(p)
    if not p > 1:
        raise ValueError("p must exceed 1")
    r = float(radius)
    if not r > 0:
        raise ValueError("radius must be positive")
    q = 1.0 if math.isinf(p) else p / (p - 1.0)

    def pnorm(x):
        return float(np.linalg.norm(np.asarray(x, float), ord=p))

    def gauge(x):
        return pnorm(x) / r

    def oracle(g):
        g = np.asarray(g, float)
        if not np.any(g):
            return np.zeros(dim)
        if math.isinf(p):
            return -r * np.sign(g)
        if p == 2.0:
            return -r * g / np.linalg.norm(g)
        a = np.abs(g)
        scale = a.max()
        a = a / scale  # avoid overflow in the powers
        qn = float(np.sum(a**q) ** (1.0 / q))
        return -r * np.sign(g) * (a / qn) ** (q - 1.0)

    def project(c, g, step, geometry: BregmanGeometry = _EUCLID):
        if p != 2.0:
            raise UnsupportedGeometry("Bregman projection needs p = 2")
        c = np.asarray(c, float)
        g = np.asarray(g, float)
        if geometry.kind == "euclidean":
            u = c - step * g
            nu = float(np.linalg.norm(u))
            return u if nu <= r else u * (r / nu)
        if geometry.kind == "weighted_euclidean":
            w = geometry.weights
            return weighted_ball_projection(c - step * g / w, w, r)
        raise UnsupportedGeometry(f"ball does not support {geometry.kind}")

    return FeasibleSet(
        dim=dim,
        contains=lambda x, tol=1e-9: gauge(x) <= 1.0 + tol,
        bregman_project=project,
        linear_oracle=oracle,
        gauge=gauge,
        # V_x(x*) <= ||x - x*||^2 / 2 <= 2 r^2 for p = 2 in the Euclidean case
        divergence_bound_D=2.0 * r * r if p == 2.0 else None,
        # ||x||_p^2 is 2(p-1)-strongly convex in l_p, hence in l_2, for p <= 2
        gauge_sq_modulus=2.0 * (p - 1.0) / (r * r) if p <= 2.0 else None,
        name=f"l{p:g}_ball(r={r:g})",
    )
