"""Player strategies for the Fenchel game.

y-player strategies return y_t as a gradient of f at a point the trace
already holds, which doubles as the Fenchel-Young witness for f*(y_t).
x-player strategies see y_t before moving.

Step sizes are stored per unit weight: mirror descent and OGD use the
product gamma_t * alpha_t as the actual step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (
    BregmanGeometry,
    FeasibleSet,
    Objective,
    WeightSchedule,
    euclidean_geometry,
)
from .errors import MissingOracle, ProxUnavailable, RequiresStrongConvexity

__all__ = [
    "RoundContext",
    "LearnerConfig",
    "ConstantGamma",
    "Nesterov83Gamma",
    "corollary_gamma",
    "check_gamma_schedule",
    "Regularizer",
    "half_squared_norm",
    "gauge_squared",
    "geometry_regularizer",
    "ZeroTerm",
    "L1Term",
    "oftl_y_step",
    "ftl_y_step",
    "mirror_descent_x_step",
    "ogd_x_step",
    "btrl_x_step",
    "prox_md_x_step",
    "btl_strongly_convex_x_step",
    "fw_gauge_x_step",
]


@dataclass(frozen=True)
class RoundContext:
    """State visible to the players at round t.

    ``y_weighted_sum`` is sum_{s<t} alpha_s y_s when the y-player moves and
    sum_{s<=t} alpha_s y_s when the x-player moves.
    """

    t: int
    alpha_t: float
    A_t: float
    A_prev: float
    x_prev: np.ndarray
    xbar_prev: np.ndarray
    xtilde_t: np.ndarray
    y_weighted_sum: np.ndarray


# ---------------------------------------------------------------------------
# step-size schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantGamma:
    """gamma_t = value for every t."""

    value: float

    def __call__(self, t: int) -> float:
        return self.value


@dataclass(frozen=True)
class Nesterov83Gamma:
    """gamma_t = (t + 1) / (8 L t), the schedule under which optimistic
    FTL + OGD reproduces Nesterov's 1983 method with theta = 1/(4L)."""

    L: float

    def __call__(self, t: int) -> float:
        return (t + 1) / (8.0 * self.L * t)


def corollary_gamma(L: float) -> ConstantGamma:
    """gamma_t = 1/(4L), the largest step the O(1/T^2) guarantee allows."""
    return ConstantGamma(1.0 / (4.0 * L))


def check_gamma_schedule(gamma: Callable[[int], float], T: int,
                         L: Optional[float] = None, C: Optional[float] = None) -> bool:
    """Check that gamma is positive and non-increasing on 1..T and, when
    ``L`` is given, that 1/(C L) <= gamma_t <= 1/(4L)."""
    g = np.array([gamma(t) for t in range(1, T + 1)])
    ok = bool(np.all(g > 0) and np.all(np.diff(g) <= 0))
    if L is not None:
        ok = ok and bool(np.all(g <= 1.0 / (4.0 * L) * (1 + 1e-15)))
        if C is not None:
            ok = ok and bool(np.all(g >= 1.0 / (C * L)))
    return ok


# ---------------------------------------------------------------------------
# regularizers and composite terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Regularizer:
    """A regularizer R for BTRL, strongly convex with modulus ``beta``
    with respect to ``norm``."""

    kind: str
    value: Callable[[np.ndarray], float]
    beta: float
    norm: Callable[[np.ndarray], float]
    geometry: Optional[BregmanGeometry] = None

    def minimizer(self, dim: int) -> np.ndarray:
        if self.geometry is not None:
            return self.geometry.center(dim)
        return np.zeros(dim)


def half_squared_norm() -> Regularizer:
    """R(x) = ||x||^2 / 2."""
    return Regularizer(
        kind="half_squared_norm",
        value=lambda x: 0.5 * float(x @ x),
        beta=1.0,
        norm=lambda v: float(np.linalg.norm(v)),
    )


def gauge_squared(set: FeasibleSet, beta: Optional[float] = None) -> Regularizer:
    """R(x) = gauge_K(x)^2, the Frank-Wolfe regularizer.

    ``beta`` defaults to the set's ``gauge_sq_modulus`` (2(p-1)/r^2 for an
    l_p ball with p in (1, 2], in the Euclidean norm).
    """
    if set.gauge is None:
        raise MissingOracle("gauge-squared regularizer needs a gauge")
    if beta is None:
        beta = getattr(set, "gauge_sq_modulus", None)
    if beta is None:
        raise ValueError("strong convexity of gauge^2 unknown for this set")
    gauge = set.gauge
    return Regularizer(
        kind="gauge_squared",
        value=lambda x: float(gauge(x)) ** 2,
        beta=float(beta),
        norm=lambda v: float(np.linalg.norm(v)),
    )


def geometry_regularizer(geometry: BregmanGeometry) -> Regularizer:
    """R = phi, the geometry's 1-strongly convex potential."""
    return Regularizer(
        kind="custom",
        value=geometry.potential,
        beta=1.0,
        norm=geometry.norm,
        geometry=geometry,
    )


@dataclass(frozen=True)
class ZeroTerm:
    """psi = 0; its prox is the identity."""

    def value(self, x) -> float:
        return 0.0

    def prox(self, v, step):
        return v


@dataclass(frozen=True)
class L1Term:
    """psi(x) = lam * ||x||_1 with the soft-threshold prox."""

    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")

    def value(self, x) -> float:
        return self.lam * float(np.sum(np.abs(x)))

    def prox(self, v, step):
        return np.sign(v) * np.maximum(np.abs(v) - step * self.lam, 0.0)


@dataclass(frozen=True)
class LearnerConfig:
    """Parameters shared by the x-player strategies.

    Parameters
    ----------
    gamma_schedule : callable, optional
        Per-unit-weight step gamma_t (mirror descent, OGD, prox).
    eta : float, optional
        BTRL and Frank-Wolfe learning rate.
    geometry : BregmanGeometry
        Mirror-descent geometry.
    regularizer : Regularizer, optional
        BTRL regularizer; defaults to ||x||^2 / 2.
    """

    gamma_schedule: Optional[Callable[[int], float]] = None
    eta: Optional[float] = None
    geometry: BregmanGeometry = field(default_factory=euclidean_geometry)
    regularizer: Optional[Regularizer] = None

    def gamma(self, t: int) -> float:
        if self.gamma_schedule is None:
            raise ValueError("this strategy needs a gamma schedule")
        return float(self.gamma_schedule(t))

    def resolved_regularizer(self) -> Regularizer:
        return self.regularizer if self.regularizer is not None else half_squared_norm()


# ---------------------------------------------------------------------------
# y-player
# ---------------------------------------------------------------------------


def oftl_y_step(obj: Objective, ctx: RoundContext) -> np.ndarray:
    """Optimistic FTL: y_t = grad f(x~_t).

    Replaying the last loss as a hint makes the leader's argmax the gradient
    at the hint-reweighted average x~_t.
    """
    return obj.gradient(ctx.xtilde_t)


def ftl_y_step(obj: Objective, ctx: RoundContext) -> np.ndarray:
    """Follow the leader: y_t = grad f(x_bar_{t-1})."""
    return obj.gradient(ctx.xbar_prev)


# ---------------------------------------------------------------------------
# x-player
# ---------------------------------------------------------------------------


def mirror_descent_x_step(cfg: LearnerConfig, set: FeasibleSet,
                          ctx: RoundContext, y_t) -> np.ndarray:
    """argmin_{x in K} gamma_t <x, alpha_t y_t> + V_{x_{t-1}}(x)."""
    step = cfg.gamma(ctx.t) * ctx.alpha_t
    return set.bregman_project(ctx.x_prev, y_t, step, cfg.geometry)


def ogd_x_step(cfg: LearnerConfig, ctx: RoundContext, y_t) -> np.ndarray:
    """x_t = x_{t-1} - gamma_t alpha_t y_t."""
    step = cfg.gamma(ctx.t) * ctx.alpha_t
    return ctx.x_prev - step * y_t


def btrl_x_step(cfg: LearnerConfig, set: FeasibleSet, ctx: RoundContext,
                y_t) -> np.ndarray:
    """Be-the-regularized-leader:
    argmin_{x in K} <x, sum_{s<=t} alpha_s y_s> + R(x) / eta.

    With R = V_z for the regularizer's minimizer z this is a Bregman
    projection from z with step eta; R = gauge^2 is delegated to the
    Frank-Wolfe step.
    """
    if cfg.eta is None:
        raise ValueError("BTRL needs eta")
    reg = cfg.resolved_regularizer()
    S = ctx.y_weighted_sum
    if reg.kind == "gauge_squared":
        return fw_gauge_x_step(set, cfg.eta, ctx, y_t)
    if reg.kind == "half_squared_norm":
        geometry = euclidean_geometry()
    else:
        geometry = reg.geometry
    z = reg.minimizer(set.dim)
    return set.bregman_project(z, S, cfg.eta, geometry)


def prox_md_x_step(cfg: LearnerConfig, psi, ctx: RoundContext, y_t) -> np.ndarray:
    """x_t = prox_{alpha_t gamma_t psi}(x_{t-1} - alpha_t gamma_t y_t)."""
    prox = getattr(psi, "prox", None)
    if prox is None:
        raise ProxUnavailable(f"{type(psi).__name__} has no proximal map")
    step = cfg.gamma(ctx.t) * ctx.alpha_t
    return prox(ctx.x_prev - step * y_t, step)


def btl_strongly_convex_x_step(obj: Objective, schedule: WeightSchedule,
                               ctx: RoundContext, y_t,
                               set: Optional[FeasibleSet] = None) -> np.ndarray:
    """Be-the-leader on the losses <x, y_s> + (mu/2)||x||^2, s = 0..t.

    The warmup loss alpha_0 (mu/2)||x||^2 makes the cumulative loss
    <x, S_t> + (mu A~_t / 2)||x||^2, minimized at -S_t / (mu A~_t), or at
    its Euclidean projection when ``set`` is constrained.
    """
    mu = obj.strong_convexity_mu
    if not mu > 0:
        raise RequiresStrongConvexity("strongly convex BTL needs mu > 0")
    if ctx.t == 0:
        return np.zeros(obj.dim)
    scale = mu * schedule.tilde_cumulative_at(ctx.t)
    S = ctx.y_weighted_sum
    if set is None or set.unconstrained:
        return -S / scale
    return set.bregman_project(np.zeros(obj.dim), S, 1.0 / scale,
                               euclidean_geometry())


def fw_gauge_x_step(set: FeasibleSet, eta: float, ctx: RoundContext,
                    y_t) -> np.ndarray:
    """BTRL with R = gauge^2, solved by one linear-oracle call.

    Writing x = rho * v with v on the boundary, the leader objective is
    rho <v, S_t> + rho^2 / eta. The inner minimum is the oracle point and
    the outer one is rho = clip(-eta <v, S_t> / 2, 0, 1). A zero sum S_t
    leaves only rho^2 / eta, so the origin is played.
    """
    if set.gauge is None or set.linear_oracle is None:
        raise MissingOracle("Frank-Wolfe step needs a gauge and a linear oracle")
    S = ctx.y_weighted_sum
    if not np.any(S):
        return np.zeros(set.dim)
    v = set.linear_oracle(S)
    rho = min(max(-eta * float(v @ S) / 2.0, 0.0), 1.0)
    return rho * v
