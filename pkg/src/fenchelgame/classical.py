"""Classical first-order recursions written directly, without the game.

Each function here implements a known method as its textbook recursion so
that it can be compared round by round with the game run that derives it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (
    BregmanGeometry,
    FeasibleSet,
    Objective,
    WeightSchedule,
    euclidean_geometry,
    make_schedule,
)
from .sets import unconstrained

__all__ = [
    "ClassicalState",
    "EquivalenceReport",
    "nesterov83_run",
    "heavy_ball_run",
    "heavy_ball_momentum",
    "nesterov_1mem_run",
    "nesterov_infmem_run",
    "accel_prox_run",
    "accel_fw_run",
    "check_equivalence",
]


@dataclass
class ClassicalState:
    """Iterate registers of a classical run.

    Arrays hold one row per round, starting at round 0 where defined;
    ``z`` for the two-sequence methods starts at z_1 (``z0`` separately).
    """

    method: str
    w: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    x: Optional[np.ndarray] = None
    xbar: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)

    @property
    def output(self) -> np.ndarray:
        """The method's final answer."""
        if self.w is not None:
            return self.w[-1]
        return self.xbar[-1]


def nesterov83_run(obj: Objective, x0, theta: float, T: int) -> ClassicalState:
    """Nesterov's 1983 method.

    w_t = z_{t-1} - theta grad f(z_{t-1}),
    z_t = w_t + ((t - 1)/(t + 2)) (w_t - w_{t-1}), with w_0 = z_0 = x0.

    Returns ``w`` and ``z`` as (T+1, d) arrays including round 0.
    """
    if theta > 1.0 / obj.smoothness_L:
        warnings.warn("theta exceeds 1/L; the method may diverge", stacklevel=2)
    w_prev = np.array(x0, dtype=float)
    z = w_prev.copy()
    ws, zs = [w_prev.copy()], [z.copy()]
    for t in range(1, T + 1):
        w = z - theta * obj.gradient(z)
        z = w + ((t - 1) / (t + 2)) * (w - w_prev)
        ws.append(w)
        zs.append(z)
        w_prev = w
    return ClassicalState("nesterov83", w=np.array(ws), z=np.array(zs),
                          params={"theta": theta})


def heavy_ball_momentum(schedule: WeightSchedule, t: int) -> float:
    """Momentum coefficient alpha_t A_{t-2} / (A_t alpha_{t-1}), 0 for t <= 2."""
    if t <= 2:
        return 0.0
    return (schedule.weight_at(t) * schedule.cumulative_at(t - 2)
            / (schedule.cumulative_at(t) * schedule.weight_at(t - 1)))


def heavy_ball_run(obj: Objective, x0, gamma_schedule: Callable[[int], float],
                   schedule: Optional[WeightSchedule] = None, T: int = 100) -> ClassicalState:
    """Heavy-ball recursion on the averages:

    x_bar_t = x_bar_{t-1} - (gamma_t alpha_t^2 / A_t) grad f(x_bar_{t-1})
              + m_t (x_bar_{t-1} - x_bar_{t-2}),

    with m_t from :func:`heavy_ball_momentum` and x_bar_0 = x0.
    """
    schedule = schedule or make_schedule("linear")
    xb = [np.array(x0, dtype=float)]
    for t in range(1, T + 1):
        a, A = schedule.weight_at(t), schedule.cumulative_at(t)
        step = gamma_schedule(t) * a * a / A
        nxt = xb[-1] - step * obj.gradient(xb[-1])
        m = heavy_ball_momentum(schedule, t)
        if m:
            nxt = nxt + m * (xb[-1] - xb[-2])
        xb.append(nxt)
    return ClassicalState("heavy_ball", xbar=np.array(xb))


def _two_sequence(obj, x0, T, update):
    """Shared skeleton of the beta_t = 2/(t+1) methods.

    z_t = (1 - beta_t) w_{t-1} + beta_t x_{t-1}; x_t = update(t, z_t, x_{t-1});
    w_t = (1 - beta_t) w_{t-1} + beta_t x_t.
    """
    x = np.array(x0, dtype=float)
    w = x.copy()
    ws, zs, xs = [w.copy()], [], [x.copy()]
    for t in range(1, T + 1):
        beta = 2.0 / (t + 1)
        z = (1.0 - beta) * w + beta * x
        x = update(t, z, x)
        w = (1.0 - beta) * w + beta * x
        ws.append(w)
        zs.append(z)
        xs.append(x)
    return np.array(ws), np.array(zs), np.array(xs)


def nesterov_1mem_run(obj: Objective, set: Optional[FeasibleSet] = None,
                      geometry: Optional[BregmanGeometry] = None, x0=None,
                      T: int = 100) -> ClassicalState:
    """One-memory accelerated method (mirror-descent option):

    x_t = argmin_{x in K} gamma'_t <grad f(z_t), x> + V_{x_{t-1}}(x),
    gamma'_t = t / (4L).
    """
    set = set or unconstrained(obj.dim)
    geometry = geometry or euclidean_geometry()
    x0 = np.zeros(obj.dim) if x0 is None else x0
    L = obj.smoothness_L

    def update(t, z, x_prev):
        return set.bregman_project(x_prev, obj.gradient(z), t / (4.0 * L), geometry)

    w, z, x = _two_sequence(obj, x0, T, update)
    return ClassicalState("nesterov_1mem", w=w, z=z, x=x)


def nesterov_infmem_run(obj: Objective, set: Optional[FeasibleSet] = None,
                        eta: Optional[float] = None, x0=None, T: int = 100) -> ClassicalState:
    """Infinite-memory accelerated method (regularized-leader option):

    x_t = argmin_{x in K} sum_{s<=t} s <x, grad f(z_s)> + ||x||^2 / (2 eta),
    eta = 1/(4L) by default.
    """
    set = set or unconstrained(obj.dim)
    eta = 1.0 / (4.0 * obj.smoothness_L) if eta is None else eta
    x0 = np.zeros(obj.dim) if x0 is None else x0
    geometry = euclidean_geometry()
    origin = np.zeros(obj.dim)
    acc = np.zeros(obj.dim)

    def update(t, z, x_prev):
        nonlocal acc
        acc = acc + t * obj.gradient(z)
        return set.bregman_project(origin, acc, eta, geometry)

    w, z, x = _two_sequence(obj, x0, T, update)
    return ClassicalState("nesterov_infmem", w=w, z=z, x=x, params={"eta": eta})


def accel_prox_run(obj: Objective, psi, x0=None, T: int = 100,
                   gamma: Optional[float] = None) -> ClassicalState:
    """Accelerated proximal method with alpha_t = t:

    x_t = prox_{t gamma psi}(x_{t-1} - t gamma grad f(z_t)), gamma = 1/(4L).
    """
    gamma = 1.0 / (4.0 * obj.smoothness_L) if gamma is None else gamma
    x0 = np.zeros(obj.dim) if x0 is None else x0

    def update(t, z, x_prev):
        step = gamma * t
        return psi.prox(x_prev - step * obj.gradient(z), step)

    w, z, x = _two_sequence(obj, x0, T, update)
    return ClassicalState("accel_prox", w=w, z=z, x=x, xbar=w, params={"gamma": gamma})


def accel_fw_run(obj: Objective, set: FeasibleSet, eta: Optional[float] = None,
                 x0=None, T: int = 100) -> ClassicalState:
    """Accelerated Frank-Wolfe with the gauge-squared regularizer.

    With S_t = sum_{s<=t} s grad f(z_s) and v_t = LMO(S_t), plays
    x_t = clip(-eta <v_t, S_t> / 2, 0, 1) v_t. One oracle call per round.
    """
    eta = 1.0 / (4.0 * obj.smoothness_L) if eta is None else eta
    x0 = np.zeros(obj.dim) if x0 is None else x0
    acc = np.zeros(obj.dim)

    def update(t, z, x_prev):
        nonlocal acc
        acc = acc + t * obj.gradient(z)
        if not np.any(acc):
            return np.zeros(obj.dim)
        v = set.linear_oracle(acc)
        return min(max(-eta * float(v @ acc) / 2.0, 0.0), 1.0) * v

    w, z, x = _two_sequence(obj, x0, T, update)
    return ClassicalState("accel_fw", w=w, z=z, x=x, params={"eta": eta})


@dataclass(frozen=True)
class EquivalenceReport:
    """Round-by-round comparison of two iterate sequences."""

    deviations: np.ndarray
    rel_tol: float

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviations)) if self.deviations.size else 0.0

    @property
    def worst_round(self) -> int:
        return int(np.argmax(self.deviations)) if self.deviations.size else 0

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.rel_tol


def check_equivalence(seq_a, seq_b, rel_tol: float = 1e-9) -> EquivalenceReport:
    """Per-round deviation ||a_t - b_t|| / (1 + ||b_t||) between two
    sequences of equal shape."""
    a = np.atleast_2d(np.asarray(seq_a, dtype=float))
    b = np.atleast_2d(np.asarray(seq_b, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"sequence shapes differ: {a.shape} vs {b.shape}")
    dev = np.linalg.norm(a - b, axis=1) / (1.0 + np.linalg.norm(b, axis=1))
    return EquivalenceReport(deviations=dev, rel_tol=rel_tol)
