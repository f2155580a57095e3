"""Domain types for the Fenchel game.

The game pits an x-player against a y-player over the payoff

    g(x, y) = <x, y> - f*(y),

whose equilibrium value is min f. This module holds the objective and set
oracles, Bregman geometries, weight schedules, the per-round trace record,
and the two weighted averages x_bar and x_tilde that every strategy reads.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field, replace
from typing import Any, Callable, NamedTuple, Optional

import numpy as np
from scipy.special import xlogy

from .errors import ConjugateUnavailable, InvalidKappa

__all__ = [
    "Objective",
    "FeasibleSet",
    "BregmanGeometry",
    "euclidean_geometry",
    "weighted_euclidean_geometry",
    "entropy_geometry",
    "WeightSchedule",
    "make_schedule",
    "RoundRecord",
    "GameTrace",
    "payoff",
    "conjugate_at_gradient",
    "update_averages",
    "as_point",
]


def as_point(x, dim: Optional[int] = None) -> np.ndarray:
    """Return ``x`` as a 1-D float64 array, checking its length if given."""
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1:
        raise ValueError(f"expected a vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"expected a vector of length {dim}, got {arr.shape[0]}")
    return arr


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Objective:
    """A smooth convex function and the constants the analysis needs.

    Parameters
    ----------
    dim : int
        Dimension of the domain.
    value, gradient : callable
        ``f(x)`` and ``grad f(x)`` on 1-D arrays of length ``dim``.
    smoothness_L : float
        Lipschitz constant of the gradient.
    strong_convexity_mu : float
        Strong convexity modulus, 0 for a merely convex function.
    analytic_conjugate : callable, optional
        Closed-form ``f*(y)``.
    known_minimizer : array, optional
        A global minimizer x* of ``f`` over its domain.
    name : str
        Label used in reports.
    """

    dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    smoothness_L: float
    strong_convexity_mu: float = 0.0
    analytic_conjugate: Optional[Callable[[np.ndarray], float]] = None
    known_minimizer: Optional[np.ndarray] = None
    name: str = "objective"

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if not self.smoothness_L > 0:
            raise ValueError("smoothness_L must be positive")
        if not self.strong_convexity_mu >= 0:
            raise ValueError("strong_convexity_mu must be nonnegative")
        if self.strong_convexity_mu > self.smoothness_L * (1 + 1e-12):
            raise ValueError("strong_convexity_mu cannot exceed smoothness_L")
        if self.known_minimizer is not None:
            object.__setattr__(
                self, "known_minimizer", as_point(self.known_minimizer, self.dim)
            )

    @property
    def condition_number(self) -> float:
        """kappa = L / mu, infinite for a merely convex function."""
        if self.strong_convexity_mu == 0:
            return math.inf
        return self.smoothness_L / self.strong_convexity_mu

    def shifted(self) -> "Objective":
        """Return f(x) - (mu/2)||x||^2, the y-player's function in the
        linear-rate game. The shift stays convex and is (L - mu)-smooth."""
        mu = self.strong_convexity_mu
        f, g = self.value, self.gradient

        def value(x):
            return f(x) - 0.5 * mu * float(x @ x)

        def gradient(x):
            return g(x) - mu * x

        return Objective(
            dim=self.dim,
            value=value,
            gradient=gradient,
            # keep L positive for the kappa = 1 case where the shift is affine
            smoothness_L=max(self.smoothness_L - mu, np.finfo(float).tiny),
            strong_convexity_mu=0.0,
            name=f"{self.name}-shifted",
        )


def conjugate_at_gradient(obj: Objective, w) -> float:
    """Evaluate f*(grad f(w)) through the Fenchel-Young equality.

    The supremum defining f*(y) is attained at any w with grad f(w) = y, so
    f*(grad f(w)) = <w, grad f(w)> - f(w) holds exactly.
    """
    w = as_point(w, obj.dim)
    return float(w @ obj.gradient(w)) - float(obj.value(w))


def payoff(obj: Objective, x, y, witness=None, rtol: float = 1e-10) -> float:
    """Fenchel-game payoff g(x, y) = <x, y> - f*(y).

    The conjugate comes from ``obj.analytic_conjugate`` when present, else
    from a gradient witness ``w`` with ``grad f(w) == y``.

    Raises
    ------
    ConjugateUnavailable
        If there is no analytic conjugate and no valid witness.
    """
    x = as_point(x, obj.dim)
    y = as_point(y, obj.dim)
    if obj.analytic_conjugate is not None:
        conj = float(obj.analytic_conjugate(y))
    elif witness is not None:
        w = as_point(witness, obj.dim)
        gw = obj.gradient(w)
        if np.linalg.norm(gw - y) > rtol * (1.0 + np.linalg.norm(y)):
            raise ConjugateUnavailable("witness gradient does not match y")
        conj = float(w @ gw) - float(obj.value(w))
    else:
        raise ConjugateUnavailable(
            "no analytic conjugate and no gradient witness for y"
        )
    return float(x @ y) - conj


# ---------------------------------------------------------------------------
# Bregman geometry
# ---------------------------------------------------------------------------


def _l2(v):
    return float(np.linalg.norm(v))


def _l1(v):
    return float(np.sum(np.abs(v)))


@dataclass(frozen=True)
class BregmanGeometry:
    """A 1-strongly convex potential phi and the divergence it generates.

    ``norm`` is the norm in which phi is 1-strongly convex, so that
    ``V_c(x) >= 0.5 * norm(x - c)**2``.
    """

    kind: str
    potential: Callable[[np.ndarray], float]
    potential_gradient: Callable[[np.ndarray], np.ndarray]
    norm: Callable[[np.ndarray], float] = _l2
    weights: Optional[np.ndarray] = None

    def divergence(self, c, x) -> float:
        """V_c(x) = phi(x) - phi(c) - <grad phi(c), x - c>."""
        c = np.asarray(c, dtype=float)
        x = np.asarray(x, dtype=float)
        if self.kind == "euclidean":
            d = x - c
            return 0.5 * float(d @ d)
        if self.kind == "weighted_euclidean":
            d = x - c
            return 0.5 * float(np.sum(self.weights * d * d))
        if self.kind == "entropy":
            # generalized KL; the linear terms cancel on the simplex
            return float(np.sum(xlogy(x, x) - xlogy(x, c) - x + c))
        return float(
            self.potential(x) - self.potential(c) - self.potential_gradient(c) @ (x - c)
        )

    def center(self, dim: int) -> np.ndarray:
        """Minimizer of phi over its natural domain."""
        if self.kind == "entropy":
            return np.full(dim, 1.0 / dim)
        return np.zeros(dim)


def euclidean_geometry() -> BregmanGeometry:
    """phi(x) = ||x||^2 / 2, so V_c(x) = ||x - c||^2 / 2."""
    return BregmanGeometry(
        kind="euclidean",
        potential=lambda x: 0.5 * float(x @ x),
        potential_gradient=lambda x: np.array(x, dtype=float),
    )


def weighted_euclidean_geometry(weights) -> BregmanGeometry:
    """phi(x) = sum_i w_i x_i^2 / 2, 1-strongly convex in the w-norm."""
    w = as_point(weights)
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    w = w.copy()
    w.setflags(write=False)
    return BregmanGeometry(
        kind="weighted_euclidean",
        potential=lambda x: 0.5 * float(np.sum(w * x * x)),
        potential_gradient=lambda x: w * x,
        norm=lambda v: float(np.sqrt(np.sum(w * v * v))),
        weights=w,
    )


def entropy_geometry() -> BregmanGeometry:
    """Negative entropy sum_i x_i log x_i.

    On the simplex it is 1-strongly convex in the l1 norm (Pinsker), and
    mirror descent with it is the multiplicative-weights update.
    """
    return BregmanGeometry(
        kind="entropy",
        potential=lambda x: float(np.sum(xlogy(x, x))),
        potential_gradient=lambda x: np.log(x) + 1.0,
        norm=_l1,
    )


# ---------------------------------------------------------------------------
# Feasible set
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeasibleSet:
    """Oracle bundle for a closed convex set K.

    Parameters
    ----------
    dim : int
    contains : callable
        ``contains(x, tol)`` membership test.
    bregman_project : callable
        ``bregman_project(c, g, step, geometry)`` returns
        argmin_{x in K} step * <x, g> + V_c(x).
    linear_oracle : callable, optional
        ``linear_oracle(g)`` returns a point of argmin_{x in K} <x, g>.
    gauge : callable, optional
        Minkowski functional inf{c >= 0 : x / c in K}.
    divergence_bound_D : float, optional
        Bound on V_x(x*) over the set, when finite.
    unconstrained : bool
        True for K = R^d, letting strategies use closed forms.
    gauge_sq_modulus : float, optional
        Strong convexity of gauge^2 in the Euclidean norm.
    """

    dim: int
    contains: Callable[..., bool]
    bregman_project: Callable[..., np.ndarray]
    linear_oracle: Optional[Callable[[np.ndarray], np.ndarray]] = None
    gauge: Optional[Callable[[np.ndarray], float]] = None
    divergence_bound_D: Optional[float] = None
    unconstrained: bool = False
    gauge_sq_modulus: Optional[float] = None
    name: str = "set"


# ---------------------------------------------------------------------------
# Weight schedules
# ---------------------------------------------------------------------------

_SCHEDULE_KINDS = ("linear", "constant", "exponential_kappa")


@dataclass(frozen=True)
class WeightSchedule:
    """Positive weights alpha_t with running totals A_t.

    Totals are accumulated as A_t = A_{t-1} + alpha_t in float64, so the
    recurrence holds exactly; the linear kind accumulates in integers first.
    The exponential kind also carries the warm-started totals
    A~_t = alpha_0 + A_t realized by A~_t = A~_{t-1} / (1 - theta) and
    alpha_t = theta * A~_t.

    Use :func:`make_schedule` to construct one.
    """

    kind: str
    scale: float = 1.0
    kappa: Optional[float] = None
    alpha0: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: Any = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def theta(self) -> Optional[float]:
        """alpha_t / A~_t for the exponential kind."""
        if self.kind != "exponential_kappa":
            return None
        return 1.0 / math.sqrt(6.0 * self.kappa)

    def _arrays(self, T: int):
        cache = self._cache
        if cache.get("T", -1) >= T:
            return cache["alpha"], cache["A"], cache["At"]
        with self._lock:
            n = max(T, 2 * cache.get("T", 0), 16)
            if self.kind == "linear":
                ints = np.arange(0, n + 1, dtype=np.int64)
                alpha = ints.astype(np.float64)
                A = np.cumsum(ints).astype(np.float64)
                At = A
            elif self.kind == "constant":
                alpha = np.full(n + 1, self.scale, dtype=np.float64)
                alpha[0] = 0.0
                A = np.cumsum(alpha)
                At = A
            else:
                th = self.theta
                At = np.empty(n + 1)
                At[0] = self.alpha0
                for t in range(1, n + 1):
                    At[t] = At[t - 1] / (1.0 - th)
                alpha = th * At
                alpha[0] = self.alpha0
                A = np.cumsum(np.concatenate(([0.0], alpha[1:])))
            for arr in (alpha, A, At):
                arr.setflags(write=False)
            cache.update(T=n, alpha=alpha, A=A, At=At)
        return cache["alpha"], cache["A"], cache["At"]

    def weight_at(self, t: int) -> float:
        """alpha_t for t >= 1 (alpha_0 is the warmup weight, 0 if none)."""
        if t < 0:
            raise ValueError("round index must be nonnegative")
        return float(self._arrays(t)[0][t])

    def cumulative_at(self, t: int) -> float:
        """A_t = alpha_1 + ... + alpha_t, with A_0 = 0."""
        if t < 0:
            raise ValueError("round index must be nonnegative")
        return float(self._arrays(t)[1][t])

    def tilde_cumulative_at(self, t: int) -> float:
        """A~_t, the total including the warmup weight alpha_0."""
        if t < 0:
            raise ValueError("round index must be nonnegative")
        return float(self._arrays(t)[2][t])

    def weights(self, T: int):
        """Return ``(alpha, A)`` arrays for rounds 1..T."""
        alpha, A, _ = self._arrays(T)
        return np.array(alpha[1 : T + 1]), np.array(A[1 : T + 1])


def make_schedule(kind: str = "linear", **params) -> WeightSchedule:
    """Build a weight schedule.

    Parameters
    ----------
    kind : {"linear", "constant", "exponential_kappa"}
        ``"exponential"`` is accepted as an alias of ``"exponential_kappa"``.
    scale : float
        Constant weight, ``constant`` kind only.
    kappa : float
        Condition number L / mu, exponential kind only. Must be >= 1.
    alpha0 : float
        Warmup weight, exponential kind only. Defaults to 1.

    Examples
    --------
    >>> s = make_schedule("linear")
    >>> s.weight_at(4), s.cumulative_at(4)
    (4.0, 10.0)
    """
    if kind == "exponential":
        kind = "exponential_kappa"
    if kind not in _SCHEDULE_KINDS:
        raise ValueError(f"unknown schedule kind {kind!r}")
    allowed = {"linear": set(), "constant": {"scale"},
               "exponential_kappa": {"kappa", "alpha0"}}[kind]
    extra = set(params) - allowed
    if extra:
        raise TypeError(f"unexpected parameters for {kind}: {sorted(extra)}")
    if kind == "constant":
        scale = float(params.get("scale", 1.0))
        if not scale > 0:
            raise ValueError("constant weight must be positive")
        return WeightSchedule(kind=kind, scale=scale)
    if kind == "exponential_kappa":
        if "kappa" not in params:
            raise TypeError("exponential schedule needs kappa")
        kappa = float(params["kappa"])
        if not kappa >= 1:
            raise InvalidKappa(f"kappa must be >= 1, got {kappa}")
        alpha0 = float(params.get("alpha0", 1.0))
        if not alpha0 > 0:
            raise ValueError("warmup weight alpha0 must be positive")
        return WeightSchedule(kind=kind, kappa=kappa, alpha0=alpha0)
    return WeightSchedule(kind=kind)


# ---------------------------------------------------------------------------
# Averages
# ---------------------------------------------------------------------------


def update_averages(xbar_prev, x_t, t: int, schedule: WeightSchedule):
    """Advance the two weighted averages after round ``t``.

    Returns
    -------
    xbar_t : array
        (A_{t-1} xbar_{t-1} + alpha_t x_t) / A_t.
    xtilde_next : array
        (alpha_{t+1} x_t + A_t xbar_t) / A_{t+1}, the OFTL query point.
    """
    A_prev = schedule.cumulative_at(t - 1)
    a_t = schedule.weight_at(t)
    A_t = schedule.cumulative_at(t)
    a_next = schedule.weight_at(t + 1)
    A_next = schedule.cumulative_at(t + 1)
    xbar = (A_prev * np.asarray(xbar_prev) + a_t * np.asarray(x_t)) / A_t
    xtilde = (a_next * np.asarray(x_t) + A_t * xbar) / A_next
    return xbar, xtilde


# ---------------------------------------------------------------------------
# Trace
# ---------------------------------------------------------------------------


class RoundRecord(NamedTuple):
    """One round of a game trace."""

    t: int
    alpha_t: float
    A_t: float
    x_t: np.ndarray
    y_t: np.ndarray
    xbar_t: np.ndarray
    xtilde_t: np.ndarray
    f_xbar: float
    loss_y: float
    loss_x: float


@dataclass
class GameTrace:
    """Full record of a game run over rounds 1..T.

    Row ``i`` of ``x`` and ``xbar`` holds round ``i`` (row 0 is the start
    point x_0 = xbar_0); ``y``, ``xtilde`` and the per-round scalars hold
    rounds 1..T in rows 0..T-1.

    Attributes
    ----------
    objective : Objective
        The function being minimized (smooth part in the composite game).
    game_objective : Objective
        The function the y-player's conjugate belongs to; equal to
        ``objective`` except in the linear-rate game, where it is the shift
        f - (mu/2)||.||^2.
    conj_y : array
        f*(y_t) for the game objective, by Fenchel-Young.
    extra_x : array
        Value of the x-player's extra loss term at x_t: psi(x_t) in the
        composite game, (mu/2)||x_t||^2 in the linear-rate game, else 0.
    x_term : callable or None
        That extra term as a function, used to score the comparator.
    f_xbar : array
        Problem objective (f + psi) at xbar_t.
    comparator : array or None
        x* used for regrets and the gap.
    f_star : float or None
        Problem optimum value.
    """

    alpha: np.ndarray
    A: np.ndarray
    x: np.ndarray
    y: np.ndarray
    xbar: np.ndarray
    xtilde: np.ndarray
    f_xbar: np.ndarray
    conj_y: np.ndarray
    extra_x: np.ndarray
    objective: Objective
    game_objective: Objective
    x_term: Optional[Callable[[np.ndarray], float]] = None
    comparator: Optional[np.ndarray] = None
    f_star: Optional[float] = None
    comparator_exact: bool = True
    gamma: Optional[np.ndarray] = None
    eta: Optional[float] = None
    A_tilde: Optional[np.ndarray] = None
    y_strategy: str = ""
    x_strategy: str = ""
    variant: str = "plain"
    spec: Any = None

    @property
    def T(self) -> int:
        return int(self.alpha.shape[0])

    @property
    def dim(self) -> int:
        return int(self.x.shape[1])

    @property
    def t(self) -> np.ndarray:
        return np.arange(1, self.T + 1)

    @property
    def loss_y(self) -> np.ndarray:
        """alpha_t * l_t(y_t) with l_t(y) = f*(y) - <x_t, y>."""
        inner = np.einsum("ij,ij->i", self.x[1:], self.y)
        return self.alpha * (self.conj_y - inner)

    @property
    def loss_x(self) -> np.ndarray:
        """alpha_t * h_t(x_t) with h_t(x) = <x, y_t> - f*(y_t) + extra(x)."""
        inner = np.einsum("ij,ij->i", self.x[1:], self.y)
        return self.alpha * (inner - self.conj_y + self.extra_x)

    @property
    def xbar_T(self) -> np.ndarray:
        return self.xbar[-1]

    @property
    def ybar_T(self) -> np.ndarray:
        """The y-player's weighted average output."""
        return (self.alpha @ self.y) / self.A[-1]

    @property
    def rounds(self) -> list:
        """Per-round records, in order."""
        ly, lx = self.loss_y, self.loss_x
        return [
            RoundRecord(
                t=i + 1,
                alpha_t=float(self.alpha[i]),
                A_t=float(self.A[i]),
                x_t=self.x[i + 1],
                y_t=self.y[i],
                xbar_t=self.xbar[i + 1],
                xtilde_t=self.xtilde[i],
                f_xbar=float(self.f_xbar[i]),
                loss_y=float(ly[i]),
                loss_x=float(lx[i]),
            )
            for i in range(self.T)
        ]

    def truncate(self, T: int) -> "GameTrace":
        """The trace of the first ``T`` rounds.

        Every schedule and step size here is fixed in advance, so this is
        exactly the trace a run with ``T`` rounds would have produced.
        """
        if not 1 <= T <= self.T:
            raise ValueError(f"cannot truncate a {self.T}-round trace to {T}")
        return replace(
            self,
            alpha=self.alpha[:T],
            A=self.A[:T],
            x=self.x[: T + 1],
            y=self.y[:T],
            xbar=self.xbar[: T + 1],
            xtilde=self.xtilde[:T],
            f_xbar=self.f_xbar[:T],
            conj_y=self.conj_y[:T],
            extra_x=self.extra_x[:T],
            gamma=None if self.gamma is None else self.gamma[:T],
            A_tilde=None if self.A_tilde is None else self.A_tilde[: T + 1],
        )

    @property
    def gap(self) -> float:
        """F(xbar_T) - F(x*)."""
        from .engine import duality_gap_of

        return duality_gap_of(self)

    @property
    def regret_x(self) -> float:
        from .audit import regret_x

        return regret_x(self)

    @property
    def regret_y(self) -> float:
        from .audit import regret_y

        return regret_y(self)
