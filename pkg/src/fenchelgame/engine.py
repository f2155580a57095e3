"""The weighted no-regret game loop.

Each round the y-player moves first, the x-player then sees y_t, both
suffer alpha_t-weighted losses, and the averages x_bar_t, x_tilde_{t+1} are
advanced. The x_bar output is an approximate minimizer of f whose gap is
bounded by the players' summed regrets over A_T.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

from .core import (
    FeasibleSet,
    GameTrace,
    Objective,
    WeightSchedule,
    as_point,
    make_schedule,
    update_averages,
)
from .errors import (
    InvalidSpec,
    MissingOracle,
    NoReferenceMinimizer,
    NonFiniteIterate,
    ProxUnavailable,
    RequiresStrongConvexity,
)
from .learners import (
    LearnerConfig,
    RoundContext,
    btl_strongly_convex_x_step,
    btrl_x_step,
    corollary_gamma,
    fw_gauge_x_step,
    ftl_y_step,
    mirror_descent_x_step,
    oftl_y_step,
    ogd_x_step,
    prox_md_x_step,
)
from .sets import unconstrained

__all__ = [
    "Y_STRATEGIES",
    "X_STRATEGIES",
    "GameSpec",
    "run_game",
    "run_linear_rate_game",
    "duality_gap_of",
    "reference_minimizer",
    "with_reference",
]

Y_STRATEGIES = ("OFTL", "FTL")
X_STRATEGIES = ("MirrorDescent", "OGD", "BTRL", "ProxMD", "StronglyConvexBTL", "FWGauge")


@dataclass(frozen=True)
class GameSpec:
    """Everything that determines a run.

    Parameters
    ----------
    objective : Objective
    rounds_T : int
    set : FeasibleSet, optional
        Defaults to R^d.
    schedule : WeightSchedule
        Defaults to alpha_t = t.
    y_strategy : {"OFTL", "FTL"}
    x_strategy : {"MirrorDescent", "OGD", "BTRL", "ProxMD", "StronglyConvexBTL", "FWGauge"}
    learner_config : LearnerConfig
    composite_psi : optional
        Simple term psi with ``value`` and ``prox``, for ProxMD.
    start_x0 : array, optional
        Defaults to the origin.
    comparator : array, optional
        x* for regrets and the gap; defaults to the objective's known
        minimizer when it is feasible and there is no composite term.
    f_star : float, optional
        Optimal value; defaults to the objective at the comparator.
    comparator_exact : bool
        False when the comparator is a numerical reference.
    """

    objective: Objective
    rounds_T: int
    set: Optional[FeasibleSet] = None
    schedule: WeightSchedule = field(default_factory=make_schedule)
    y_strategy: str = "OFTL"
    x_strategy: str = "OGD"
    learner_config: LearnerConfig = field(default_factory=LearnerConfig)
    composite_psi: Any = None
    start_x0: Optional[np.ndarray] = None
    comparator: Optional[np.ndarray] = None
    f_star: Optional[float] = None
    comparator_exact: bool = True

    def __post_init__(self):
        if self.set is None:
            object.__setattr__(self, "set", unconstrained(self.objective.dim))
        if self.start_x0 is not None:
            object.__setattr__(self, "start_x0",
                               as_point(self.start_x0, self.objective.dim))
        if self.comparator is not None:
            object.__setattr__(self, "comparator",
                               as_point(self.comparator, self.objective.dim))

    @property
    def x0(self) -> np.ndarray:
        if self.start_x0 is None:
            return np.zeros(self.objective.dim)
        return self.start_x0.copy()

    def validate(self) -> None:
        """Check that the strategies, set and parameters fit together."""
        obj, cfg = self.objective, self.learner_config
        if self.y_strategy not in Y_STRATEGIES:
            raise InvalidSpec(f"unknown y strategy {self.y_strategy!r}")
        if self.x_strategy not in X_STRATEGIES:
            raise InvalidSpec(f"unknown x strategy {self.x_strategy!r}")
        if int(self.rounds_T) != self.rounds_T or self.rounds_T < 1:
            raise InvalidSpec("rounds_T must be a positive integer")
        if self.set.dim != obj.dim:
            raise InvalidSpec("set and objective dimensions differ")
        xs = self.x_strategy
        if xs in ("MirrorDescent", "OGD", "ProxMD") and cfg.gamma_schedule is None:
            raise InvalidSpec(f"{xs} needs a gamma schedule")
        if xs in ("BTRL", "FWGauge") and cfg.eta is None:
            raise InvalidSpec(f"{xs} needs eta")
        if xs in ("OGD", "ProxMD") and not self.set.unconstrained:
            raise InvalidSpec(f"{xs} is for unconstrained problems")
        if xs == "ProxMD":
            if self.composite_psi is None:
                raise InvalidSpec("ProxMD needs composite_psi")
            if getattr(self.composite_psi, "prox", None) is None:
                raise ProxUnavailable("composite term has no proximal map")
        elif self.composite_psi is not None:
            raise InvalidSpec("a composite term needs the ProxMD x strategy")
        if xs == "FWGauge" and (self.set.gauge is None or self.set.linear_oracle is None):
            raise MissingOracle("FWGauge needs a gauge and a linear oracle")
        if xs == "StronglyConvexBTL":
            if not obj.strong_convexity_mu > 0:
                raise RequiresStrongConvexity("StronglyConvexBTL needs mu > 0")
            if self.schedule.kind != "exponential_kappa":
                raise InvalidSpec("StronglyConvexBTL needs the exponential schedule")
            if self.y_strategy != "OFTL":
                raise InvalidSpec("the linear-rate game uses OFTL")
            if self.start_x0 is not None and np.any(self.start_x0):
                raise InvalidSpec("the linear-rate game starts at x_0 = 0")
        elif self.schedule.kind == "exponential_kappa":
            raise InvalidSpec("the exponential schedule is for StronglyConvexBTL")
        if not self.set.contains(self.x0):
            raise InvalidSpec("start point is not in the set")


def _resolve_comparator(spec: GameSpec):
    """(x*, F*, exact) for the run, or (None, None, True) if unknown."""
    psi = spec.composite_psi
    if spec.comparator is not None:
        x_star = spec.comparator
    else:
        x_star = spec.objective.known_minimizer
        if x_star is not None and (psi is not None or not spec.set.contains(x_star)):
            x_star = None
    if x_star is None:
        return None, None, True
    f_star = spec.f_star
    if f_star is None:
        f_star = float(spec.objective.value(x_star))
        if psi is not None:
            f_star += float(psi.value(x_star))
    return x_star, f_star, spec.comparator_exact


def _play(spec: GameSpec, game_obj: Objective, x_term, variant: str) -> GameTrace:
    obj, sched, cfg, K = spec.objective, spec.schedule, spec.learner_config, spec.set
    psi = spec.composite_psi
    T, d = int(spec.rounds_T), obj.dim
    y_step = oftl_y_step if spec.y_strategy == "OFTL" else ftl_y_step
    xs = spec.x_strategy

    x_prev = spec.x0
    xbar_prev = x_prev.copy()
    xtilde = x_prev.copy()
    S = np.zeros(d)

    xs_rows = [x_prev.copy()]
    xbar_rows = [xbar_prev.copy()]
    y_rows, xt_rows = [], []
    f_xbar, conj, extra = [], [], []

    def build(n):
        alpha, A = sched.weights(n)
        At = None
        if sched.kind == "exponential_kappa":
            At = np.array([sched.tilde_cumulative_at(t) for t in range(n + 1)])
        gamma = None
        if cfg.gamma_schedule is not None:
            gamma = np.array([cfg.gamma(t) for t in range(1, n + 1)])
        x_star, f_star, exact = _resolve_comparator(spec)
        return GameTrace(
            alpha=alpha, A=A,
            x=np.array(xs_rows[: n + 1]), y=np.array(y_rows[:n]).reshape(n, d),
            xbar=np.array(xbar_rows[: n + 1]), xtilde=np.array(xt_rows[:n]).reshape(n, d),
            f_xbar=np.array(f_xbar[:n]), conj_y=np.array(conj[:n]),
            extra_x=np.array(extra[:n]),
            objective=obj, game_objective=game_obj, x_term=x_term,
            comparator=x_star, f_star=f_star, comparator_exact=exact,
            gamma=gamma, eta=cfg.eta, A_tilde=At,
            y_strategy=spec.y_strategy, x_strategy=xs, variant=variant, spec=spec,
        )

    for t in range(1, T + 1):
        a_t = sched.weight_at(t)
        ctx = RoundContext(
            t=t, alpha_t=a_t, A_t=sched.cumulative_at(t),
            A_prev=sched.cumulative_at(t - 1), x_prev=x_prev,
            xbar_prev=xbar_prev, xtilde_t=xtilde, y_weighted_sum=S,
        )
        witness = xtilde if spec.y_strategy == "OFTL" else xbar_prev
        y = np.asarray(y_step(game_obj, ctx), dtype=float)
        S = S + a_t * y
        ctx = replace(ctx, y_weighted_sum=S)
        if xs == "OGD":
            x = ogd_x_step(cfg, ctx, y)
        elif xs == "MirrorDescent":
            x = mirror_descent_x_step(cfg, K, ctx, y)
        elif xs == "BTRL":
            x = btrl_x_step(cfg, K, ctx, y)
        elif xs == "ProxMD":
            x = prox_md_x_step(cfg, psi, ctx, y)
        elif xs == "FWGauge":
            x = fw_gauge_x_step(K, cfg.eta, ctx, y)
        else:
            x = btl_strongly_convex_x_step(obj, sched, ctx, y, K)
        x = np.asarray(x, dtype=float)
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            partial = build(t - 1) if t > 1 else None
            raise NonFiniteIterate(f"non-finite iterate at round {t}", round=t,
                                   trace=partial)
        xbar, xtilde = update_averages(xbar_prev, x, t, sched)

        y_rows.append(y)
        xt_rows.append(ctx.xtilde_t)
        xs_rows.append(x)
        xbar_rows.append(xbar)
        conj.append(float(witness @ y) - float(game_obj.value(witness)))
        extra.append(0.0 if x_term is None else float(x_term(x)))
        fx = float(obj.value(xbar))
        if psi is not None:
            fx += float(psi.value(xbar))
        f_xbar.append(fx)
        x_prev, xbar_prev = x, xbar

    return build(T)


def run_game(spec: GameSpec) -> GameTrace:
    """Play the game for ``spec.rounds_T`` rounds and return the trace.

    Dispatches to :func:`run_linear_rate_game` for the StronglyConvexBTL
    x strategy.

    Raises
    ------
    NonFiniteIterate
        On overflow or NaN, carrying the rounds completed so far.
    """
    spec.validate()
    if spec.x_strategy == "StronglyConvexBTL":
        return run_linear_rate_game(spec)
    psi = spec.composite_psi
    x_term = psi.value if psi is not None else None
    variant = "composite" if psi is not None else "plain"
    return _play(spec, spec.objective, x_term, variant)


def run_linear_rate_game(spec: GameSpec) -> GameTrace:
    """The strongly convex game with payoff <x, y> - f~*(y) + (mu/2)||x||^2.

    The y-player runs OFTL on f~ = f - (mu/2)||x||^2, so y_t = grad f(x~_t) - mu x~_t;
    the x-player is be-the-leader with the warmup loss alpha_0 (mu/2)||x||^2,
    whose minimizer gives x_0 = 0. The output x_bar_T averages rounds 1..T
    with weights alpha_t; alpha_0 enters only A~_t.
    """
    spec.validate()
    if spec.x_strategy != "StronglyConvexBTL":
        raise InvalidSpec("the linear-rate game needs StronglyConvexBTL")
    mu = spec.objective.strong_convexity_mu

    def x_term(x):
        return 0.5 * mu * float(x @ x)

    return _play(spec, spec.objective.shifted(), x_term, "strongly_convex")


def duality_gap_of(trace: GameTrace, obj: Optional[Objective] = None,
                   set: Optional[FeasibleSet] = None) -> float:
    """F(x_bar_T) - F(x*), where F = f (+ psi in the composite game).

    ``obj`` and ``set`` default to the trace's own; they are accepted for
    symmetry with the other entry points.

    Raises
    ------
    NoReferenceMinimizer
        If the trace has no comparator.
    """
    if trace.comparator is None or trace.f_star is None:
        raise NoReferenceMinimizer("no known or reference minimizer for the gap")
    if obj is None or obj is trace.objective:
        value = float(trace.f_xbar[-1])
    else:
        value = float(obj.value(trace.xbar[-1]))
    return value - float(trace.f_star)


def reference_minimizer(spec: GameSpec, factor: int = 50) -> np.ndarray:
    """Approximate minimizer from a run ``factor`` times longer.

    Uses the accelerated pairing suited to the problem: OFTL with mirror
    descent (or OGD, or the prox step) at gamma = 1/(4L) and alpha_t = t, or
    the linear-rate game when ``spec`` already is one.
    """
    T = int(spec.rounds_T) * int(factor)
    L = spec.objective.smoothness_L
    if spec.x_strategy == "StronglyConvexBTL":
        ref = replace(spec, rounds_T=T, comparator=None)
    else:
        if spec.composite_psi is not None:
            xs = "ProxMD"
        elif spec.set.unconstrained:
            xs = "OGD"
        else:
            xs = "MirrorDescent"
        cfg = replace(spec.learner_config, gamma_schedule=corollary_gamma(L))
        ref = replace(spec, rounds_T=T, y_strategy="OFTL", x_strategy=xs,
                      schedule=make_schedule("linear"), learner_config=cfg,
                      comparator=None)
    return run_game(ref).xbar_T.copy()


def with_reference(spec: GameSpec, factor: int = 50) -> GameSpec:
    """Return ``spec`` with a comparator, computing a reference if needed.

    Reference comparators are marked approximate, which certificates report.
    """
    x_star, _, _ = _resolve_comparator(spec)
    if x_star is not None:
        return spec
    x_ref = reference_minimizer(spec, factor)
    return replace(spec, comparator=x_ref, comparator_exact=False)
