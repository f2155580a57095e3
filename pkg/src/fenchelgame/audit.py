"""Weighted-regret accounting and runtime bound certificates.

Every bound here is an inequality between a measured quantity of a finished
trace and a right-hand side computed from the same trace. A certificate
passes when ``bound - measured >= -1e-7 * (1 + |bound|)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import BregmanGeometry, GameTrace, Objective, euclidean_geometry
from .errors import NoReferenceMinimizer
from .learners import Regularizer, gauge_squared, half_squared_norm

__all__ = [
    "Certificate",
    "regret_y",
    "regret_x",
    "regret_y_path",
    "regret_x_path",
    "eps_bound_path",
    "certify_equilibrium_gap",
    "certify_optimistic_regret",
    "certify_mirror_descent_regret",
    "certify_ftl_regret",
    "certify_btrl_regret",
    "certify_strongly_convex_btl_regret",
    "certify_accelerated_bound",
    "certify_rate_bound",
    "certify_all",
    "CERTIFICATE_TOLERANCE",
]

CERTIFICATE_TOLERANCE = 1e-7


@dataclass(frozen=True)
class Certificate:
    """A checked instance of ``measured <= bound``.

    Attributes
    ----------
    name : str
        Identifier of the bound.
    measured, bound : float
        Left and right sides.
    statement : str
        The inequality in words.
    approximate : bool
        True when the comparator x* is a numerical reference solution.
    """

    name: str
    measured: float
    bound: float
    statement: str
    approximate: bool = False
    tolerance: float = CERTIFICATE_TOLERANCE

    @property
    def slack(self) -> float:
        return self.bound - self.measured

    @property
    def passed(self) -> bool:
        return bool(self.slack >= -self.tolerance * (1.0 + abs(self.bound)))

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": self.measured,
            "bound": self.bound,
            "slack": self.slack,
            "pass": self.passed,
            "statement": self.statement,
            "approximate": self.approximate,
        }


def _comparator(trace: GameTrace, comparator=None) -> np.ndarray:
    x_star = comparator if comparator is not None else trace.comparator
    if x_star is None:
        raise NoReferenceMinimizer("trace has no comparator x*")
    return np.asarray(x_star, dtype=float)


def _moves(trace: GameTrace, start=None) -> np.ndarray:
    """Rows x_t - x_{t-1} for t = 1..T, optionally with x_0 replaced."""
    x = trace.x
    if start is not None:
        x = np.vstack([np.asarray(start, float)[None, :], x[1:]])
    return np.diff(x, axis=0)


def _sq_norms(rows, norm=None) -> np.ndarray:
    if norm is None:
        return np.einsum("ij,ij->i", rows, rows)
    return np.array([norm(r) ** 2 for r in rows])


# ---------------------------------------------------------------------------
# regrets
# ---------------------------------------------------------------------------


def _conj_values(trace: GameTrace, obj: Objective, conjugate: str) -> np.ndarray:
    if conjugate == "fenchel_young":
        return trace.conj_y
    if conjugate == "analytic":
        if obj.analytic_conjugate is None:
            raise ValueError("objective has no analytic conjugate")
        return np.array([obj.analytic_conjugate(y) for y in trace.y])
    raise ValueError(f"unknown conjugate mode {conjugate!r}")


def regret_y_path(trace: GameTrace, obj: Optional[Objective] = None,
                  conjugate: str = "fenchel_young") -> np.ndarray:
    """Regret_y after each round t = 1..T.

    The best fixed y against the losses f*(y) - <x_s, y> is grad f(x_bar_t),
    so the comparator's total loss is -A_t f(x_bar_t).
    """
    obj = obj if obj is not None else trace.game_objective
    conj = _conj_values(trace, obj, conjugate)
    inner = np.einsum("ij,ij->i", trace.x[1:], trace.y)
    losses = np.cumsum(trace.alpha * (conj - inner))
    f_bar = np.array([obj.value(xb) for xb in trace.xbar[1:]])
    return losses + trace.A * f_bar


def regret_y(trace: GameTrace, obj: Optional[Objective] = None,
             conjugate: str = "fenchel_young") -> float:
    """sum_t alpha_t (f*(y_t) - <x_t, y_t>) + A_T f(x_bar_T).

    Linear-rate traces, whose weights grow geometrically, are summed in a
    cancellation-free form (see :func:`_regret_y_geometric`).

    Parameters
    ----------
    obj : Objective, optional
        Defaults to the trace's game objective.
    conjugate : {"fenchel_young", "analytic"}
        Source of f*(y_t).
    """
    obj = obj if obj is not None else trace.game_objective
    if (trace.variant == "strongly_convex" and conjugate == "fenchel_young"
            and obj is trace.game_objective):
        return _regret_y_geometric(trace)
    conj = _conj_values(trace, obj, conjugate)
    inner = np.einsum("ij,ij->i", trace.x[1:], trace.y)
    total = float(np.sum(trace.alpha * (conj - inner)))
    return total + float(trace.A[-1]) * float(obj.value(trace.xbar[-1]))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _bregman_by_quadrature(grad, a, b) -> float:
    """D_f(a, b) = int_0^1 <grad f(b + s(a - b)) - grad f(b), a - b> ds.

    Gradient differences keep the rounding proportional to ||a - b||,
    unlike f(a) - f(b) - <grad f(b), a - b>. Exact for quadratics.
    """
    d = a - b
    g0 = grad(b)
    s = 0.5 * (_GL_NODES + 1.0)
    vals = [float((grad(b + si * d) - g0) @ d) for si in s]
    return 0.5 * float(np.dot(_GL_WEIGHTS, vals))


def _regret_y_geometric(trace: GameTrace) -> float:
    """Regret_y for geometrically growing weights.

    Uses f*(y_t) = <w_t, y_t> - f(w_t) at the witness w_t to write each
    round as alpha_t (<x_bar_T - x_t, y_t - y_T> + D_f(x_bar_T, w_t)); the
    y_T shift is exact because sum_t alpha_t (x_bar_T - x_t) = 0. Both
    factors vanish at equilibrium, so weights near 1/eps do not turn
    rounding into regret.
    """
    obj = trace.game_objective
    xb = trace.xbar[-1]
    witness = trace.xtilde if trace.y_strategy == "OFTL" else trace.xbar[:-1]
    lin = np.einsum("ij,ij->i", xb - trace.x[1:], trace.y - trace.y[-1])
    breg = np.array([_bregman_by_quadrature(obj.gradient, xb, w) for w in witness])
    return float(np.sum(trace.alpha * (lin + breg)))


def regret_x_path(trace: GameTrace, comparator=None) -> np.ndarray:
    """Regret_x after each round t = 1..T."""
    x_star = _comparator(trace, comparator)
    diff = trace.x[1:] - x_star
    if trace.variant == "strongly_convex":
        # <x - x*, y> + (mu/2)(||x||^2 - ||x*||^2) factored as
        # <x - x*, y + (mu/2)(x + x*)>: both factors vanish at equilibrium,
        # so the huge late weights do not amplify rounding
        mu = trace.objective.strong_convexity_mu
        shifted = trace.y + 0.5 * mu * (trace.x[1:] + x_star)
        return np.cumsum(trace.alpha * np.einsum("ij,ij->i", diff, shifted))
    per_round = trace.alpha * np.einsum("ij,ij->i", diff, trace.y)
    if trace.x_term is not None:
        per_round = per_round + trace.alpha * (trace.extra_x - trace.x_term(x_star))
    return np.cumsum(per_round)


def regret_x(trace: GameTrace, comparator=None) -> float:
    """sum_t alpha_t (h_t(x_t) - h_t(x*)).

    With the linear losses h_t(x) = <x, y_t> - f*(y_t) this is
    sum_t alpha_t <x_t - x*, y_t>; the extra term psi (composite game) or
    (mu/2)||.||^2 (linear-rate game) adds alpha_t (extra(x_t) - extra(x*)).
    The comparator is f's minimizer, so the value may be negative.
    """
    return float(regret_x_path(trace, comparator)[-1])


def eps_bound_path(trace: GameTrace) -> np.ndarray:
    """(Regret_x + Regret_y) / A_t after each round."""
    return (regret_x_path(trace) + regret_y_path(trace)) / trace.A


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


def certify_equilibrium_gap(trace: GameTrace) -> Certificate:
    """f(x_bar_T) - f(x*) <= (Regret_x + Regret_y) / A_T."""
    from .engine import duality_gap_of

    measured = duality_gap_of(trace)
    bound = (regret_x(trace) + regret_y(trace)) / float(trace.A[-1])
    return Certificate(
        name="equilibrium_gap",
        measured=measured,
        bound=bound,
        statement="gap(x_bar_T) <= (Regret_x + Regret_y) / A_T",
        approximate=not trace.comparator_exact,
    )


def _require(trace, attr, allowed, what):
    if getattr(trace, attr) not in allowed:
        raise ValueError(f"{what} applies to {allowed} runs, not "
                         f"{getattr(trace, attr)!r}")


def _optimistic_bound(trace: GameTrace) -> float:
    L = trace.game_objective.smoothness_L
    move = _sq_norms(_moves(trace))
    return float(L * np.sum(trace.alpha**2 / trace.A * move))


def certify_optimistic_regret(trace: GameTrace) -> Certificate:
    """Regret_y <= L sum_t (alpha_t^2 / A_t) ||x_{t-1} - x_t||^2 for OFTL."""
    _require(trace, "y_strategy", ("OFTL",), "optimistic regret bound")
    return Certificate(
        name="optimistic_ftl_regret",
        measured=regret_y(trace),
        bound=_optimistic_bound(trace),
        statement="Regret_y <= L sum alpha_t^2/A_t ||x_{t-1} - x_t||^2",
    )


_MD_STRATEGIES = ("MirrorDescent", "OGD", "ProxMD")


def _md_parts(trace, geometry, D, gamma):
    x_star = _comparator(trace)
    if geometry is None:
        spec = trace.spec
        geometry = (spec.learner_config.geometry if spec is not None
                    and trace.x_strategy == "MirrorDescent" else euclidean_geometry())
    if gamma is None:
        gamma = trace.gamma
    gamma = np.asarray(gamma, dtype=float)
    if D is None:
        if np.all(gamma == gamma[0]):
            D = geometry.divergence(trace.x[0], x_star)
        else:
            D = max(geometry.divergence(x, x_star) for x in trace.x)
    move = _sq_norms(_moves(trace), geometry.norm)
    bound = float(D / gamma[-1] - np.sum(move / (2.0 * gamma)))
    return bound, float(D)


def certify_mirror_descent_regret(trace: GameTrace,
                                  geometry: Optional[BregmanGeometry] = None,
                                  D: Optional[float] = None,
                                  gamma=None) -> Certificate:
    """Regret_x <= D / gamma_T - sum_t ||x_{t-1} - x_t||^2 / (2 gamma_t).

    D defaults to V_{x_0}(x*) for a constant step and to
    max_t V_{x_t}(x*) otherwise. The norm is the geometry's.
    """
    _require(trace, "x_strategy", _MD_STRATEGIES, "mirror descent bound")
    bound, D = _md_parts(trace, geometry, D, gamma)
    return Certificate(
        name="mirror_descent_regret",
        measured=regret_x(trace),
        bound=bound,
        statement=f"Regret_x <= D/gamma_T - sum ||x_(t-1)-x_t||^2/(2 gamma_t), D={D:.6g}",
        approximate=not trace.comparator_exact,
    )


def certify_ftl_regret(trace: GameTrace) -> Certificate:
    """Regret_y <= (1/2) sum_t alpha_t^2 L ||x_bar_{t-1} - x_t||^2 / A_t.

    The loss alpha_t (f*(y) - <x_t, y>) is (alpha_t / L)-strongly convex and
    its gradient at y_t = grad f(x_bar_{t-1}) is alpha_t (x_bar_{t-1} - x_t),
    which gives the FTL bound for strongly convex losses.
    """
    _require(trace, "y_strategy", ("FTL",), "FTL regret bound")
    L = trace.game_objective.smoothness_L
    diff = trace.xbar[:-1] - trace.x[1:]
    bound = 0.5 * float(np.sum(trace.alpha**2 * L * _sq_norms(diff) / trace.A))
    return Certificate(
        name="ftl_strongly_convex_regret",
        measured=regret_y(trace),
        bound=bound,
        statement="Regret_y <= 1/2 sum alpha_t^2 L ||x_bar_(t-1) - x_t||^2 / A_t",
    )


def _btrl_regularizer(trace: GameTrace, regularizer, eta):
    spec = trace.spec
    if regularizer is None:
        if trace.x_strategy == "FWGauge":
            regularizer = gauge_squared(spec.set)
        elif spec is not None:
            regularizer = spec.learner_config.resolved_regularizer()
        else:
            regularizer = half_squared_norm()
    if eta is None:
        eta = trace.eta
    return regularizer, float(eta)


def certify_btrl_regret(trace: GameTrace, regularizer: Optional[Regularizer] = None,
                        eta: Optional[float] = None) -> Certificate:
    """Regret_x <= (R(x*) - R(z) - (beta/2) sum_t ||x_t - x_{t-1}||^2) / eta.

    z = argmin R stands in for x_0 in the first move, and beta is R's
    strong convexity in its norm (1 for ||x||^2/2).
    """
    _require(trace, "x_strategy", ("BTRL", "FWGauge"), "BTRL bound")
    reg, eta = _btrl_regularizer(trace, regularizer, eta)
    x_star = _comparator(trace)
    z = reg.minimizer(trace.dim)
    move = _sq_norms(_moves(trace, start=z), reg.norm)
    bound = (reg.value(x_star) - reg.value(z) - 0.5 * reg.beta * float(np.sum(move))) / eta
    return Certificate(
        name="btrl_regret",
        measured=regret_x(trace),
        bound=float(bound),
        statement="Regret_x <= (R(x*) - R(z) - beta/2 sum ||x_t - x_(t-1)||^2) / eta",
        approximate=not trace.comparator_exact,
    )


def certify_strongly_convex_btl_regret(trace: GameTrace) -> Certificate:
    """Regret_x <= alpha_0 mu ||x*||^2 / 2 - sum_t mu A~_{t-1} ||x_t - x_{t-1}||^2 / 2.

    Be-the-leader on the mu-strongly convex losses with the warmup term
    alpha_0 (mu/2)||x||^2 (whose minimizer x_0 = 0 contributes nothing).
    """
    _require(trace, "x_strategy", ("StronglyConvexBTL",), "strongly convex BTL bound")
    mu = trace.objective.strong_convexity_mu
    x_star = _comparator(trace)
    At = trace.A_tilde
    move = _sq_norms(_moves(trace))
    x0 = trace.x[0]
    bound = (0.5 * At[0] * mu * (float(x_star @ x_star) - float(x0 @ x0))
             - 0.5 * mu * float(np.sum(At[:-1] * move)))
    return Certificate(
        name="strongly_convex_btl_regret",
        measured=regret_x(trace),
        bound=float(bound),
        statement="Regret_x <= alpha_0 mu/2 ||x*||^2 - sum mu A~_(t-1)/2 ||x_t - x_(t-1)||^2",
        approximate=not trace.comparator_exact,
    )


def certify_accelerated_bound(trace: GameTrace, D: Optional[float] = None) -> Certificate:
    """gap <= (1/A_T)(D/gamma_T + sum_t (alpha_t^2 L / A_t - 1/(2 gamma_t)) ||x_{t-1} - x_t||^2),
    the sum of the optimistic and mirror-descent regret bounds over A_T."""
    from .engine import duality_gap_of

    _require(trace, "y_strategy", ("OFTL",), "accelerated bound")
    _require(trace, "x_strategy", _MD_STRATEGIES, "accelerated bound")
    md_bound, _ = _md_parts(trace, None, D, None)
    bound = (_optimistic_bound(trace) + md_bound) / float(trace.A[-1])
    return Certificate(
        name="accelerated_gap",
        measured=duality_gap_of(trace),
        bound=bound,
        statement="gap <= (optimistic bound + mirror descent bound) / A_T",
        approximate=not trace.comparator_exact,
    )


def certify_rate_bound(trace: GameTrace, D: Optional[float] = None) -> Certificate:
    """gap <= 2 C L D / T^2 with C = 1 / (L gamma_T).

    Needs alpha_t = t and gamma_t <= 1/(4L); with gamma = 1/(4L) the bound
    is 8 L D / T^2.
    """
    from .engine import duality_gap_of

    _require(trace, "y_strategy", ("OFTL",), "rate bound")
    _require(trace, "x_strategy", _MD_STRATEGIES, "rate bound")
    T = trace.T
    if not np.array_equal(trace.alpha, np.arange(1, T + 1, dtype=float)):
        raise ValueError("rate bound needs the linear schedule alpha_t = t")
    L = trace.objective.smoothness_L
    gamma = np.asarray(trace.gamma, dtype=float)
    if np.any(gamma > 1.0 / (4.0 * L) * (1 + 1e-15)) or np.any(np.diff(gamma) > 0):
        raise ValueError("rate bound needs non-increasing gamma_t <= 1/(4L)")
    _, D = _md_parts(trace, None, D, None)
    C = 1.0 / (L * gamma[-1])
    return Certificate(
        name="rate_bound",
        measured=duality_gap_of(trace),
        bound=2.0 * C * L * D / T**2,
        statement=f"gap <= 2 C L D / T^2 with C = {C:.6g}, D = {D:.6g}",
        approximate=not trace.comparator_exact,
    )


def certify_all(trace: GameTrace) -> list:
    """Every certificate that applies to the trace's strategy pair."""
    certs = [certify_equilibrium_gap(trace)]
    if trace.y_strategy == "OFTL":
        certs.append(certify_optimistic_regret(trace))
    elif trace.y_strategy == "FTL":
        certs.append(certify_ftl_regret(trace))
    xs = trace.x_strategy
    if xs in _MD_STRATEGIES:
        certs.append(certify_mirror_descent_regret(trace))
        if trace.y_strategy == "OFTL":
            certs.append(certify_accelerated_bound(trace))
            L = trace.objective.smoothness_L
            linear = np.array_equal(trace.alpha, np.arange(1, trace.T + 1, dtype=float))
            g = np.asarray(trace.gamma)
            if linear and np.all(g <= 1.0 / (4.0 * L) * (1 + 1e-15)) and np.all(np.diff(g) <= 0):
                certs.append(certify_rate_bound(trace))
    elif xs in ("BTRL", "FWGauge"):
        certs.append(certify_btrl_regret(trace))
    elif xs == "StronglyConvexBTL":
        certs.append(certify_strongly_convex_btl_regret(trace))
    return certs
