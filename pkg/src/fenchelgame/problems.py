"""Test problems with analytic or independently computed optima.

Every factory returns a :class:`ProblemInstance`. Quadratics carry closed
forms; log-sum-exp and the 20-D l1 problem carry reference optima from
solvers that share no code with the game engine (damped Newton and ISTA).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp, softmax

from .core import FeasibleSet, Objective, as_point
from .learners import L1Term
from .sets import make_ball_set, unconstrained

__all__ = [
    "ProblemInstance",
    "log_spectrum",
    "random_orthogonal",
    "make_quadratic",
    "make_logsumexp",
    "make_l1_composite",
    "make_ball_quadratic",
    "make_ball_set",
    "soft_threshold",
    "PROBLEMS",
    "get_problem",
]


@dataclass(frozen=True)
class ProblemInstance:
    """An objective, its set, an optional composite term and its optimum.

    Attributes
    ----------
    analytic_optimum : tuple (x*, F*) or None
        Optimum of F = f + psi over the set.
    optimum_is_reference : bool
        True when the optimum came from a numerical solver rather than a
        closed form.
    data : dict
        Problem-specific arrays (Q, b, anchors, ...).
    """

    objective: Objective
    set: FeasibleSet
    composite_psi: Any = None
    seed: int = 0
    analytic_optimum: Optional[tuple] = None
    optimum_is_reference: bool = False
    name: str = "problem"
    data: dict = field(default_factory=dict)

    @property
    def x_star(self) -> Optional[np.ndarray]:
        return None if self.analytic_optimum is None else self.analytic_optimum[0]

    @property
    def f_star(self) -> Optional[float]:
        return None if self.analytic_optimum is None else self.analytic_optimum[1]

    def value(self, x) -> float:
        """F(x) = f(x) + psi(x)."""
        v = float(self.objective.value(np.asarray(x, float)))
        if self.composite_psi is not None:
            v += float(self.composite_psi.value(x))
        return v

    def spec(self, rounds_T: int, **kwargs):
        """A :class:`~fenchelgame.engine.GameSpec` for this problem with the
        optimum as comparator."""
        from .engine import GameSpec

        kwargs.setdefault("set", self.set)
        kwargs.setdefault("composite_psi", self.composite_psi)
        if self.analytic_optimum is not None:
            kwargs.setdefault("comparator", self.x_star)
            kwargs.setdefault("f_star", self.f_star)
            kwargs.setdefault("comparator_exact", not self.optimum_is_reference)
        return GameSpec(objective=self.objective, rounds_T=rounds_T, **kwargs)


def log_spectrum(dim: int, kappa: float, mu: float = 1.0) -> np.ndarray:
    """``dim`` eigenvalues log-spaced from mu to kappa * mu."""
    if dim == 1:
        return np.array([mu])
    return mu * np.logspace(0.0, np.log10(kappa), dim)


def random_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian, sign-fixed)."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def make_quadratic(dim: int, spectrum=None, b=None, seed: int = 0,
                   kappa: Optional[float] = None, constant: float = 0.0,
                   name: str = "quadratic") -> ProblemInstance:
    """f(x) = x'Qx/2 - b'x + constant with Q = U diag(spectrum) U'.

    Parameters
    ----------
    spectrum : array, optional
        Eigenvalues of Q. Defaults to :func:`log_spectrum` when ``kappa`` is
        given and to all ones otherwise. A constant spectrum gives Q = sI
        exactly.
    b : array, optional
        Linear term, standard normal from ``seed`` if omitted.
    seed : int
        Seeds U and b.

    Notes
    -----
    x* = Q^{-1} b, f* = constant - b'x*/2, f*(y) = (y+b)'Q^{-1}(y+b)/2 - constant,
    L = max(spectrum), mu = min(spectrum).
    """
    rng = np.random.default_rng(seed)
    if spectrum is None:
        spectrum = log_spectrum(dim, kappa) if kappa is not None else np.ones(dim)
    s = as_point(spectrum, dim)
    if np.any(s <= 0):
        raise ValueError("spectrum must be positive")
    if np.all(s == s[0]):
        U = np.eye(dim)
        Q = s[0] * np.eye(dim)
    else:
        U = random_orthogonal(dim, rng)
        Q = (U * s) @ U.T
        Q = 0.5 * (Q + Q.T)
    b = rng.standard_normal(dim) if b is None else as_point(b, dim)
    Qinv = (U / s) @ U.T
    x_star = U @ ((U.T @ b) / s)
    c = float(constant)
    f_star = c - 0.5 * float(b @ x_star)
    Q.setflags(write=False)
    Qinv.setflags(write=False)
    b.setflags(write=False)

    def value(x):
        return 0.5 * float(x @ Q @ x) - float(b @ x) + c

    def gradient(x):
        return Q @ x - b

    def conjugate(y):
        u = y + b
        return 0.5 * float(u @ Qinv @ u) - c

    obj = Objective(
        dim=dim, value=value, gradient=gradient,
        smoothness_L=float(s.max()), strong_convexity_mu=float(s.min()),
        analytic_conjugate=conjugate, known_minimizer=x_star, name=name,
    )
    return ProblemInstance(
        objective=obj, set=unconstrained(dim), seed=seed,
        analytic_optimum=(x_star, f_star), name=name,
        data={"Q": Q, "b": b, "U": U, "spectrum": s, "Qinv": Qinv},
    )


def _newton_minimize(value, gradient, hessian, x0, tol=1e-13, max_iter=200):
    """Damped Newton with Armijo backtracking."""
    x = np.array(x0, dtype=float)
    for _ in range(max_iter):
        g = gradient(x)
        if np.linalg.norm(g) <= tol:
            return x
        step = np.linalg.solve(hessian(x), -g)
        fx, slope = value(x), float(g @ step)
        lr = 1.0
        # near the optimum the predicted decrease drops below the rounding
        # resolution of f; the full Newton step is then taken as is
        if -slope > 1e3 * np.finfo(float).eps * max(1.0, abs(fx)):
            while value(x + lr * step) > fx + 0.25 * lr * slope and lr > 1e-12:
                lr *= 0.5
        x = x + lr * step
    if np.linalg.norm(gradient(x)) <= 1e3 * tol:
        return x
    raise RuntimeError("Newton reference solve did not converge")


def make_logsumexp(dim: int, anchors=None, temperature: float = 1.0,
                   offsets=None, seed: int = 0, n_random: Optional[int] = None,
                   anchor_decay: Optional[float] = None,
                   name: str = "logsumexp") -> ProblemInstance:
    """f(x) = tau * log sum_i exp(<a_i, x>/tau - c_i).

    Parameters
    ----------
    anchors : (n, dim) array, optional
        Rows a_i. Defaults to +-e_i plus ``n_random`` (default ``dim``)
        random unit vectors, so that 0 lies inside their hull and f is
        bounded below.
    anchor_decay : float, optional
        If given (and ``anchors`` is not), use only the axis anchors
        +-s_i e_i with s_i log-spaced over ``anchor_decay`` decades, which
        makes the curvature at the optimum spread over 2 * anchor_decay
        decades.
    temperature : float
        tau; smaller is sharper and less smooth.
    offsets : (n,) array, optional
        c_i, uniform on [0, 1) from ``seed`` if omitted.

    Notes
    -----
    L = max_i ||a_i||^2 / tau. The optimum is found by damped Newton to a
    gradient norm of 1e-13, independently of the game engine. Anchors whose
    hull misses the origin give an f with no minimizer; the instance then
    carries no optimum.
    """
    rng = np.random.default_rng(seed)
    if anchors is None and anchor_decay is not None:
        scales = np.logspace(0.0, -float(anchor_decay), dim)
        anchors = np.vstack([np.diag(scales), -np.diag(scales)])
    elif anchors is None:
        n_random = dim if n_random is None else n_random
        extra = rng.standard_normal((n_random, dim))
        extra /= np.linalg.norm(extra, axis=1, keepdims=True)
        anchors = np.vstack([np.eye(dim), -np.eye(dim), extra])
    A = np.array(anchors, dtype=float)
    if A.ndim != 2 or A.shape[1] != dim:
        raise ValueError("anchors must have shape (n, dim)")
    c = rng.uniform(0.0, 1.0, A.shape[0]) if offsets is None else as_point(offsets, A.shape[0])
    tau = float(temperature)
    A.setflags(write=False)
    c.setflags(write=False)

    def value(x):
        return tau * float(logsumexp(A @ x / tau - c))

    def gradient(x):
        return A.T @ softmax(A @ x / tau - c)

    def hessian(x):
        p = softmax(A @ x / tau - c)
        Ap = A.T @ p
        return ((A.T * p) @ A - np.outer(Ap, Ap)) / tau

    L = float(np.max(np.sum(A * A, axis=1))) / tau
    try:
        x_star = _newton_minimize(value, gradient, hessian, np.zeros(dim))
        optimum = (x_star, value(x_star))
    except (np.linalg.LinAlgError, RuntimeError):
        # unbounded below or no attained minimum (0 outside the anchors' hull)
        x_star, optimum = None, None
    obj = Objective(dim=dim, value=value, gradient=gradient, smoothness_L=L,
                    known_minimizer=x_star, name=name)
    return ProblemInstance(
        objective=obj, set=unconstrained(dim), seed=seed,
        analytic_optimum=optimum, optimum_is_reference=True,
        name=name, data={"anchors": A, "offsets": c, "temperature": tau},
    )


def soft_threshold(v, thresh):
    """sign(v) * max(|v| - thresh, 0)."""
    return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)


def _ista(Q, b, lam, L, tol=1e-15, max_iter=1_000_000):
    """Proximal gradient on x'Qx/2 - b'x + lam ||x||_1 to a fixed point."""
    x = np.zeros(b.shape[0])
    for _ in range(max_iter):
        x_new = soft_threshold(x - (Q @ x - b) / L, lam / L)
        if np.max(np.abs(x_new - x)) <= tol * max(1.0, np.max(np.abs(x_new))):
            return x_new
        x = x_new
    raise RuntimeError("ISTA reference solve did not converge")


def make_l1_composite(dim: Optional[int] = None, quadratic: Optional[ProblemInstance] = None,
                      lam: float = 1.0, seed: int = 0, kappa: float = 10.0,
                      name: str = "l1_composite") -> ProblemInstance:
    """F(x) = f(x) + lam ||x||_1 for a quadratic f.

    Parameters
    ----------
    quadratic : ProblemInstance, optional
        The smooth part; defaults to ``make_quadratic(dim, kappa=kappa, seed=seed)``.

    Notes
    -----
    A diagonal Q gives the coordinatewise closed form
    x*_i = soft_threshold(b_i, lam) / Q_ii. Otherwise the optimum is an ISTA
    fixed point (linear convergence since Q is positive definite) and is
    marked as a reference.
    """
    if quadratic is None:
        if dim is None:
            raise TypeError("give dim or quadratic")
        quadratic = make_quadratic(dim, kappa=kappa, seed=seed)
    Q, b = quadratic.data["Q"], quadratic.data["b"]
    obj = quadratic.objective
    psi = L1Term(float(lam))
    diag = np.diag(Q)
    if np.array_equal(Q, np.diag(diag)):
        x_star = soft_threshold(b, lam) / diag
        reference = False
    else:
        x_star = _ista(Q, b, lam, obj.smoothness_L)
        reference = True
    f_star = float(obj.value(x_star)) + psi.value(x_star)
    obj = replace(obj, known_minimizer=None, name=name)
    return ProblemInstance(
        objective=obj, set=quadratic.set, composite_psi=psi, seed=quadratic.seed,
        analytic_optimum=(x_star, f_star), optimum_is_reference=reference,
        name=name, data=dict(quadratic.data, lam=float(lam)),
    )


def make_ball_quadratic(dim: int, radius: float = 1.0, center=None,
                        center_norm: Optional[float] = None, kappa: float = 10.0,
                        seed: int = 0, name: str = "ball_quadratic") -> ProblemInstance:
    """Quadratic with unconstrained minimizer ``center`` over an l2 ball.

    Parameters
    ----------
    center : array, optional
        Unconstrained minimizer; a random direction scaled to
        ``center_norm`` (default radius / 2) if omitted.

    Notes
    -----
    When the center lies outside the ball the constrained optimum solves
    (Q + lam I) x = b with ||x|| = r, found by root-finding on the
    eigenbasis secular equation.
    """
    rng = np.random.default_rng(seed + 7919)
    if center is None:
        u = rng.standard_normal(dim)
        center = u / np.linalg.norm(u) * (0.5 * radius if center_norm is None else center_norm)
    center = as_point(center, dim)
    base = make_quadratic(dim, kappa=kappa, seed=seed)
    U, s = base.data["U"], base.data["spectrum"]
    Q = base.data["Q"]
    b = Q @ center
    quad = make_quadratic(dim, spectrum=s, b=b, seed=seed, name=name)
    # same seed, same U: x* of quad is the center up to rounding
    U = quad.data["U"]
    K = make_ball_set(dim, 2.0, radius)
    Ub = U.T @ quad.data["b"]
    if np.linalg.norm(quad.x_star) <= radius:
        x_star = quad.x_star
    else:
        def excess(lam):
            return np.linalg.norm(Ub / (s + lam)) - radius

        hi = np.linalg.norm(Ub) / radius
        lam = brentq(excess, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        x_star = U @ (Ub / (s + lam))
        x_star *= min(1.0, radius / np.linalg.norm(x_star))
    f_star = float(quad.objective.value(x_star))
    return ProblemInstance(
        objective=quad.objective, set=K, seed=seed, analytic_optimum=(x_star, f_star),
        name=name, data=dict(quad.data, radius=float(radius), center=center),
    )


def _make_lasso_1d(lam: float = 1.0, shift: float = 3.0) -> ProblemInstance:
    """f(x) = (x - shift)^2 / 2 with lam |x|; x* = soft_threshold(shift, lam)."""
    quad = make_quadratic(1, spectrum=[1.0], b=[shift], constant=0.5 * shift**2,
                          name="lasso_1d")
    return make_l1_composite(quadratic=quad, lam=lam, name="lasso_1d")


PROBLEMS = {
    "quadratic": make_quadratic,
    "logsumexp": make_logsumexp,
    "l1_composite": make_l1_composite,
    "lasso_1d": _make_lasso_1d,
    "ball_quadratic": make_ball_quadratic,
}


def get_problem(name: str, **params) -> ProblemInstance:
    """Build a registered problem by name."""
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {sorted(PROBLEMS)}") from None
    return factory(**params)
