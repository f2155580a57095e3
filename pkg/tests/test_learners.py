import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fenchelgame import (
    ConstantGamma,
    L1Term,
    LearnerConfig,
    MissingOracle,
    Nesterov83Gamma,
    Objective,
    ProxUnavailable,
    RequiresStrongConvexity,
    ZeroTerm,
    corollary_gamma,
    entropy_geometry,
    euclidean_geometry,
    gauge_squared,
    make_schedule,
    weighted_euclidean_geometry,
)
from fenchelgame.learners import (
    RoundContext,
    btl_strongly_convex_x_step,
    btrl_x_step,
    check_gamma_schedule,
    fw_gauge_x_step,
    ftl_y_step,
    mirror_descent_x_step,
    ogd_x_step,
    oftl_y_step,
    prox_md_x_step,
)
from fenchelgame.sets import make_ball_set, nonnegative_orthant, simplex, unconstrained
from oracles import numeric_argmin


def ctx(t=1, alpha=1.0, A=1.0, A_prev=0.0, x_prev=(0.0,), xbar_prev=None, xtilde=None, S=None):
    x_prev = np.atleast_1d(np.asarray(x_prev, float))
    d = x_prev.size
    return RoundContext(
        t=t, alpha_t=alpha, A_t=A, A_prev=A_prev, x_prev=x_prev,
        xbar_prev=x_prev if xbar_prev is None else np.asarray(xbar_prev, float),
        xtilde_t=x_prev if xtilde is None else np.asarray(xtilde, float),
        y_weighted_sum=np.zeros(d) if S is None else np.asarray(S, float),
    )


def half_square(dim=1, mu=1.0):
    return Objective(dim, lambda x: 0.5 * float(x @ x), lambda x: np.array(x, float), 1.0, mu)


# ---- y-player -----------------------------------------------------------------------

def test_oftl_fixture_rounds():
    assert oftl_y_step(half_square(), ctx(xtilde=[1.0]))[0] == 1.0
    assert oftl_y_step(half_square(), ctx(t=3, xtilde=[0.4375]))[0] == 0.4375


def test_oftl_constant_gradient():
    g0 = np.array([2.0, -1.0])
    obj = Objective(2, lambda x: float(g0 @ x), lambda x: g0.copy(), 1.0)
    for t in range(1, 5):
        np.testing.assert_array_equal(oftl_y_step(obj, ctx(t=t, x_prev=np.full(2, t))), g0)


def test_ftl_examples():
    assert ftl_y_step(half_square(), ctx(xbar_prev=[1.0]))[0] == 1.0
    assert ftl_y_step(half_square(), ctx(t=2, xbar_prev=[0.75]))[0] == 0.75
    Q = np.diag([2.0, 1.0])
    obj = Objective(2, lambda x: 0.5 * float(x @ Q @ x), lambda x: Q @ x, 2.0)
    np.testing.assert_array_equal(ftl_y_step(obj, ctx(x_prev=[0.0, 0.0], xbar_prev=[1.0, 1.0])),
                                  [2.0, 1.0])


def test_oftl_is_leader_with_hint():
    # y_t maximizes sum_{s<t} alpha_s <x_s, y> + alpha_t <x_{t-1}, y> - A_t f*(y)
    Q = np.diag([1.0, 3.0])
    Qinv = np.linalg.inv(Q)
    obj = Objective(2, lambda x: 0.5 * float(x @ Q @ x), lambda x: Q @ x, 3.0)
    rng = np.random.default_rng(0)
    xs = rng.standard_normal((4, 2))
    alphas = np.arange(1.0, 5.0)
    t = 4
    A = alphas.sum()
    hist = alphas[: t - 1, None] * xs[: t - 1]
    lin = hist.sum(axis=0) + alphas[t - 1] * xs[t - 2]
    xtilde = lin / A
    y = oftl_y_step(obj, ctx(t=t, x_prev=xs[t - 2], xtilde=xtilde))
    y_num = numeric_argmin(lambda v: -(lin @ v) + A * 0.5 * v @ Qinv @ v, np.zeros(2))
    np.testing.assert_allclose(y, y_num, atol=1e-6)


# ---- mirror descent and OGD ------------------------------------------------------------

def test_md_gradient_step_example():
    cfg = LearnerConfig(gamma_schedule=ConstantGamma(0.25))
    x = mirror_descent_x_step(cfg, unconstrained(1), ctx(x_prev=[1.0]), np.array([1.0]))
    assert x[0] == 0.75


def test_md_halfline_clamp():
    cfg = LearnerConfig(gamma_schedule=ConstantGamma(0.5))
    x = mirror_descent_x_step(cfg, nonnegative_orthant(1), ctx(x_prev=[0.1]), np.array([1.0]))
    assert x[0] == 0.0


def test_md_entropy_on_simplex_matches_grid():
    cfg = LearnerConfig(gamma_schedule=ConstantGamma(1.0), geometry=entropy_geometry())
    y = np.array([-1.0, 0.0])
    x = mirror_descent_x_step(cfg, simplex(2), ctx(x_prev=[0.5, 0.5]), y)
    p = np.linspace(1e-9, 1 - 1e-9, 2_000_001)
    grid = np.stack([p, 1 - p], axis=1)
    vals = grid @ y + np.sum(grid * np.log(grid / 0.5), axis=1)
    best = grid[np.argmin(vals)]
    np.testing.assert_allclose(x, best, atol=1e-6)
    assert x[0] > 0.5


def test_md_equals_ogd_on_random_inputs():
    rng = np.random.default_rng(1)
    K = unconstrained(5)
    for _ in range(1000):
        g = rng.uniform(1e-3, 2.0)
        cfg = LearnerConfig(gamma_schedule=ConstantGamma(g))
        c = ctx(t=int(rng.integers(1, 100)), alpha=rng.uniform(0.1, 50), x_prev=rng.standard_normal(5))
        y = rng.standard_normal(5)
        np.testing.assert_array_equal(mirror_descent_x_step(cfg, K, c, y), ogd_x_step(cfg, c, y))


def test_ogd_fixture_rounds():
    cfg = LearnerConfig(gamma_schedule=ConstantGamma(0.25))
    assert ogd_x_step(cfg, ctx(x_prev=[1.0]), np.array([1.0]))[0] == 0.75
    assert ogd_x_step(cfg, ctx(t=2, alpha=2.0, x_prev=[0.75]), np.array([0.75]))[0] == 0.375
    assert ogd_x_step(cfg, ctx(x_prev=[0.3]), np.array([0.0]))[0] == 0.3


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), which=st.sampled_from(["ball", "ball_w", "orthant", "simplex_e", "simplex"]))
def test_three_point_inequality(seed, which):
    rng = np.random.default_rng(seed)
    d = 4
    if which.startswith("simplex"):
        K = simplex(d)
        geo = entropy_geometry() if which == "simplex_e" else euclidean_geometry()
        x_prev = rng.dirichlet(np.ones(d))
        comps = rng.dirichlet(np.ones(d), size=10)
    elif which == "orthant":
        K, geo = nonnegative_orthant(d), euclidean_geometry()
        x_prev = np.abs(rng.standard_normal(d))
        comps = np.abs(rng.standard_normal((10, d)))
    else:
        K = make_ball_set(d)
        geo = weighted_euclidean_geometry(rng.uniform(0.5, 3, d)) if which == "ball_w" else euclidean_geometry()
        x_prev = rng.standard_normal(d)
        x_prev /= max(1.0, np.linalg.norm(x_prev))
        comps = rng.standard_normal((10, d))
        comps /= np.maximum(1.0, np.linalg.norm(comps, axis=1))[:, None]
    gamma, alpha = rng.uniform(0.01, 1), rng.uniform(0.5, 5)
    cfg = LearnerConfig(gamma_schedule=ConstantGamma(gamma), geometry=geo)
    y = rng.standard_normal(d)
    x = mirror_descent_x_step(cfg, K, ctx(alpha=alpha, x_prev=x_prev), y)
    assert K.contains(x)
    for xs in comps:
        lhs = (x - xs) @ (gamma * alpha * y)
        rhs = geo.divergence(x_prev, xs) - geo.divergence(x, xs) - geo.divergence(x_prev, x)
        assert lhs <= rhs + 1e-9


# ---- BTRL -----------------------------------------------------------------------

def test_btrl_unconstrained_examples():
    cfg = LearnerConfig(eta=0.25)
    x = btrl_x_step(cfg, unconstrained(2), ctx(x_prev=[0.0, 0.0], S=[1.0, -2.0]), np.zeros(2))
    np.testing.assert_allclose(x, [-0.25, 0.5], rtol=1e-15)
    rng = np.random.default_rng(2)
    S = rng.standard_normal(3)
    x = btrl_x_step(LearnerConfig(eta=0.7), unconstrained(3), ctx(x_prev=np.zeros(3), S=S), S)
    np.testing.assert_allclose(x, -0.7 * S, rtol=1e-15)


def test_btrl_ball_radial_clamp_vs_search():
    cfg = LearnerConfig(eta=0.5)
    S = np.array([3.0, -4.0])
    x = btrl_x_step(cfg, make_ball_set(2), ctx(x_prev=[0.0, 0.0], S=S), S)
    direction = -S / np.linalg.norm(S)
    scales = np.linspace(0, 1, 1_000_001)
    vals = scales * (direction @ S) + scales**2 / (2 * 0.5)
    np.testing.assert_allclose(x, scales[np.argmin(vals)] * direction, atol=1e-6)
    assert np.linalg.norm(x) == pytest.approx(1.0, abs=1e-15)


def test_btrl_needs_eta():
    with pytest.raises(ValueError):
        btrl_x_step(LearnerConfig(), unconstrained(1), ctx(), np.zeros(1))


def test_btrl_gauge_regularizer_uses_frank_wolfe():
    K = make_ball_set(2)
    cfg = LearnerConfig(eta=0.25, regularizer=gauge_squared(K))
    x = btrl_x_step(cfg, K, ctx(x_prev=[0.0, 0.0], S=[0.0, 2.0]), np.zeros(2))
    np.testing.assert_allclose(x, [0.0, -0.25], atol=1e-15)


# ---- prox ----------------------------------------------------------------------

def test_prox_zero_is_ogd():
    rng = np.random.default_rng(3)
    for _ in range(200):
        cfg = LearnerConfig(gamma_schedule=ConstantGamma(rng.uniform(0.01, 1)))
        c = ctx(t=3, alpha=rng.uniform(0.5, 9), x_prev=rng.standard_normal(4))
        y = rng.standard_normal(4)
        np.testing.assert_array_equal(prox_md_x_step(cfg, ZeroTerm(), c, y), ogd_x_step(cfg, c, y))


def test_soft_threshold_examples():
    psi = L1Term(1.0)
    assert psi.prox(np.array([1.5]), 1.0)[0] == 0.5
    assert psi.prox(np.array([-0.3]), 1.0)[0] == 0.0
    cfg = LearnerConfig(gamma_schedule=ConstantGamma(0.5))
    x = prox_md_x_step(cfg, L1Term(1.0), ctx(alpha=2.0, x_prev=[2.5]), np.array([1.0]))
    assert x[0] == 0.5


def test_prox_composite_three_point():
    rng = np.random.default_rng(4)
    psi = L1Term(0.3)
    for _ in range(200):
        step = rng.uniform(0.01, 2)
        x_prev, y = rng.standard_normal((2, 5))
        cfg = LearnerConfig(gamma_schedule=ConstantGamma(step))
        x = prox_md_x_step(cfg, psi, ctx(x_prev=x_prev), y)
        for xs in rng.standard_normal((10, 5)):
            lhs = step * ((x - xs) @ y + psi.value(x) - psi.value(xs))
            rhs = 0.5 * ((x_prev - xs) @ (x_prev - xs) - (x - xs) @ (x - xs)
                         - (x_prev - x) @ (x_prev - x))
            assert lhs <= rhs + 1e-9


def test_prox_unavailable():
    class Bare:
        def value(self, x):
            return 0.0

    with pytest.raises(ProxUnavailable):
        prox_md_x_step(LearnerConfig(gamma_schedule=ConstantGamma(1.0)), Bare(), ctx(), np.zeros(1))
    with pytest.raises(ValueError):
        L1Term(-1.0)


# ---- strongly convex BTL ------------------------------------------------------------

def test_btl_warmup_is_origin():
    s = make_schedule("exponential", kappa=4)
    np.testing.assert_array_equal(btl_strongly_convex_x_step(half_square(3), s, ctx(t=0, x_prev=np.zeros(3)), None),
                                  np.zeros(3))


def test_btl_closed_form_example():
    s = make_schedule("exponential", kappa=6, alpha0=1.0)
    x = btl_strongly_convex_x_step(half_square(), s, ctx(S=[0.6]), np.array([3.0]))
    assert x[0] == pytest.approx(-0.5, rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), t=st.integers(1, 30), mu=st.floats(0.1, 5.0),
       c=st.floats(-5.0, 5.0))
def test_btl_matches_numeric_argmin_and_scales(seed, t, mu, c):
    rng = np.random.default_rng(seed)
    s = make_schedule("exponential", kappa=float(rng.uniform(1, 100)))
    obj = half_square(3, mu=min(mu, 1.0))
    mu = obj.strong_convexity_mu
    ys = rng.standard_normal((t, 3))
    alpha = np.array([s.weight_at(i) for i in range(1, t + 1)])
    S = alpha @ ys
    x = btl_strongly_convex_x_step(obj, s, ctx(t=t, x_prev=np.zeros(3), S=S), ys[-1])

    def cumulative(v):
        return s.weight_at(0) * 0.5 * mu * v @ v + sum(
            a * (v @ y + 0.5 * mu * v @ v) for a, y in zip(alpha, ys))

    def cumulative_grad(v):
        return mu * s.tilde_cumulative_at(t) * v + S

    x_num = numeric_argmin(cumulative, np.zeros(3), jac=cumulative_grad)
    assert np.linalg.norm(x - x_num) <= 1e-8 * (1 + np.linalg.norm(x))
    xc = btl_strongly_convex_x_step(obj, s, ctx(t=t, x_prev=np.zeros(3), S=c * S), ys[-1])
    np.testing.assert_allclose(xc, c * x, rtol=1e-12, atol=1e-15)


def test_btl_requires_strong_convexity():
    with pytest.raises(RequiresStrongConvexity):
        btl_strongly_convex_x_step(half_square(mu=0.0), make_schedule("exponential", kappa=1),
                                   ctx(), np.zeros(1))


# ---- Frank-Wolfe ----------------------------------------------------------------

def test_fw_example_and_grid():
    K = make_ball_set(2)
    x = fw_gauge_x_step(K, 0.25, ctx(x_prev=[0.0, 0.0], S=[0.0, 2.0]), np.zeros(2))
    np.testing.assert_allclose(x, [0.0, -0.25], atol=1e-15)
    # joint grid over rho and boundary angle
    phi = np.linspace(0, 2 * np.pi, 3601)
    rho = np.linspace(0, 1, 2001)
    pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    vals = rho[:, None] * (pts @ np.array([0.0, 2.0]))[None, :] + rho[:, None] ** 2 / 0.25
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    np.testing.assert_allclose(x, rho[i] * pts[j], atol=1e-3)


def test_fw_zero_loss_plays_origin():
    x = fw_gauge_x_step(make_ball_set(3), 1.0, ctx(x_prev=np.zeros(3), S=np.zeros(3)), np.zeros(3))
    np.testing.assert_array_equal(x, np.zeros(3))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), p=st.sampled_from([1.5, 2.0, 3.0, np.inf]),
       eta=st.floats(1e-3, 100.0), scale=st.floats(1e-3, 1e3))
def test_fw_feasible_and_rho_in_unit_interval(seed, p, eta, scale):
    K = make_ball_set(4, p=p, radius=2.0)
    S = np.random.default_rng(seed).standard_normal(4) * scale
    x = fw_gauge_x_step(K, eta, ctx(x_prev=np.zeros(4), S=S), S)
    assert K.contains(x)
    assert 0.0 <= K.gauge(x) <= 1.0 + 1e-12


def test_fw_missing_oracle():
    with pytest.raises(MissingOracle):
        fw_gauge_x_step(nonnegative_orthant(2), 1.0, ctx(x_prev=np.zeros(2), S=np.ones(2)), np.ones(2))


# ---- step-size schedules ------------------------------------------------------------

def test_gamma_presets():
    assert corollary_gamma(2.0)(7) == 0.125
    g = Nesterov83Gamma(1.0)
    assert g(1) == 0.25 and g(3) == pytest.approx(4 / 24)
    assert check_gamma_schedule(g, 100, L=1.0)
    assert check_gamma_schedule(corollary_gamma(3.0), 50, L=3.0, C=5.0)
    assert not check_gamma_schedule(lambda t: 0.1 * t, 5)
    assert not check_gamma_schedule(ConstantGamma(1.0), 5, L=1.0)
