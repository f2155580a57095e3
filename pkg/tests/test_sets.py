import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq, minimize

from fenchelgame import (
    ProjectionFailure,
    UnsupportedGeometry,
    entropy_geometry,
    euclidean_geometry,
    weighted_euclidean_geometry,
)
from fenchelgame.sets import (
    make_ball_set,
    nonnegative_orthant,
    project_simplex,
    simplex,
    unconstrained,
    weighted_ball_projection,
)


def test_ball_gauge_example():
    assert make_ball_set(2, p=2, radius=5).gauge([3.0, 4.0]) == 1.0


def test_ball_oracle_example():
    np.testing.assert_array_equal(make_ball_set(2).linear_oracle([0.0, 1.0]), [0.0, -1.0])


def test_ball_oracle_zero_direction():
    np.testing.assert_array_equal(make_ball_set(3).linear_oracle(np.zeros(3)), np.zeros(3))


def test_l15_oracle_against_boundary_search():
    # dense sweep of the l_1.5 unit circle
    K = make_ball_set(2, p=1.5)
    phi = np.linspace(0, 2 * np.pi, 400_001)
    d = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    boundary = d / np.linalg.norm(d, ord=1.5, axis=1, keepdims=True)
    rng = np.random.default_rng(0)
    for _ in range(10):
        g = rng.standard_normal(2)
        v = K.linear_oracle(g)
        assert K.gauge(v) == pytest.approx(1.0, abs=1e-12)
        best = np.min(boundary @ g)
        assert v @ g <= best + 1e-12
        assert v @ g >= best - 1e-8


@pytest.mark.parametrize("p", [1.2, 1.5, 2.0, 3.0, np.inf])
def test_ball_oracle_beats_samples(p):
    K = make_ball_set(5, p=p, radius=2.0)
    rng = np.random.default_rng(1)
    for _ in range(50):
        g = rng.standard_normal(5)
        v = K.linear_oracle(g)
        assert K.contains(v)
        xs = rng.standard_normal((200, 5))
        xs = xs / np.maximum(np.array([K.gauge(x) for x in xs]), 1.0)[:, None]
        assert np.all(v @ g <= xs @ g + 1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(1.1, 4.0), st.floats(0.0, 5.0))
def test_gauge_homogeneous_and_bounded(seed, p, c):
    K = make_ball_set(4, p=p, radius=1.7)
    x = np.random.default_rng(seed).standard_normal(4)
    assert K.gauge(c * x) == pytest.approx(c * K.gauge(x), rel=1e-12, abs=1e-15)
    inside = x / max(K.gauge(x), 1.0)
    assert K.gauge(inside) <= 1 + 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(1e-3, 10.0))
def test_projections_land_in_set(seed, step):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(4)
    g = rng.standard_normal(4) * 5
    w = rng.uniform(0.2, 5.0, 4)
    ball = make_ball_set(4, radius=0.8)
    for geo in (euclidean_geometry(), weighted_euclidean_geometry(w)):
        assert ball.contains(ball.bregman_project(c / max(1, np.linalg.norm(c) / 0.8), g, step, geo))
    orth = nonnegative_orthant(4)
    assert orth.contains(orth.bregman_project(np.abs(c), g, step, euclidean_geometry()))
    simp = simplex(4)
    p = rng.dirichlet(np.ones(4))
    for geo in (euclidean_geometry(), entropy_geometry()):
        assert simp.contains(simp.bregman_project(p, g, step, geo))


def test_orthant_clamp_example():
    K = nonnegative_orthant(1)
    assert K.bregman_project([0.1], [1.0], 0.5, euclidean_geometry())[0] == 0.0


def test_euclidean_ball_radial_clamp():
    K = make_ball_set(2)
    x = K.bregman_project(np.zeros(2), np.array([-3.0, -4.0]), 1.0, euclidean_geometry())
    np.testing.assert_allclose(x, [0.6, 0.8], rtol=1e-15)


def test_weighted_ball_projection_matches_scipy():
    rng = np.random.default_rng(4)
    for _ in range(20):
        u = rng.standard_normal(5) * 3
        w = rng.uniform(0.1, 10.0, 5)
        x = weighted_ball_projection(u, w, 1.0)
        assert np.linalg.norm(x) <= 1.0
        # independent multiplier solve: ||w u / (w + lam)|| = 1
        lam = brentq(lambda l: np.linalg.norm(w * u / (w + l)) - 1.0, 0.0, 1e6, xtol=1e-15)
        np.testing.assert_allclose(x, w * u / (w + lam), atol=1e-10)
        res = minimize(lambda z: 0.5 * np.sum(w * (z - u) ** 2), u / np.linalg.norm(u),
                       jac=lambda z: w * (z - u), method="SLSQP",
                       constraints=[{"type": "ineq", "fun": lambda z: 1 - z @ z,
                                     "jac": lambda z: -2 * z}],
                       options={"ftol": 1e-15, "maxiter": 1000})
        np.testing.assert_allclose(x, res.x, atol=1e-6)


def test_weighted_ball_projection_failure():
    with pytest.raises(ProjectionFailure):
        weighted_ball_projection([3.0, 4.0, 0.1], [1.0, 1e6, 1e-6], 1.0, max_iter=1)


def test_entropy_simplex_matches_numeric_minimization():
    K = simplex(3)
    c = np.array([0.2, 0.3, 0.5])
    g = np.array([1.0, -0.5, 0.3])
    geo = entropy_geometry()
    x = K.bregman_project(c, g, 0.7, geo)
    res = minimize(lambda z: 0.7 * z @ g + geo.divergence(c, z), c, method="SLSQP",
                   bounds=[(1e-12, 1)] * 3,
                   constraints=[{"type": "eq", "fun": lambda z: z.sum() - 1}],
                   options={"ftol": 1e-15, "maxiter": 1000})
    np.testing.assert_allclose(x, res.x, atol=1e-6)
    np.testing.assert_allclose(x, c * np.exp(-0.7 * g) / np.sum(c * np.exp(-0.7 * g)), rtol=1e-14)


def test_multiplicative_weights_on_two_simplex():
    K = simplex(2)
    x = K.bregman_project(np.array([0.5, 0.5]), np.array([-1.0, 0.0]), 1.0, entropy_geometry())
    np.testing.assert_allclose(x, [np.e / (np.e + 1), 1 / (np.e + 1)], rtol=1e-14)


def test_project_simplex_matches_brute_force():
    rng = np.random.default_rng(9)
    for _ in range(30):
        v = rng.standard_normal(4) * 2
        x = project_simplex(v)
        res = minimize(lambda z: np.sum((z - v) ** 2), np.full(4, 0.25), method="SLSQP",
                       bounds=[(0, 1)] * 4, constraints=[{"type": "eq", "fun": lambda z: z.sum() - 1}],
                       options={"ftol": 1e-15})
        np.testing.assert_allclose(x, res.x, atol=1e-6)


def test_simplex_oracle_vertex():
    np.testing.assert_array_equal(simplex(3).linear_oracle([0.5, -1.0, -1.0]), [0, 1, 0])


def test_unsupported_geometry():
    with pytest.raises(UnsupportedGeometry):
        make_ball_set(3, p=1.5).bregman_project(np.zeros(3), np.ones(3), 1.0, euclidean_geometry())
    with pytest.raises(UnsupportedGeometry):
        make_ball_set(3).bregman_project(np.zeros(3), np.ones(3), 1.0, entropy_geometry())
    with pytest.raises(UnsupportedGeometry):
        unconstrained(3).bregman_project(np.ones(3) / 3, np.ones(3), 1.0, entropy_geometry())


def test_ball_validation():
    with pytest.raises(ValueError):
        make_ball_set(2, p=1.0)
    with pytest.raises(ValueError):
        make_ball_set(2, radius=0)
