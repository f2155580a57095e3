"""Seeded runs spanning every valid strategy pair, shared by the
certificate property tests and the acceptance suite."""

import numpy as np

from fenchelgame import (
    ConstantGamma,
    GameSpec,
    LearnerConfig,
    gauge_squared,
    make_ball_quadratic,
    make_l1_composite,
    make_logsumexp,
    make_quadratic,
    make_schedule,
    weighted_euclidean_geometry,
)

PAIRS = [
    ("OFTL", "OGD"), ("FTL", "OGD"),
    ("OFTL", "MirrorDescent"), ("FTL", "MirrorDescent"),
    ("OFTL", "BTRL"), ("FTL", "BTRL"),
    ("OFTL", "ProxMD"), ("FTL", "ProxMD"),
    ("OFTL", "FWGauge"), ("FTL", "FWGauge"),
    ("OFTL", "StronglyConvexBTL"),
]


def matrix_spec(seed: int) -> GameSpec:
    """Run number ``seed``: the pair cycles through PAIRS, the problem,
    step scale, dimension and horizon are drawn from the seed."""
    y, x = PAIRS[seed % len(PAIRS)]
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 9))
    T = int(rng.integers(5, 200))
    kappa = float(rng.uniform(1.5, 60))
    scale = float(rng.uniform(0.1, 1.0))
    x0 = rng.standard_normal(d)

    if x == "StronglyConvexBTL":
        P = make_quadratic(d, kappa=kappa, seed=seed)
        return P.spec(T, schedule=make_schedule("exponential", kappa=kappa),
                      x_strategy=x)
    if x == "ProxMD":
        P = make_l1_composite(d, lam=float(rng.uniform(0.05, 1)), kappa=kappa, seed=seed)
    elif x in ("MirrorDescent", "FWGauge") or (x == "BTRL" and seed % 2):
        P = make_ball_quadratic(d, radius=float(rng.uniform(0.5, 2)),
                                center_norm=float(rng.uniform(0.1, 4)), kappa=kappa, seed=seed)
        x0 = np.zeros(d) if x == "FWGauge" else x0 / np.linalg.norm(x0) * 0.4 * P.data["radius"]
    elif seed % 3 == 0:
        P = make_logsumexp(d, seed=seed, temperature=float(rng.uniform(0.3, 2)))
    else:
        P = make_quadratic(d, kappa=kappa, seed=seed)
    L = P.objective.smoothness_L
    geometry = None
    if x == "MirrorDescent" and seed % 4 == 2:
        geometry = weighted_euclidean_geometry(rng.uniform(1.0, 3.0, d))
    cfg = LearnerConfig(gamma_schedule=ConstantGamma(scale / (4 * L)), eta=scale / (4 * L),
                        **({"geometry": geometry} if geometry is not None else {}))
    if x == "BTRL" and not P.set.unconstrained and seed % 5 == 0:
        cfg = LearnerConfig(eta=scale / (4 * L), regularizer=gauge_squared(P.set))
        x0 = np.zeros(d)
    if x in ("BTRL",) and P.set.unconstrained:
        x0 = np.zeros(d)
    return P.spec(T, y_strategy=y, x_strategy=x, learner_config=cfg, start_x0=x0)
