"""Nesterov's method, heavy ball and the two-sequence methods all fall out of
one weighted game between a gradient player and an x player.

Run: python demos/01_game_is_nesterov.py
"""

import numpy as np

from fenchelgame import (
    LearnerConfig,
    Nesterov83Gamma,
    check_equivalence,
    corollary_gamma,
    heavy_ball_run,
    make_quadratic,
    nesterov83_run,
    nesterov_1mem_run,
    run_game,
)

P = make_quadratic(20, kappa=50, seed=0)
L = P.objective.smoothness_L
x0 = np.random.default_rng(0).standard_normal(20)
T = 100

# %% Nesterov 1983 against optimistic FTL + gradient descent
# The game with gamma_t = (t+1)/(8Lt) is the classical method with step 1/(4L).
classic = nesterov83_run(P.objective, x0, 1 / (4 * L), T)
game = run_game(P.spec(T, start_x0=x0,
                       learner_config=LearnerConfig(gamma_schedule=Nesterov83Gamma(L))))
rep = check_equivalence(classic.w, game.xbar)
print(f"Nesterov83   vs OFTL+OGD  max relative deviation {rep.max_deviation:.1e}")

# %% Heavy ball is the same game with a non-optimistic y player
hb = heavy_ball_run(P.objective, x0, corollary_gamma(L), T=T)
game_ftl = run_game(P.spec(T, y_strategy="FTL", start_x0=x0,
                           learner_config=LearnerConfig(gamma_schedule=corollary_gamma(L))))
print(f"heavy ball   vs FTL+OGD   max relative deviation "
      f"{check_equivalence(hb.xbar, game_ftl.xbar).max_deviation:.1e}")

# %% One-memory method against optimistic FTL + mirror descent
one = nesterov_1mem_run(P.objective, P.set, x0=x0, T=T)
game_md = run_game(P.spec(T, x_strategy="MirrorDescent", start_x0=x0,
                          learner_config=LearnerConfig(gamma_schedule=corollary_gamma(L))))
print(f"one-memory   vs OFTL+MD   max relative deviation "
      f"{check_equivalence(one.w, game_md.xbar).max_deviation:.1e}")

# %% Same starting point, different y player: optimism is what accelerates
for label, tr in (("OFTL", game_md), ("FTL", game_ftl)):
    print(f"{label:5s} gap after {T} rounds: {tr.f_xbar[-1] - P.f_star:.3e}")
