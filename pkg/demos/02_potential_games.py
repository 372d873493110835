"""Potential games in practice.

Every improving move of a user lowers an exponential load potential, so
best-response dynamics must stop, and where they stop nobody can improve.
This script checks the sign property on random deviations, runs best
response while recording the potential, and shows what goes wrong when the
potential base is too small.

    python3 demos/02_potential_games.py
"""
import math

import numpy as np

from jcaco.baselines import run_best_response, terminal_is_ne
from jcaco.env import realize_channel, sample_activity
from jcaco.games import GameView, check_sign_property, is_nash_equilibrium
from jcaco.model import GameConstants, GenerationConfig, generate_scenario

sc = generate_scenario(GenerationConfig(num_aps=4, num_servers=3, num_ues=6, seed=5))
ch = realize_channel(sc)
act = sample_activity(sc, np.random.default_rng(0))

# ------------------------------------------------------------
# 1. sign property in all four views
# ------------------------------------------------------------
for kind in ("access", "compute"):
    for view in (GameView.stochastic(sc, ch, kind), GameView.complete(sc, ch, act, kind)):
        rep = check_sign_property(view, 2000, np.random.default_rng(1))
        print(f"{kind:8s} {view.mode:10s} checked {rep.checked:5d}  violations {len(rep.violations)}")

# ------------------------------------------------------------
# 2. best response with the potential recorded at each move
# ------------------------------------------------------------
view = GameView.stochastic(sc, ch, conditional=False)
res = run_best_response(sc, view, record_potential=True)
print(f"\nbest response: {len(res.moves)} moves in {res.rounds} rounds")
for mv in res.moves[:6]:
    drop = mv.before.log2_value - mv.after.log2_value
    print(f"  user {mv.ue} ({mv.subgame}): gain {mv.gain:.3f} s, log2 potential down by {drop:.1f}")
print("terminal profile is an equilibrium:", terminal_is_ne(sc, res, view))
rep = is_nash_equilibrium(view.with_kind("access"), res.profile, 1e-3)
print("largest remaining access gain [s]:", max(d.gain for d in rep.deviations))

# ------------------------------------------------------------
# 3. negative control: a base of 1.01 instead of 2^1000
# ------------------------------------------------------------
weak = GameConstants(log2_potential_base_comm=math.log2(1.01), log2_potential_base_comp=math.log2(1.01))
bad = 0
for seed in range(10):
    s = generate_scenario(GenerationConfig(3, 3, 6, seed=seed, game=weak))
    c = realize_channel(s)
    bad += len(check_sign_property(GameView.stochastic(s, c, "access"), 500, np.random.default_rng(seed)).violations)
print(f"\nwith base 1.01: {bad} sign violations over 5000 access deviations")
