"""Network model walk-through: scenarios, channels, loads and delays.

Generates a small instance, shows the per-user transmission and generation
times, and checks the closed-form expected loads against a brute-force sum
over every activity pattern.

    python3 demos/01_network_model.py
"""
import math

import numpy as np

from jcaco.env import enumerate_sample_space, realize_channel, sample_activity
from jcaco.latency import (
    StrategyProfile,
    expected_ap_loads,
    optimal_steps_matrix,
    realized_ap_loads,
    total_service_time,
    unit_comp_times,
    unit_tx_times,
)
from jcaco.model import GenerationConfig, encode, generate_scenario, validate
from jcaco.rng import RngStream

# ------------------------------------------------------------
# 1. a scenario: 3 APs on a grid, 2 servers, 6 users
# ------------------------------------------------------------
sc = generate_scenario(GenerationConfig(num_aps=3, num_servers=2, num_ues=6, seed=42))
print("valid:", validate(sc).ok, "| encoded size:", len(encode(sc)), "bytes")
for ap in sc.aps:
    print(f"  AP{ap.id} at {ap.position}, W = {ap.bandwidth_hz / 1e6:.2f} MHz")
print("activity probabilities:", sc.active_probs)

# ------------------------------------------------------------
# 2. unit times (each user alone on each resource)
# ------------------------------------------------------------
ch = realize_channel(sc)
np.set_printoptions(precision=3, suppress=True)
print("\ntransmission time per (user, AP) [s]:\n", unit_tx_times(sc, ch))
print("steps needed per (user, server):\n", optimal_steps_matrix(sc))
print("generation time per (user, server) [s]:\n", unit_comp_times(sc))

# ------------------------------------------------------------
# 3. one slot vs. the expectation over activity
# ------------------------------------------------------------
prof = StrategyProfile.with_optimal_steps(sc, [0, 0, 1, 1, 2, 2], [0, 1, 0, 1, 0, 1])
state = sample_activity(sc, RngStream(1).generator("slot"))
print("\nslot activity:", state)
print("realized AP loads:", realized_ap_loads(sc, prof, ch, state))
print("expected AP loads:", expected_ap_loads(sc, prof, ch))

brute = sum(p * realized_ap_loads(sc, prof, ch, s) for s, p in enumerate_sample_space(sc))
print("brute force over 64 patterns:", brute)
print("max abs difference:", np.abs(brute - expected_ap_loads(sc, prof, ch)).max())

out = total_service_time(sc, prof, ch)
print(f"\nexpected total service time: {out.objective:.3f} s")
mean = math.fsum(p * total_service_time(sc, prof, ch, s).objective for s, p in enumerate_sample_space(sc))
print(f"average of realized totals:  {mean:.3f} s")
