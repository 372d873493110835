"""Benchmarks and parameter sweeps.

Compares the learner with best response, fictitious play, nearest-AP /
fastest-server and random assignment, then sweeps the number of APs and
checks that the mean objective falls as APs are added.

    python3 demos/04_benchmarks_and_sweeps.py
"""
import numpy as np

from jcaco.harness import ALGORITHMS, SweepSpec, run_algorithm, run_sweep, trend_check
from jcaco.model import GenerationConfig, generate_scenario

# ------------------------------------------------------------
# 1. five algorithms on five seeds
# ------------------------------------------------------------
table = {a: [] for a in ALGORITHMS}
for seed in range(5):
    sc = generate_scenario(GenerationConfig(5, 5, 30, seed=seed))
    for a in ALGORITHMS:
        table[a].append(run_algorithm(a, sc, seed)[2])
for a, objs in table.items():
    print(f"{a:8s} mean expected total service time {np.mean(objs):8.2f} s")

# ------------------------------------------------------------
# 2. a small sweep and its trend check
# ------------------------------------------------------------
spec = SweepSpec("num_aps", (2, 4, 6, 8, 10), seeds=range(5), algorithms=("MASL", "BR"))
res = run_sweep(spec)
for alg in spec.algorithms:
    verdict = trend_check(res.aggregate, "monotone-decreasing", 0.05, alg)
    print(f"{alg}: {verdict.describe()}")
