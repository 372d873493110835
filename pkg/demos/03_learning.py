"""Learning automata for association and offloading.

Each user keeps a probability vector over APs and one over servers, samples
an action, observes its expected delay and reinforces the action in
proportion to a normalized reward.  This script runs the default learner,
follows its trace, checks the decoded profile for unilateral improvements,
and compares two learning rates.

    python3 demos/03_learning.py
"""
import numpy as np

from jcaco.baselines import run_best_response
from jcaco.env import realize_channel
from jcaco.latency import total_service_time
from jcaco.masl import MaslConfig, run_jcaco
from jcaco.model import GenerationConfig, generate_scenario

sc = generate_scenario(GenerationConfig(num_aps=5, num_servers=5, num_ues=30, seed=3))
ch = realize_channel(sc)

# ------------------------------------------------------------
# 1. default run
# ------------------------------------------------------------
res = run_jcaco(sc, MaslConfig(seed=3))
trace = res.joint_trace()
print(f"converged: {res.converged} after {res.iterations} iterations")
for t in (0, 100, 500, 1000, 2000, len(trace) - 1):
    if t < len(trace):
        print(f"  iteration {t:5d}: expected total {trace.objective[t]:8.2f} s, largest change {trace.max_delta[t]:.4f}")
print(f"decoded profile objective: {res.objective:.2f} s")

# ------------------------------------------------------------
# 2. how far from an equilibrium is the decoded profile?
# ------------------------------------------------------------
for name, rep in (("access", res.ne_access), ("compute", res.ne_compute)):
    gains = [d.gain for d in rep.improving]
    print(f"{name}: {len(gains)} users could improve, largest gain {max(gains, default=0):.3f} s")

br = run_best_response(sc)
print(f"best response objective for reference: {total_service_time(sc, br.profile, ch).objective:.2f} s")

# ------------------------------------------------------------
# 3. learning rate: speed against quality
# ------------------------------------------------------------
for rate in (0.8, 0.3, 0.1):
    runs = [run_jcaco(generate_scenario(GenerationConfig(5, 5, 30, seed=s)), MaslConfig(alpha=rate, beta=rate, seed=s)) for s in range(5)]
    print(f"rate {rate}: {np.mean([r.iterations for r in runs]):7.0f} iterations, objective {np.mean([r.objective for r in runs]):.2f} s")
