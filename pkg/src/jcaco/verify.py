"""Brute-force verification suites on small random instances.

* ``sign-property``: potential changes track payoff changes in all four
  game views (access/compute x complete/stochastic).
* ``expectation``: closed-form expected loads against exhaustive enumeration
  of activity states and against Monte Carlo.
* ``ne``: best-response dynamics terminate, decrease the potential at every
  move and end in a Nash equilibrium.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import BaselineConfig, run_best_response, terminal_is_ne
from .env import enumerate_sample_space, realize_channel, sample_activity, sample_activity_batch
from .errors import ConfigurationError
from .games import GameView, check_sign_property
from .latency import (
    StrategyProfile,
    expected_ap_loads,
    expected_es_loads,
    optimal_steps_matrix,
    realized_ap_loads,
    realized_es_loads,
    unit_tx_times,
)
from .model import GenerationConfig, Scenario, generate_scenario
from .rng import RngStream

__all__ = [
    "SUITES",
    "SuiteReport",
    "small_scenario",
    "random_profile",
    "run_suite",
    "sign_property_suite",
    "expectation_suite",
    "ne_suite",
]

SUITES = ("sign-property", "expectation", "ne")


@dataclass
class SuiteReport:
    suite: str
    seed: int
    ok: bool
    summary: dict
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "seed": self.seed, "ok": self.ok, "summary": self.summary, "failures": self.failures}


def small_scenario(stream: RngStream, index: int, max_ues: int = 6, max_aps: int = 4, max_servers: int = 4) -> Scenario:
    """Random instance with 2..max_ues users and 2..max resources of each kind."""
    g = stream.generator("instance-size", index)
    n = int(g.integers(2, max_ues + 1))
    m = int(g.integers(2, max_aps + 1))
    k = int(g.integers(2, max_servers + 1))
    seed = int(g.integers(0, 2**63))
    return generate_scenario(GenerationConfig(m, k, n, seed=seed))


def random_profile(scenario: Scenario, rng: np.random.Generator) -> StrategyProfile:
    n = scenario.num_ues
    x = rng.integers(0, scenario.num_aps, n)
    y = rng.integers(0, scenario.num_servers, n)
    return StrategyProfile(x, y, optimal_steps_matrix(scenario)[np.arange(n), y])


def sign_property_suite(trials: int = 10_000, seed: int = 0, instances: int = 50) -> SuiteReport:
    """At least ``trials`` deviations per game view, spread over ``instances`` instances."""
    stream = RngStream(seed)
    per = max(1, math.ceil(trials / instances))
    counts: dict[str, dict[str, int]] = {}
    failures = []
    for i in range(instances):
        sc = small_scenario(stream, i)
        ch = realize_channel(sc)
        act = sample_activity(sc, stream.generator("activity", i))
        for kind in ("access", "compute"):
            for mode in ("complete", "stochastic"):
                view = GameView.complete(sc, ch, act, kind) if mode == "complete" else GameView.stochastic(sc, ch, kind)
                rep = check_sign_property(view, per, stream.generator("sign", i, kind, mode))
                c = counts.setdefault(f"{kind}/{mode}", {"trials": 0, "checked": 0, "skipped_small": 0, "violations": 0})
                c["trials"] += rep.trials
                c["checked"] += rep.checked
                c["skipped_small"] += rep.skipped_small
                c["violations"] += len(rep.violations)
                for v in rep.to_dict()["violations"]:
                    failures.append({"instance": i, "view": f"{kind}/{mode}", **v})
    summary = {"instances": instances, "trials_per_view_per_instance": per, "views": counts}
    return SuiteReport("sign-property", seed, not failures, summary, failures)


def _load_samples(scenario: Scenario, profile: StrategyProfile, tx: np.ndarray, active: np.ndarray):
    n = np.arange(scenario.num_ues)
    ap_onehot = np.zeros((scenario.num_ues, scenario.num_aps))
    ap_onehot[n, profile.ap_choice] = tx[n, profile.ap_choice]
    es_onehot = np.zeros((scenario.num_ues, scenario.num_servers))
    es_onehot[n, profile.es_choice] = (
        scenario.server_step_flops[profile.es_choice] * profile.steps / scenario.server_flops[profile.es_choice]
    )
    a = active.astype(float)
    return a @ ap_onehot, a @ es_onehot


def expectation_suite(
    seed: int = 0,
    instances: int = 20,
    mc_samples: int = 100_000,
    max_ues: int = 12,
    rel_tol: float = 1e-12,
    z_max: float = 3.0,
) -> SuiteReport:
    """Closed-form expected loads against the sum over all 2^N activity states
    (relative tolerance) and against a Monte-Carlo mean (standard errors)."""
    if max_ues > 20:
        raise ConfigurationError("max_ues: enumeration is limited to 20 users")
    stream = RngStream(seed)
    failures = []
    worst_rel = 0.0
    worst_z = 0.0
    for i in range(instances):
        g = stream.generator("expectation-size", i)
        n = int(g.integers(2, max_ues + 1))
        sc = generate_scenario(
            GenerationConfig(int(g.integers(1, 5)), int(g.integers(1, 5)), n, seed=int(g.integers(0, 2**63)))
        )
        ch = realize_channel(sc)
        tx = unit_tx_times(sc, ch)
        prof = random_profile(sc, stream.generator("expectation-profile", i))
        closed_ap = expected_ap_loads(sc, prof, ch, tx)
        closed_es = expected_es_loads(sc, prof)
        terms_ap, terms_es = [], []
        for state, prob in enumerate_sample_space(sc):
            terms_ap.append(prob * realized_ap_loads(sc, prof, ch, state, tx))
            terms_es.append(prob * realized_es_loads(sc, prof, state))
        enum_ap = np.array([math.fsum(col) for col in np.array(terms_ap).T])
        enum_es = np.array([math.fsum(col) for col in np.array(terms_es).T])
        for name, closed, enum in (("ap", closed_ap, enum_ap), ("es", closed_es, enum_es)):
            scale = np.maximum(np.abs(enum), np.finfo(float).tiny)
            rel = np.abs(closed - enum) / scale
            rel = np.where(enum == 0, np.abs(closed), rel)
            worst_rel = max(worst_rel, float(rel.max()))
            for j in np.flatnonzero(rel > rel_tol):
                failures.append({"instance": i, "check": "enumeration", "resource": f"{name}{j}", "closed": float(closed[j]), "enumerated": float(enum[j])})
        active = sample_activity_batch(sc, stream.generator("expectation-mc", i), mc_samples)
        mc_ap, mc_es = _load_samples(sc, prof, tx, active)
        for name, closed, samples in (("ap", closed_ap, mc_ap), ("es", closed_es, mc_es)):
            mean = samples.mean(axis=0)
            se = samples.std(axis=0, ddof=1) / math.sqrt(mc_samples)
            for j in range(closed.size):
                if se[j] == 0:
                    ok = abs(mean[j] - closed[j]) <= 1e-12 * max(1.0, abs(closed[j]))
                    z = 0.0
                else:
                    z = abs(mean[j] - closed[j]) / se[j]
                    ok = z <= z_max
                worst_z = max(worst_z, float(z))
                if not ok:
                    failures.append({"instance": i, "check": "monte-carlo", "resource": f"{name}{j}", "closed": float(closed[j]), "mc_mean": float(mean[j]), "z": float(z)})
    summary = {"instances": instances, "mc_samples": mc_samples, "max_relative_error": worst_rel, "max_z": worst_z}
    return SuiteReport("expectation", seed, not failures, summary, failures)


def ne_suite(seed: int = 0, instances: int = 50) -> SuiteReport:
    """Best-response dynamics in the stochastic and complete-information views."""
    stream = RngStream(seed)
    failures = []
    total_moves = 0
    for i in range(instances):
        sc = small_scenario(stream, i)
        ch = realize_channel(sc)
        act = sample_activity(sc, stream.generator("ne-activity", i))
        space = (sc.num_aps * sc.num_servers) ** sc.num_ues
        start = random_profile(sc, stream.generator("ne-start", i))
        views = {"stochastic": GameView.stochastic(sc, ch, "total", conditional=False)}
        if act.active.any():
            views["complete"] = GameView.complete(sc, ch, act, "total")
        for name, view in views.items():
            cfg = BaselineConfig("BR")
            res = run_best_response(sc, view, cfg, start=start, record_potential=True)
            total_moves += len(res.moves)
            problems = []
            if not res.converged:
                problems.append("did not terminate")
            if len(res.moves) >= space:
                problems.append(f"{len(res.moves)} moves >= strategy space {space}")
            bad = [j for j, mv in enumerate(res.moves) if not mv.potential_decreased]
            if bad:
                problems.append(f"potential did not decrease at moves {bad}")
            if not terminal_is_ne(sc, res, view, cfg):
                problems.append("terminal profile is not a Nash equilibrium")
            if problems:
                failures.append({"instance": i, "view": name, "problems": problems})
    summary = {"instances": instances, "moves": total_moves}
    return SuiteReport("ne", seed, not failures, summary, failures)


def run_suite(suite: str, trials: int | None = None, seed: int = 0) -> SuiteReport:
    """Dispatch by name.  ``trials`` means deviations per view (sign-property),
    Monte-Carlo samples (expectation) or instances (ne)."""
    if suite == "sign-property":
        return sign_property_suite(trials or 10_000, seed)
    if suite == "expectation":
        return expectation_suite(seed, mc_samples=trials or 100_000)
    if suite == "ne":
        return ne_suite(seed, trials or 50)
    raise ConfigurationError(f"suite: unknown suite {suite!r}; expected one of {list(SUITES)}")
