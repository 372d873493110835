"""Payoffs, potentials, the potential-game sign check and Nash-equilibrium checks.

A ``GameView`` fixes what a payoff means: which resource (access, compute or
both), and whether delays are realized for one activity state (complete
information) or averaged over activity (stochastic).

Stochastic payoffs come in two flavours.  The conditional one is the delay a
user can expect *given that it is active*: its own unit time counts fully and
everybody else's is weighted by their activity probability.  The
unconditional one is the expected load of the chosen resource, which weights
the user's own unit time by its own probability as well.  The load potentials
track the unconditional flavour exactly, so the sign check always uses it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .env import ActivityState, ChannelRealization
from .errors import DomainError
from .latency import StrategyProfile, optimal_steps_matrix, unit_tx_times
from .model import Scenario

__all__ = [
    "GameView",
    "GameTables",
    "PotentialValue",
    "compare_log2_sums",
    "payoff",
    "payoff_vector",
    "candidate_payoffs",
    "resource_loads",
    "potential",
    "SignViolation",
    "SignCheckReport",
    "check_sign_property",
    "Deviation",
    "NashReport",
    "is_nash_equilibrium",
]

Kind = Literal["access", "compute", "total"]


class GameTables:
    """Precomputed per-(user, resource) quantities of a scenario and channel."""

    def __init__(self, scenario: Scenario, channel: ChannelRealization):
        self.scenario = scenario
        self.tx = unit_tx_times(scenario, channel)  # N x M
        self.dstar = optimal_steps_matrix(scenario)  # N x K
        self.step_time = scenario.server_step_flops / scenario.server_flops  # K
        self.comp = self.dstar * self.step_time[None, :]  # N x K at optimal steps
        self.p = scenario.active_probs


@dataclass(frozen=True, eq=False)
class GameView:
    """How payoffs are evaluated: resource kind and information mode."""

    scenario: Scenario
    channel: ChannelRealization
    kind: Kind = "total"
    activity: ActivityState | None = None
    conditional: bool = True
    _tables: GameTables | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("access", "compute", "total"):
            raise ValueError(f"unknown payoff kind {self.kind!r}")
        if self.activity is not None and len(self.activity) != self.scenario.num_ues:
            raise ValueError("activity state length does not match the scenario")
        if self._tables is None:
            object.__setattr__(self, "_tables", GameTables(self.scenario, self.channel))

    @classmethod
    def complete(cls, scenario, channel, activity: ActivityState, kind: Kind = "total") -> "GameView":
        return cls(scenario, channel, kind, activity)

    @classmethod
    def stochastic(cls, scenario, channel, kind: Kind = "total", conditional: bool = True) -> "GameView":
        return cls(scenario, channel, kind, None, conditional)

    @property
    def mode(self) -> str:
        return "stochastic" if self.activity is None else "complete"

    @property
    def tables(self) -> GameTables:
        return self._tables

    def with_kind(self, kind: Kind) -> "GameView":
        return replace(self, kind=kind)

    def unconditional(self) -> "GameView":
        return replace(self, conditional=False)

    def weights(self) -> np.ndarray:
        """Weight of each user's unit time inside a resource load."""
        if self.activity is None:
            return self.tables.p
        return self.activity.active.astype(float)

    def own_weights(self) -> np.ndarray:
        """Weight of a user's own unit time inside its own payoff."""
        if self.activity is None and not self.conditional:
            return self.tables.p
        return np.ones(self.scenario.num_ues)

    @property
    def granularity(self) -> float:
        g = self.scenario.game
        if self.kind == "access":
            return g.comm_time_granularity
        if self.kind == "compute":
            return g.comp_time_granularity
        return min(g.comm_time_granularity, g.comp_time_granularity)


def _comp_units(view: GameView, profile: StrategyProfile) -> np.ndarray:
    return view.tables.step_time[profile.es_choice] * profile.steps


def resource_loads(view: GameView, profile: StrategyProfile) -> tuple[np.ndarray, np.ndarray]:
    """AP and ES loads under the view (realized, or expected in stochastic mode)."""
    t = view.tables
    n = np.arange(len(profile))
    w = view.weights()
    ap = np.bincount(profile.ap_choice, weights=w * t.tx[n, profile.ap_choice], minlength=view.scenario.num_aps)
    es = np.bincount(profile.es_choice, weights=w * _comp_units(view, profile), minlength=view.scenario.num_servers)
    return ap, es


def payoff_vector(view: GameView, profile: StrategyProfile) -> np.ndarray:
    """Payoff of every user (inactive users get NaN in complete mode)."""
    t = view.tables
    n = np.arange(len(profile))
    ap, es = resource_loads(view, profile)
    extra = view.own_weights() - view.weights()
    acc = ap[profile.ap_choice] + extra * t.tx[n, profile.ap_choice]
    comp = es[profile.es_choice] + extra * _comp_units(view, profile)
    out = {"access": acc, "compute": comp, "total": acc + comp}[view.kind]
    if view.activity is not None:
        out = np.where(view.activity.active, out, np.nan)
    return out


def payoff(view: GameView, profile: StrategyProfile, ue: int) -> float:
    """Delay of user ``ue`` under ``profile`` (seconds)."""
    if view.activity is not None and not view.activity.active[ue]:
        raise DomainError(f"user {ue} is inactive; it has no payoff in this slot")
    return float(payoff_vector(view, profile)[ue])


def candidate_payoffs(view: GameView, profile: StrategyProfile, ue: int) -> np.ndarray:
    """M x K payoffs of ``ue`` for every (AP, ES) pair at optimal steps, others fixed.

    Access-only views return the same value down each column, compute-only
    views the same value along each row.
    """
    if view.activity is not None and not view.activity.active[ue]:
        raise DomainError(f"user {ue} is inactive; it has no payoff in this slot")
    t = view.tables
    ap, es = resource_loads(view, profile)
    w = view.weights()[ue]
    own = view.own_weights()[ue]
    # strip the user from the loads it currently contributes to
    ap = ap.copy()
    es = es.copy()
    ap[profile.ap_choice[ue]] -= w * t.tx[ue, profile.ap_choice[ue]]
    es[profile.es_choice[ue]] -= w * t.step_time[profile.es_choice[ue]] * profile.steps[ue]
    acc = ap + own * t.tx[ue]
    comp = es + own * t.comp[ue]
    if view.kind == "access":
        return np.repeat(acc[:, None], view.scenario.num_servers, axis=1)
    if view.kind == "compute":
        return np.repeat(comp[None, :], view.scenario.num_aps, axis=0)
    return acc[:, None] + comp[None, :]


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------


def compare_log2_sums(a, b) -> int:
    """Sign of ``sum(2**a) - sum(2**b)`` for equal-length exponent arrays.

    Terms that agree index by index cancel exactly; the rest are summed after
    factoring out the largest exponent so nothing overflows.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("exponent arrays must have the same shape")
    keep = a != b
    a, b = a[keep], b[keep]
    if a.size == 0:
        return 0
    top = max(a.max(), b.max())
    diff = math.fsum(np.exp2(a - top)) - math.fsum(np.exp2(b - top))
    return int(np.sign(diff))


@dataclass(frozen=True)
class PotentialValue:
    """A sum of ``base**load`` terms kept as base-2 exponents."""

    log2_terms: np.ndarray
    log2_value: float

    @classmethod
    def from_terms(cls, log2_terms) -> "PotentialValue":
        e = np.asarray(log2_terms, dtype=float)
        top = float(e.max())
        return cls(e, top + math.log2(math.fsum(np.exp2(e - top))))

    @property
    def log_value(self) -> float:
        return self.log2_value * math.log(2.0)

    def compare(self, other: "PotentialValue") -> int:
        return compare_log2_sums(self.log2_terms, other.log2_terms)


def potential(view: GameView, profile: StrategyProfile) -> PotentialValue:
    """Load potential of an access or compute game (realized or expected loads)."""
    ap, es = resource_loads(view, profile)
    g = view.scenario.game
    if view.kind == "access":
        return PotentialValue.from_terms(ap * g.comm_log2_base)
    if view.kind == "compute":
        return PotentialValue.from_terms(es * g.comp_log2_base)
    raise ValueError("the joint game has no single load potential; use the access or compute view")


# ---------------------------------------------------------------------------
# sign-property check
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class SignViolation:
    trial: int
    ue: int
    case: str
    before: tuple
    after: tuple
    delta_payoff: float
    potential_sign: int


@dataclass(frozen=True)
class SignCheckReport:
    trials: int
    checked: int
    skipped_small: int
    violations: list[SignViolation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "checked": self.checked,
            "skipped_small": self.skipped_small,
            "violations": [
                {
                    "trial": v.trial,
                    "ue": v.ue,
                    "case": v.case,
                    "before": list(v.before),
                    "after": list(v.after),
                    "delta_payoff": v.delta_payoff,
                    "potential_sign": v.potential_sign,
                }
                for v in self.violations
            ],
        }


COMPUTE_CASES = ("server", "steps", "joint")


def check_sign_property(view: GameView, n_trials: int, rng: np.random.Generator) -> SignCheckReport:
    """Compare the sign of a deviator's payoff change with the potential change.

    Each trial draws a random profile, a random (active) user and a random
    unilateral deviation.  Access views switch AP; compute views pick one of
    three moves: switch server keeping the step count, change the step count
    (uniform on ``[d_min, 2 d*]``), or both.  Changes smaller than the time
    granularity are not checked.
    """
    if view.kind == "total":
        raise ValueError("sign check needs an access or compute view")
    if view.activity is None:
        view = view.unconditional()
    sc = view.scenario
    t = view.tables
    n_ue, n_ap, n_es = sc.num_ues, sc.num_aps, sc.num_servers
    d_min = sc.game.min_inference_steps
    candidates = np.arange(n_ue) if view.activity is None else np.flatnonzero(view.activity.active)
    gran = view.granularity
    violations: list[SignViolation] = []
    checked = skipped = 0
    rows = np.arange(n_ue)
    for trial in range(n_trials):
        if candidates.size == 0:
            break
        x = rng.integers(0, n_ap, n_ue)
        y = rng.integers(0, n_es, n_ue)
        prof = StrategyProfile(x, y, t.dstar[rows, y])
        ue = int(rng.choice(candidates))
        if view.kind == "access":
            if n_ap == 1:
                continue
            new_ap = int((x[ue] + rng.integers(1, n_ap)) % n_ap)
            dev = prof.replace_ue(ue, ap=new_ap)
            case = "ap"
        else:
            case = COMPUTE_CASES[int(rng.integers(0, 3))]
            if case != "steps" and n_es == 1:
                case = "steps"
            new_es = int((y[ue] + rng.integers(1, n_es)) % n_es) if case != "steps" else int(y[ue])
            if case == "server":
                new_d = int(prof.steps[ue])
            else:
                new_d = int(rng.integers(d_min, 2 * t.dstar[ue, new_es] + 1))
            dev = prof.replace_ue(ue, es=new_es, steps=new_d)
        delta = payoff(view, dev, ue) - payoff(view, prof, ue)
        if abs(delta) < gran:
            skipped += 1
            continue
        checked += 1
        sgn = potential(view, dev).compare(potential(view, prof))
        if sgn != int(np.sign(delta)):
            before = (int(prof.ap_choice[ue]), int(prof.es_choice[ue]), int(prof.steps[ue]))
            after = (int(dev.ap_choice[ue]), int(dev.es_choice[ue]), int(dev.steps[ue]))
            violations.append(SignViolation(trial, ue, case, before, after, float(delta), sgn))
    return SignCheckReport(n_trials, checked, skipped, sorted(violations))


# ---------------------------------------------------------------------------
# Nash-equilibrium check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Deviation:
    ue: int
    current: float
    best: float
    ap: int
    es: int

    @property
    def gain(self) -> float:
        return self.current - self.best


@dataclass(frozen=True)
class NashReport:
    is_ne: bool
    tolerance: float
    deviations: list[Deviation]

    @property
    def improving(self) -> list[Deviation]:
        return [d for d in self.deviations if d.gain > self.tolerance]

    def to_dict(self) -> dict:
        worst = max((d.gain for d in self.deviations), default=0.0)
        return {
            "is_ne": self.is_ne,
            "tolerance": self.tolerance,
            "max_gain": worst,
            "improving": [
                {"ue": d.ue, "current": d.current, "best": d.best, "ap": d.ap, "es": d.es, "gain": d.gain}
                for d in self.improving
            ],
        }


def is_nash_equilibrium(view: GameView, profile: StrategyProfile, tolerance: float = 1e-9) -> NashReport:
    """Exhaustive unilateral-deviation check over (AP, ES) pairs at optimal steps.

    In complete mode only active users are checked.  ``best`` is the lowest
    payoff reachable by the user (ties broken by lowest AP then ES index).
    """
    cur = payoff_vector(view, profile)
    devs = []
    for ue in range(len(profile)):
        if view.activity is not None and not view.activity.active[ue]:
            continue
        table = candidate_payoffs(view, profile, ue)
        flat = int(np.argmin(table))
        m, k = divmod(flat, table.shape[1])
        devs.append(Deviation(ue, float(cur[ue]), float(table[m, k]), m, k))
    ok = all(d.gain <= tolerance for d in devs)
    return NashReport(ok, tolerance, devs)
