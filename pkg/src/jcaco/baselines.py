"""Benchmark algorithms: best response, fictitious play, selfish and random.

All of them share the payoff tables of :mod:`jcaco.games` so that their
objectives are directly comparable with the learning algorithm.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .env import ChannelRealization, distances, realize_channel
from .errors import DomainError
from .games import GameView, PotentialValue, candidate_payoffs, is_nash_equilibrium, payoff, potential
from .latency import StrategyProfile, optimal_steps_matrix
from .model import Scenario

__all__ = [
    "BaselineConfig",
    "BaselineResult",
    "PotentialMove",
    "default_view",
    "run_best_response",
    "run_mxfp",
    "run_selfish",
    "run_raro",
]

Algorithm = Literal["BR", "mxFP", "Selfish", "RARO"]


@dataclass(frozen=True)
class BaselineConfig:
    algorithm: Algorithm = "BR"
    max_rounds: int = 500
    tolerance: float | None = None  # None: the scenario's time granularity
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ("BR", "mxFP", "Selfish", "RARO"):
            raise DomainError(f"unknown baseline {self.algorithm!r}")
        if self.max_rounds < 1:
            raise DomainError("max_rounds must be >= 1")
        if self.tolerance is not None and self.tolerance < 0:
            raise DomainError("tolerance must be >= 0")


@dataclass(frozen=True)
class PotentialMove:
    """One improving move and the potential of the moved subgame around it."""

    ue: int
    subgame: str
    gain: float
    before: PotentialValue
    after: PotentialValue

    @property
    def potential_decreased(self) -> bool:
        return self.after.compare(self.before) < 0


@dataclass
class BaselineResult:
    profile: StrategyProfile
    rounds: int = 1
    converged: bool = True
    moves: list[PotentialMove] = field(default_factory=list)


def default_view(scenario: Scenario, channel: ChannelRealization | None = None) -> GameView:
    """Stochastic view with expected-load payoffs (own term weighted by p)."""
    if channel is None:
        channel = realize_channel(scenario) if not scenario.physics.rayleigh_enabled else None
        if channel is None:
            raise ValueError("a fading scenario needs an explicit channel realization")
    return GameView.stochastic(scenario, channel, "total", conditional=False)


def _tolerances(scenario: Scenario, cfg: BaselineConfig) -> tuple[float, float]:
    if cfg.tolerance is not None:
        return cfg.tolerance, cfg.tolerance
    g = scenario.game
    return g.comm_time_granularity, g.comp_time_granularity


def run_best_response(
    scenario: Scenario,
    view: GameView | None = None,
    config: BaselineConfig = BaselineConfig(),
    start: StrategyProfile | None = None,
    record_potential: bool = False,
) -> BaselineResult:
    """Round-robin best response in ascending user order.

    The access and compute subgames are separable, so a user's best (AP, ES)
    pair is its best AP together with its best ES.  A component moves only
    when it improves the user's payoff by more than the tolerance (default:
    the time granularity, the smallest gain the potential is guaranteed to
    register).  Stops after a full pass without moves.
    """
    if view is None:
        view = default_view(scenario)
    acc_view, comp_view = view.with_kind("access"), view.with_kind("compute")
    tol_a, tol_c = _tolerances(scenario, config)
    dstar = view.tables.dstar
    n = scenario.num_ues
    if start is None:
        start = StrategyProfile(np.zeros(n, int), np.zeros(n, int), dstar[:, 0])
    prof = start
    movers = range(n) if view.activity is None else np.flatnonzero(view.activity.active)
    moves: list[PotentialMove] = []
    rounds = 0
    converged = False
    while rounds < config.max_rounds:
        rounds += 1
        changed = False
        for ue in movers:
            ue = int(ue)
            acc = candidate_payoffs(acc_view, prof, ue)[:, 0]
            comp = candidate_payoffs(comp_view, prof, ue)[0, :]
            m, k = int(prof.ap_choice[ue]), int(prof.es_choice[ue])
            cur_a = payoff(acc_view, prof, ue)
            cur_c = payoff(comp_view, prof, ue)
            best_m, best_k = int(np.argmin(acc)), int(np.argmin(comp))
            if cur_a - acc[best_m] > tol_a and best_m != m:
                new = prof.replace_ue(ue, ap=best_m)
                if record_potential:
                    moves.append(PotentialMove(ue, "access", cur_a - acc[best_m], potential(acc_view, prof), potential(acc_view, new)))
                prof, changed = new, True
            if cur_c - comp[best_k] > tol_c and (best_k != k or prof.steps[ue] != dstar[ue, best_k]):
                new = prof.replace_ue(ue, es=best_k, steps=int(dstar[ue, best_k]))
                if record_potential:
                    moves.append(PotentialMove(ue, "compute", cur_c - comp[best_k], potential(comp_view, prof), potential(comp_view, new)))
                prof, changed = new, True
        if not changed:
            converged = True
            break
    return BaselineResult(prof, rounds, converged, moves)


def run_mxfp(
    scenario: Scenario,
    config: BaselineConfig = BaselineConfig("mxFP"),
    channel: ChannelRealization | None = None,
    conditional: bool = False,
    beliefs: Literal["uniform", "empirical"] = "uniform",
) -> BaselineResult:
    """Fictitious play against opponents believed to mix over resources.

    Every user best-responds simultaneously each round to a belief about the
    others' mixed strategies.  With ``beliefs="uniform"`` the others are
    always taken to mix uniformly over resources, which needs no knowledge
    of what they actually play.  With ``beliefs="empirical"`` the belief is
    the others' empirical action frequencies (uniform prior counted as one
    observation), i.e. classical fictitious play.  Stops when no empirical
    action frequency moves by ``1e-3`` or more, or after ``max_rounds``; the
    returned profile is each user's most frequent action (lowest index on
    ties).
    """
    if beliefs not in ("uniform", "empirical"):
        raise DomainError(f"unknown belief model {beliefs!r}")
    view = default_view(scenario, channel)
    t = view.tables
    p = t.p
    own_w = np.ones_like(p) if conditional else p
    n, M, K = scenario.num_ues, scenario.num_aps, scenario.num_servers
    rows = np.arange(n)
    tol = 1e-3 if config.tolerance is None else config.tolerance

    def respond(belief: np.ndarray, units: np.ndarray) -> np.ndarray:
        contrib = p[:, None] * belief * units  # N x A expected load contributions
        others = contrib.sum(axis=0)[None, :] - contrib
        return np.argmin(others + own_w[:, None] * units, axis=1)

    counts_a = np.zeros((n, M))
    counts_c = np.zeros((n, K))
    freq_a = np.full((n, M), 1.0 / M)
    freq_c = np.full((n, K), 1.0 / K)
    converged = False
    rounds = 0
    for rounds in range(1, config.max_rounds + 1):
        if beliefs == "empirical" or rounds == 1:
            xa = respond(freq_a, t.tx)
            xc = respond(freq_c, t.comp)
        counts_a[rows, xa] += 1
        counts_c[rows, xc] += 1
        new_a = (1.0 / M + counts_a) / (1 + rounds)
        new_c = (1.0 / K + counts_c) / (1 + rounds)
        change = max(np.abs(new_a - freq_a).max(), np.abs(new_c - freq_c).max())
        freq_a, freq_c = new_a, new_c
        if change < tol:
            converged = True
            break
    x = np.argmax(counts_a, axis=1)
    y = np.argmax(counts_c, axis=1)
    return BaselineResult(StrategyProfile(x, y, t.dstar[rows, y]), rounds, converged)


def run_selfish(scenario: Scenario) -> BaselineResult:
    """Nearest AP and the fastest ES for everybody, at optimal steps."""
    x = np.argmin(distances(scenario), axis=1)
    k = int(np.argmax(scenario.server_flops))
    y = np.full(scenario.num_ues, k)
    d = optimal_steps_matrix(scenario)[:, k]
    return BaselineResult(StrategyProfile(x, y, d))


def run_raro(scenario: Scenario, rng: np.random.Generator) -> BaselineResult:
    """Uniformly random AP and ES per user, at optimal steps."""
    n = scenario.num_ues
    x = rng.integers(0, scenario.num_aps, n)
    y = rng.integers(0, scenario.num_servers, n)
    d = optimal_steps_matrix(scenario)[np.arange(n), y]
    return BaselineResult(StrategyProfile(x, y, d))


def terminal_is_ne(scenario: Scenario, result: BaselineResult, view: GameView | None = None, config: BaselineConfig = BaselineConfig()) -> bool:
    """NE check of both subgames at the best-response tolerance."""
    if view is None:
        view = default_view(scenario)
    tol_a, tol_c = _tolerances(scenario, config)
    return (
        is_nash_equilibrium(view.with_kind("access"), result.profile, tol_a).is_ne
        and is_nash_equilibrium(view.with_kind("compute"), result.profile, tol_c).is_ne
    )
