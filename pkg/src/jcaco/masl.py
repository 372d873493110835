"""Multi-agent stochastic learning with linear reward-inaction automata.

Every user keeps a probability vector over APs (access subgame) and another
over edge servers (compute subgame).  In each iteration active users sample
an action, observe a delay, turn it into a reward in [0, 1] and nudge the
sampled action's probability up in proportion to that reward.  The two
subgames do not interact, so they are learned independently and the results
decoded into one pure profile at the end.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .env import ChannelRealization, realize_channel
from .errors import DomainError
from .games import GameView, NashReport, is_nash_equilibrium
from .latency import StrategyProfile, optimal_steps_matrix, total_service_time, unit_tx_times
from .model import Scenario
from .rng import RngStream

__all__ = [
    "MaslConfig",
    "MixedStrategyState",
    "RewardNormalizers",
    "ConvergenceMonitor",
    "LearningTrace",
    "SubgameResult",
    "JcacoResult",
    "lri_update",
    "lri_update_rows",
    "reward_from_delay",
    "access_reward",
    "compute_reward",
    "reward_normalizers",
    "run_alg1",
    "run_alg2",
    "run_jcaco",
    "decode",
    "estimate_drift",
]

DelayMode = Literal["conditional", "realized"]
ChannelSource = ChannelRealization | Callable[[int], ChannelRealization] | None

_BLOCK = 512  # iterations of random numbers drawn at once


@dataclass(frozen=True)
class MaslConfig:
    alpha: float = 0.1
    beta: float = 0.1
    delta: float = 1e-3
    max_iter: int = 10_000
    delay_mode: DelayMode = "conditional"
    seed: int = 0
    normalizer: str = "uniform-start"

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise DomainError(f"{name} must lie in (0, 1), got {v}")
        if not self.delta > 0:
            raise DomainError("delta must be > 0")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")
        if self.delay_mode not in ("conditional", "realized"):
            raise DomainError(f"unknown delay_mode {self.delay_mode!r}")
        if self.normalizer not in NORMALIZERS:
            raise DomainError(f"unknown normalizer {self.normalizer!r}")


# ---------------------------------------------------------------------------
# state and update rule
# ---------------------------------------------------------------------------


@dataclass
class MixedStrategyState:
    ap_probs: np.ndarray
    es_probs: np.ndarray
    alpha: float = 0.1
    beta: float = 0.1
    iteration: int = 0

    @classmethod
    def uniform(cls, num_ues: int, num_aps: int, num_servers: int, alpha=0.1, beta=0.1) -> "MixedStrategyState":
        return cls(
            np.full((num_ues, num_aps), 1.0 / num_aps),
            np.full((num_ues, num_servers), 1.0 / num_servers),
            alpha,
            beta,
        )

    def check(self, atol: float = 1e-9) -> None:
        for name in ("ap_probs", "es_probs"):
            a = getattr(self, name)
            if np.any(a < 0) or np.any(np.abs(a.sum(axis=1) - 1.0) > atol):
                raise DomainError(f"{name} rows must lie on the probability simplex")


def lri_update(probs, chosen: int, reward: float, rate: float) -> np.ndarray:
    """Linear reward-inaction step on one probability vector.

    Non-chosen entries shrink by the factor ``1 - rate * reward``; the chosen
    entry takes whatever mass is left so the result sums to one.
    """
    if not 0.0 <= reward <= 1.0:
        raise DomainError(f"reward must lie in [0, 1], got {reward}")
    if not 0.0 < rate < 1.0:
        raise DomainError(f"rate must lie in (0, 1), got {rate}")
    p = np.asarray(probs, dtype=float)
    out = p * (1.0 - rate * reward)
    out[chosen] = 0.0
    out[chosen] = max(0.0, 1.0 - out.sum())
    return out


def lri_update_rows(P: np.ndarray, chosen: np.ndarray, reward: np.ndarray, rate: float) -> np.ndarray:
    """Row-wise :func:`lri_update` (no validation; used in the learning loops)."""
    rows = np.arange(P.shape[0])
    out = P * (1.0 - rate * reward)[:, None]
    out[rows, chosen] = 0.0
    out[rows, chosen] = np.maximum(0.0, 1.0 - out.sum(axis=1))
    return out


def reward_from_delay(delay, bound):
    """``1 - delay / bound`` clamped into [0, 1]."""
    return np.minimum(np.maximum(1.0 - np.asarray(delay, dtype=float) / bound, 0.0), 1.0)


# ---------------------------------------------------------------------------
# reward normalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RewardNormalizers:
    access_bound: np.ndarray
    compute_bound: np.ndarray

    def __post_init__(self):
        for name in ("access_bound", "compute_bound"):
            a = np.asarray(getattr(self, name), dtype=float)
            if not np.all(a > 0):
                raise DomainError(f"{name} must be strictly positive")
            object.__setattr__(self, name, a)


NORMALIZERS = ("uniform-start", "pile-up")


def _uniform_start_bound(units: np.ndarray, p: np.ndarray) -> np.ndarray:
    # expected delay of each action while every other user still mixes
    # uniformly (the learning starting point); the bound is the worst action
    n_act = units.shape[1]
    total = (p[:, None] * units).sum(axis=0)
    expected = units + (total[None, :] - p[:, None] * units) / n_act
    return expected.max(axis=1)


def reward_normalizers(
    scenario: Scenario,
    channel: ChannelRealization | None = None,
    method: str = "uniform-start",
) -> RewardNormalizers:
    """Fixed per-user delay scales that turn delays into rewards.

    ``"uniform-start"``: the largest expected delay over the user's actions
    when all other users mix uniformly, as they do when learning starts.
    Later observations can exceed it; those rewards clamp to zero.

    ``"pile-up"``: the sum over users of their slowest unit time, a hard
    upper bound on any load.  It is safe but so loose that rewards of good
    and bad actions differ very little, which weakens learning.

    The access scale uses the fading-free channel at the initial positions
    unless a channel is given.
    """
    if channel is None:
        channel = realize_channel(_no_fading(scenario))
    tx = unit_tx_times(scenario, channel)
    comp = optimal_steps_matrix(scenario) * (scenario.server_step_flops / scenario.server_flops)[None, :]
    n = scenario.num_ues
    if method == "uniform-start":
        p = scenario.active_probs
        return RewardNormalizers(_uniform_start_bound(tx, p), _uniform_start_bound(comp, p))
    if method == "pile-up":
        return RewardNormalizers(np.full(n, tx.max(axis=1).sum()), np.full(n, comp.max(axis=1).sum()))
    raise DomainError(f"unknown normalizer {method!r}; expected one of {NORMALIZERS}")


def _no_fading(scenario: Scenario) -> Scenario:
    from dataclasses import replace

    if not scenario.physics.rayleigh_enabled:
        return scenario
    return replace(scenario, physics=replace(scenario.physics, rayleigh_enabled=False))


def _observe(units, choice, weights, active, delay_mode: DelayMode) -> np.ndarray:
    rows = np.arange(units.shape[0])
    own = units[rows, choice]
    if delay_mode == "conditional":
        load = np.bincount(choice, weights=weights * own, minlength=units.shape[1])
        return load[choice] + (1.0 - weights) * own
    load = np.bincount(choice, weights=active * own, minlength=units.shape[1])
    return load[choice]


def access_reward(
    scenario: Scenario,
    profile: StrategyProfile,
    ue: int,
    channel: ChannelRealization,
    normalizers: RewardNormalizers,
    delay_mode: DelayMode = "conditional",
    activity=None,
) -> float:
    """Reward of ``ue`` for its current AP given everybody's current choice."""
    units = unit_tx_times(scenario, channel)
    active = _activity_vector(scenario, activity, delay_mode)
    obs = _observe(units, profile.ap_choice, scenario.active_probs, active, delay_mode)[ue]
    return float(reward_from_delay(obs, normalizers.access_bound[ue]))


def compute_reward(
    scenario: Scenario,
    profile: StrategyProfile,
    ue: int,
    normalizers: RewardNormalizers,
    delay_mode: DelayMode = "conditional",
    activity=None,
) -> float:
    """Reward of ``ue`` for its current ES (at the profile's step counts)."""
    units = np.zeros((scenario.num_ues, scenario.num_servers))
    rows = np.arange(scenario.num_ues)
    units[rows, profile.es_choice] = (
        scenario.server_step_flops[profile.es_choice] * profile.steps / scenario.server_flops[profile.es_choice]
    )
    active = _activity_vector(scenario, activity, delay_mode)
    obs = _observe(units, profile.es_choice, scenario.active_probs, active, delay_mode)[ue]
    return float(reward_from_delay(obs, normalizers.compute_bound[ue]))


def _activity_vector(scenario, activity, delay_mode) -> np.ndarray:
    if activity is None:
        if delay_mode == "realized":
            raise ValueError("realized delays need an activity state")
        return np.ones(scenario.num_ues)
    return np.asarray(getattr(activity, "active", activity), dtype=float)


# ---------------------------------------------------------------------------
# convergence and traces
# ---------------------------------------------------------------------------


@dataclass
class ConvergenceMonitor:
    """Tracks the size of each user's most recent strategy update.

    A user's entry changes only in iterations where it is active, so a user
    that happens to sit idle keeps the norm of its last real update instead
    of reading as converged.  Entries start at infinity.
    """

    delta: float
    max_iter: int
    num_ues: int = 0
    last_change: np.ndarray = field(init=False)

    def __post_init__(self):
        self.last_change = np.full(self.num_ues, np.inf)

    def update(self, change: np.ndarray, active: np.ndarray) -> bool:
        self.last_change = np.where(active, change, self.last_change)
        return self.converged

    @property
    def converged(self) -> bool:
        return bool(self.last_change.max(initial=0.0) < self.delta)


@dataclass
class LearningTrace:
    """Per-iteration record: expected objective under the current mixed strategies,
    largest strategy change, and each user's observed delay (NaN when inactive)."""

    objective: np.ndarray
    max_delta: np.ndarray
    delays: np.ndarray

    def __len__(self) -> int:
        return self.objective.size


@dataclass
class SubgameResult:
    probs: np.ndarray
    converged: bool
    iterations: int
    trace: LearningTrace
    bound: np.ndarray


def _mixed_objective(P: np.ndarray, units: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Expected objective (sum of p_n times conditional delay) when users play P independently.

    Works on a single N x A state or a stack of them (leading axes are kept).
    """
    pw = p[:, None] * P * units  # ... x N x A
    load = pw.sum(axis=-2, keepdims=True)
    # E[delay | n on a] = units[n,a] + load[a] - p_n P_na units[n,a]
    cond = (P * (units + load - pw)).sum(axis=-1)
    return (p * cond).sum(axis=-1)


def _learn(
    scenario: Scenario,
    units_at: Callable[[int], np.ndarray],
    bound: np.ndarray,
    rate: float,
    cfg: MaslConfig,
    stream: RngStream,
    tag: str,
    observer: Callable | None = None,
) -> SubgameResult:
    n = scenario.num_ues
    p = scenario.active_probs
    units = units_at(0)
    n_act = units.shape[1]
    P = np.full((n, n_act), 1.0 / n_act)
    act_rng = stream.generator("masl", tag, "activity")
    pick_rng = stream.generator("masl", tag, "action")
    monitor = ConvergenceMonitor(cfg.delta, cfg.max_iter, n)
    objective = np.empty(cfg.max_iter)
    max_delta = np.empty(cfg.max_iter)
    delays = np.empty((cfg.max_iter, n))
    converged = False
    # states and unit times of the current block; the trace objective is
    # evaluated for the whole block at once
    P_hist = np.empty((_BLOCK, n, n_act))
    U_hist = np.empty((_BLOCK, n, n_act))
    add, sqrt = np.add.reduce, np.sqrt
    it = 0
    while it < cfg.max_iter:
        block = min(_BLOCK, cfg.max_iter - it)
        act_block = act_rng.random((_BLOCK, n)) < p
        u_block = pick_rng.random((_BLOCK, n))
        done = block
        for j in range(block):
            tau = it + j
            if tau:
                units = units_at(tau)
            active = act_block[j]
            cdf = np.cumsum(P, axis=1)
            choice = np.minimum(add(cdf <= u_block[j][:, None], axis=1), n_act - 1)
            obs = _observe(units, choice, p, active, cfg.delay_mode)
            reward = reward_from_delay(obs, bound)
            newP = P.copy()
            if active.any():
                newP[active] = lri_update_rows(P[active], choice[active], reward[active], rate)
            change = sqrt(add((newP - P) ** 2, axis=1))
            if observer is not None:
                observer(tau, P, newP, active, choice, reward)
            P = newP
            P_hist[j] = P
            U_hist[j] = units
            max_delta[tau] = change.max()
            delays[tau] = np.where(active, obs, np.nan)
            # zero-reward steps carry no information about convergence; a
            # pure row can never move again, active or not
            informed = (active & (reward > 0)) | (P.max(axis=1) == 1.0)
            if monitor.update(change, informed):
                converged = True
                done = j + 1
                break
        objective[it:it + done] = _mixed_objective(P_hist[:done], U_hist[:done], p)
        it += done
        if converged:
            break
    trace = LearningTrace(objective[:it].copy(), max_delta[:it].copy(), delays[:it].copy())
    return SubgameResult(P, converged, it, trace, bound)


def _channel_fn(scenario: Scenario, channel: ChannelSource) -> Callable[[int], ChannelRealization]:
    if channel is None:
        static = realize_channel(_no_fading(scenario))
        return lambda tau: static
    if isinstance(channel, ChannelRealization):
        return lambda tau: channel
    return channel


def run_alg1(
    scenario: Scenario,
    channel: ChannelSource = None,
    config: MaslConfig = MaslConfig(),
    normalizers: RewardNormalizers | None = None,
    observer: Callable | None = None,
) -> SubgameResult:
    """Learn AP association.  ``channel`` may be a fixed realization or a
    callable giving the realization for each iteration (fading, mobility).
    ``observer(tau, before, after, active, choice, reward)``, if given, sees
    every iteration's update."""
    chan = _channel_fn(scenario, channel)
    if normalizers is None:
        normalizers = reward_normalizers(scenario, method=config.normalizer)
    if isinstance(channel, ChannelRealization) or channel is None:
        fixed = unit_tx_times(scenario, chan(0))
        units_at = lambda tau: fixed  # noqa: E731
    else:
        units_at = lambda tau: unit_tx_times(scenario, chan(tau))  # noqa: E731
    stream = RngStream(config.seed)
    return _learn(scenario, units_at, normalizers.access_bound, config.alpha, config, stream, "access", observer)


def run_alg2(
    scenario: Scenario,
    config: MaslConfig = MaslConfig(),
    normalizers: RewardNormalizers | None = None,
    observer: Callable | None = None,
) -> SubgameResult:
    """Learn ES selection, with every user at its optimal step count per server."""
    if normalizers is None:
        normalizers = reward_normalizers(scenario, method=config.normalizer)
    comp = optimal_steps_matrix(scenario) * (scenario.server_step_flops / scenario.server_flops)[None, :]
    stream = RngStream(config.seed)
    return _learn(scenario, lambda tau: comp, normalizers.compute_bound, config.beta, config, stream, "compute", observer)


def decode(probs: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ``np.argmax`` already returns the lowest index on ties."""
    return np.argmax(probs, axis=1)


@dataclass
class JcacoResult:
    access: SubgameResult
    compute: SubgameResult
    profile: StrategyProfile
    objective: float
    ne_access: NashReport
    ne_compute: NashReport

    @property
    def converged(self) -> bool:
        return self.access.converged and self.compute.converged

    @property
    def iterations(self) -> int:
        return max(self.access.iterations, self.compute.iterations)

    @property
    def is_ne(self) -> bool:
        return self.ne_access.is_ne and self.ne_compute.is_ne

    def joint_trace(self) -> LearningTrace:
        """Both subgame traces on one iteration axis; a finished subgame holds its last row."""
        n = self.iterations
        parts = []
        for sub in (self.access, self.compute):
            tr = sub.trace
            pad = n - len(tr)
            idx = np.concatenate([np.arange(len(tr)), np.full(pad, len(tr) - 1)]).astype(int)
            parts.append((tr.objective[idx], tr.max_delta[idx], tr.delays[idx]))
        (oa, da, ya), (oc, dc, yc) = parts
        if self.access.iterations < n:
            da = np.where(np.arange(n) >= self.access.iterations, 0.0, da)
        if self.compute.iterations < n:
            dc = np.where(np.arange(n) >= self.compute.iterations, 0.0, dc)
        return LearningTrace(oa + oc, np.maximum(da, dc), ya + yc)


def run_jcaco(
    scenario: Scenario,
    config: MaslConfig = MaslConfig(),
    channel: ChannelRealization | None = None,
    ne_tolerance: float = 1e-6,
) -> JcacoResult:
    """Run both subgames, decode a pure profile and check it for equilibrium."""
    if channel is None:
        channel = realize_channel(_no_fading(scenario))
    norm = reward_normalizers(scenario, channel, config.normalizer)
    acc = run_alg1(scenario, channel, config, norm)
    comp = run_alg2(scenario, config, norm)
    profile = StrategyProfile.with_optimal_steps(scenario, decode(acc.probs), decode(comp.probs))
    view = GameView.stochastic(scenario, channel, "access")
    ne_a = is_nash_equilibrium(view, profile, ne_tolerance)
    ne_c = is_nash_equilibrium(view.with_kind("compute"), profile, ne_tolerance)
    objective = total_service_time(scenario, profile, channel).objective
    return JcacoResult(acc, comp, profile, objective, ne_a, ne_c)


# ---------------------------------------------------------------------------
# drift
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DriftEstimate:
    mean: np.ndarray
    stderr: np.ndarray
    n_samples: int


def estimate_drift(
    scenario: Scenario,
    probs: np.ndarray,
    n_samples: int,
    rng: np.random.Generator,
    units: np.ndarray,
    bound: np.ndarray,
    rate: float = 0.1,
    delay_mode: DelayMode = "conditional",
    batch: int = 10_000,
) -> DriftEstimate:
    """Monte-Carlo mean of the one-step update ``(P' - P) / rate`` from state ``probs``.

    ``units`` holds each user's unit time per action (N x A) and ``bound`` the
    reward normalizer per user.
    """
    P = np.asarray(probs, dtype=float)
    n, a = P.shape
    p = scenario.active_probs
    bound = np.broadcast_to(np.asarray(bound, dtype=float), (n,))
    total = np.zeros((n, a))
    total_sq = np.zeros((n, a))
    rows = np.arange(n)
    cdf = np.cumsum(P, axis=1)
    done = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        active = rng.random((b, n)) < p
        u = rng.random((b, n))
        choice = np.minimum((cdf[None, :, :] <= u[:, :, None]).sum(axis=2), a - 1)
        own = units[rows[None, :], choice]  # b x n
        if delay_mode == "conditional":
            w = p[None, :] * own
        else:
            w = active * own
        load = np.zeros((b, a))
        np.add.at(load, (np.repeat(np.arange(b), n), choice.ravel()), w.ravel())
        obs = np.take_along_axis(load, choice, axis=1)
        if delay_mode == "conditional":
            obs = obs + (1.0 - p[None, :]) * own
        r = np.clip(1.0 - obs / bound[None, :], 0.0, 1.0) * active
        # (P' - P)/rate = r * (e_chosen - P), applied only by active users
        step = -r[:, :, None] * P[None, :, :]
        onehot = np.zeros((b, n, a))
        np.put_along_axis(onehot, choice[:, :, None], 1.0, axis=2)
        step += r[:, :, None] * onehot
        total += step.sum(axis=0)
        total_sq += (step**2).sum(axis=0)
        done += b
    mean = total / n_samples
    var = np.maximum(total_sq / n_samples - mean**2, 0.0)
    return DriftEstimate(mean, np.sqrt(var / n_samples), n_samples)
