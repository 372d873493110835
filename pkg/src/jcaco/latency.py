"""Delay model: link capacity, per-user unit times, AP/ES loads, content error.

Under proportional-fair sharing every user attached to a resource finishes at
the same moment, so a user's delay on a resource equals that resource's load
(the sum of the unit times of the users attached to it).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import ActivityState, ChannelRealization
from .errors import DomainError
from .model import EdgeServer, Scenario, UserEquipment

__all__ = [
    "StrategyProfile",
    "DelayBreakdown",
    "noise_power_watts",
    "channel_capacity",
    "capacity_matrix",
    "unit_tx_times",
    "unit_tx_time",
    "realized_ap_loads",
    "expected_ap_loads",
    "aec",
    "aec_value",
    "optimal_steps",
    "optimal_steps_matrix",
    "unit_comp_times",
    "realized_es_loads",
    "expected_es_loads",
    "total_service_time",
    "conditional_delays",
]


@dataclass(frozen=True, eq=False)
class StrategyProfile:
    """Pure strategies: AP index, ES index and inference steps per user (0-based indices)."""

    ap_choice: np.ndarray
    es_choice: np.ndarray
    steps: np.ndarray

    def __post_init__(self):
        arrs = []
        for name in ("ap_choice", "es_choice", "steps"):
            a = np.array(getattr(self, name), dtype=np.int64).reshape(-1)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
            arrs.append(a)
        if not (arrs[0].size == arrs[1].size == arrs[2].size):
            raise ValueError("ap_choice, es_choice and steps must have the same length")
        if np.any(arrs[2] < 1):
            raise ValueError("every user runs at least one inference step")

    @classmethod
    def with_optimal_steps(cls, scenario: Scenario, ap_choice, es_choice) -> "StrategyProfile":
        es = np.asarray(es_choice, dtype=np.int64)
        d = optimal_steps_matrix(scenario)[np.arange(es.size), es]
        return cls(ap_choice, es, d)

    def __len__(self) -> int:
        return self.ap_choice.size

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, StrategyProfile)
            and np.array_equal(self.ap_choice, other.ap_choice)
            and np.array_equal(self.es_choice, other.es_choice)
            and np.array_equal(self.steps, other.steps)
        )

    def __hash__(self) -> int:
        return hash((self.ap_choice.tobytes(), self.es_choice.tobytes(), self.steps.tobytes()))

    def replace_ue(self, ue: int, ap: int | None = None, es: int | None = None, steps: int | None = None) -> "StrategyProfile":
        x, y, d = self.ap_choice.copy(), self.es_choice.copy(), self.steps.copy()
        if ap is not None:
            x[ue] = ap
        if es is not None:
            y[ue] = es
        if steps is not None:
            d[ue] = steps
        return StrategyProfile(x, y, d)

    def check(self, scenario: Scenario) -> None:
        """Raise ``ValueError`` if indices or step counts do not fit ``scenario``."""
        if len(self) != scenario.num_ues:
            raise ValueError(f"profile has {len(self)} users, scenario has {scenario.num_ues}")
        if np.any((self.ap_choice < 0) | (self.ap_choice >= scenario.num_aps)):
            raise ValueError("ap_choice index out of range")
        if np.any((self.es_choice < 0) | (self.es_choice >= scenario.num_servers)):
            raise ValueError("es_choice index out of range")
        if np.any(self.steps < scenario.game.min_inference_steps):
            raise ValueError("steps below the minimum inference step count")

    def to_dict(self) -> dict:
        return {
            "ap_choice": self.ap_choice.tolist(),
            "es_choice": self.es_choice.tolist(),
            "steps": self.steps.tolist(),
        }


# ---------------------------------------------------------------------------
# communication
# ---------------------------------------------------------------------------


def noise_power_watts(noise_psd_dbm_per_hz, bandwidth_hz):
    """Thermal noise power over the band, from a dBm/Hz density."""
    return 10.0 ** ((np.asarray(noise_psd_dbm_per_hz, dtype=float) - 30.0) / 10.0) * bandwidth_hz


def channel_capacity(bandwidth_hz, tx_power_w, gain, noise_psd_dbm_per_hz):
    """Shannon rate in bit/s; broadcasts over array arguments."""
    w = np.asarray(bandwidth_hz, dtype=float)
    rho = np.asarray(tx_power_w, dtype=float)
    h = np.asarray(gain, dtype=float)
    for name, v in (("bandwidth", w), ("transmit power", rho), ("channel gain", h)):
        if not np.all(v > 0):
            raise DomainError(f"{name} must be > 0")
    snr = rho * h / noise_power_watts(noise_psd_dbm_per_hz, w)
    rate = w * np.log1p(snr) / math.log(2.0)
    return float(rate) if np.ndim(rate) == 0 else rate


def capacity_matrix(scenario: Scenario, channel: ChannelRealization) -> np.ndarray:
    return channel_capacity(
        scenario.bandwidths[None, :],
        scenario.tx_power,
        channel.gain,
        scenario.physics.noise_psd_dbm_per_hz,
    )


def unit_tx_times(scenario: Scenario, channel: ChannelRealization) -> np.ndarray:
    """Time for each user to move its content alone over each AP (N x M, seconds)."""
    rate = capacity_matrix(scenario, channel)
    if not np.all(rate > 0):
        raise DomainError("channel capacity underflowed to zero")
    return scenario.data_bits[:, None] / rate


def unit_tx_time(scenario: Scenario, ue: int, ap: int, channel: ChannelRealization) -> float:
    rate = channel_capacity(
        scenario.aps[ap].bandwidth_hz,
        scenario.ues[ue].tx_power_watts[ap],
        channel.gain[ue, ap],
        scenario.physics.noise_psd_dbm_per_hz,
    )
    if rate <= 0:
        raise DomainError("channel capacity is zero")
    return scenario.ues[ue].data_size_bits / rate


def _own_unit(unit: np.ndarray, choice: np.ndarray) -> np.ndarray:
    return unit[np.arange(choice.size), choice]


def realized_ap_loads(
    scenario: Scenario,
    profile: StrategyProfile,
    channel: ChannelRealization,
    activity: ActivityState,
    unit: np.ndarray | None = None,
) -> np.ndarray:
    """Per-AP load: sum of unit transmission times of the active users attached."""
    if unit is None:
        unit = unit_tx_times(scenario, channel)
    x = profile.ap_choice
    w = _own_unit(unit, x) * activity.active
    return np.bincount(x, weights=w, minlength=scenario.num_aps)


def expected_ap_loads(
    scenario: Scenario,
    profile: StrategyProfile,
    channel: ChannelRealization,
    unit: np.ndarray | None = None,
) -> np.ndarray:
    """Per-AP expected load; by linearity each user contributes p_n times its unit time."""
    if unit is None:
        unit = unit_tx_times(scenario, channel)
    x = profile.ap_choice
    w = _own_unit(unit, x) * scenario.active_probs
    return np.bincount(x, weights=w, minlength=scenario.num_aps)


# ---------------------------------------------------------------------------
# computation
# ---------------------------------------------------------------------------


def aec_value(forward_error_scale, fitness, steps):
    """Average content error after ``steps`` denoising steps."""
    return np.asarray(forward_error_scale) * np.exp(-np.asarray(fitness) * np.asarray(steps, dtype=float))


def aec(server: EdgeServer, ue: UserEquipment, steps: float) -> float:
    if steps < 0:
        raise DomainError("steps must be >= 0")
    return float(aec_value(server.forward_error_scale, ue.fitness[server.id], steps))


def _optimal_steps(scale, gamma, threshold, d_min: int):
    scale = np.asarray(scale, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    threshold = np.asarray(threshold, dtype=float)
    if np.any(gamma <= 0) or np.any(scale <= 0) or np.any(threshold <= 0):
        raise DomainError("fitness, error scale and error threshold must be > 0")
    raw = -np.log(threshold / scale) / gamma
    d = np.maximum(np.ceil(raw), d_min).astype(np.int64)
    # the closed form can land one step off when raw is (nearly) an integer;
    # settle the boundary against the same float error function we test with
    for _ in range(3):
        too_big = (d > d_min) & (aec_value(scale, gamma, d - 1) <= threshold)
        too_small = aec_value(scale, gamma, d) > threshold
        if not (too_big.any() or too_small.any()):
            break
        d = d - too_big + too_small
    return d


def optimal_steps(server: EdgeServer, ue: UserEquipment, min_steps: int = 1) -> int:
    """Fewest steps (at least ``min_steps``) meeting the user's error threshold."""
    return int(_optimal_steps(server.forward_error_scale, ue.fitness[server.id], ue.error_threshold, min_steps))


def optimal_steps_matrix(scenario: Scenario) -> np.ndarray:
    """N x K matrix of minimal step counts for every (user, server) pair."""
    d = _optimal_steps(
        scenario.server_error_scale[None, :],
        scenario.fitness,
        scenario.error_thresholds[:, None],
        scenario.game.min_inference_steps,
    )
    return np.broadcast_to(d, (scenario.num_ues, scenario.num_servers)).copy()


def unit_comp_times(scenario: Scenario, steps: np.ndarray | None = None) -> np.ndarray:
    """N x K generation times when running alone (steps default to the optimal ones)."""
    if steps is None:
        steps = optimal_steps_matrix(scenario)
    return scenario.server_step_flops[None, :] * steps / scenario.server_flops[None, :]


def _own_comp(scenario: Scenario, profile: StrategyProfile) -> np.ndarray:
    y = profile.es_choice
    return scenario.server_step_flops[y] * profile.steps / scenario.server_flops[y]


def realized_es_loads(scenario: Scenario, profile: StrategyProfile, activity: ActivityState) -> np.ndarray:
    w = _own_comp(scenario, profile) * activity.active
    return np.bincount(profile.es_choice, weights=w, minlength=scenario.num_servers)


def expected_es_loads(scenario: Scenario, profile: StrategyProfile) -> np.ndarray:
    w = _own_comp(scenario, profile) * scenario.active_probs
    return np.bincount(profile.es_choice, weights=w, minlength=scenario.num_servers)


# ---------------------------------------------------------------------------
# totals
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DelayBreakdown:
    """Per-user delays and per-resource loads.

    In realized mode inactive users carry zero delay.  In expected mode every
    entry is the expectation of the realized entry over activity, so the
    per-user values are ``p_n`` times the delay given that the user is active.
    """

    access: np.ndarray
    compute: np.ndarray
    total: np.ndarray
    ap_loads: np.ndarray
    es_loads: np.ndarray
    expected: bool

    @property
    def objective(self) -> float:
        return float(self.total.sum())


def conditional_delays(
    scenario: Scenario,
    profile: StrategyProfile,
    channel: ChannelRealization,
    unit: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Expected access and compute delay of each user given that it is active.

    The user's own unit time enters with weight one; everyone else is weighted
    by their activity probability.
    """
    if unit is None:
        unit = unit_tx_times(scenario, channel)
    p = scenario.active_probs
    own_t = _own_unit(unit, profile.ap_choice)
    own_c = _own_comp(scenario, profile)
    lbar = expected_ap_loads(scenario, profile, channel, unit)
    ibar = expected_es_loads(scenario, profile)
    acc = lbar[profile.ap_choice] + (1.0 - p) * own_t
    comp = ibar[profile.es_choice] + (1.0 - p) * own_c
    return acc, comp


def total_service_time(
    scenario: Scenario,
    profile: StrategyProfile,
    channel: ChannelRealization,
    activity: ActivityState | None = None,
) -> DelayBreakdown:
    """Realized delays for ``activity``, or their expectation when it is ``None``."""
    unit = unit_tx_times(scenario, channel)
    if activity is not None:
        L = realized_ap_loads(scenario, profile, channel, activity, unit)
        I = realized_es_loads(scenario, profile, activity)
        a = activity.active
        acc = np.where(a, L[profile.ap_choice], 0.0)
        comp = np.where(a, I[profile.es_choice], 0.0)
        return DelayBreakdown(acc, comp, acc + comp, L, I, expected=False)
    p = scenario.active_probs
    acc_c, comp_c = conditional_delays(scenario, profile, channel, unit)
    acc, comp = p * acc_c, p * comp_c
    return DelayBreakdown(
        acc,
        comp,
        acc + comp,
        expected_ap_loads(scenario, profile, channel, unit),
        expected_es_loads(scenario, profile),
        expected=True,
    )
