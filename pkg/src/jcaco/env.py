"""Environment randomness: user activity, channel fading, mobility."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import CapacityError
from .model import Scenario

__all__ = [
    "ActivityState",
    "ChannelRealization",
    "MAX_ENUMERABLE_UES",
    "sample_activity",
    "sample_activity_batch",
    "joint_probability",
    "enumerate_sample_space",
    "distances",
    "realize_channel",
    "step_mobility",
]

MAX_ENUMERABLE_UES = 20


@dataclass(frozen=True, eq=False)
class ActivityState:
    """One realization of per-user activity for a slot."""

    active: np.ndarray

    def __post_init__(self):
        a = np.array(self.active, dtype=bool).reshape(-1)
        a.setflags(write=False)
        object.__setattr__(self, "active", a)

    def __len__(self) -> int:
        return self.active.size

    def __eq__(self, other) -> bool:
        return isinstance(other, ActivityState) and np.array_equal(self.active, other.active)

    def __hash__(self) -> int:
        return hash(self.active.tobytes())

    @classmethod
    def all_active(cls, n: int) -> "ActivityState":
        return cls(np.ones(n, dtype=bool))

    def __repr__(self) -> str:
        return f"ActivityState({self.active.astype(int).tolist()})"


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """N x M matrix of channel power gains."""

    gain: np.ndarray

    def __post_init__(self):
        g = np.array(self.gain, dtype=float)
        if g.ndim != 2:
            raise ValueError("channel gain must be an N x M matrix")
        if not (np.all(np.isfinite(g)) and np.all(g > 0)):
            raise ValueError("channel gains must be finite and strictly positive")
        g.setflags(write=False)
        object.__setattr__(self, "gain", g)


def sample_activity(scenario: Scenario, rng: np.random.Generator) -> ActivityState:
    """Independent Bernoulli(p_n) draw per user."""
    return ActivityState(rng.random(scenario.num_ues) < scenario.active_probs)


def sample_activity_batch(scenario: Scenario, rng: np.random.Generator, n_samples: int) -> np.ndarray:
    """``n_samples x N`` boolean matrix of independent activity draws."""
    return rng.random((n_samples, scenario.num_ues)) < scenario.active_probs


def joint_probability(scenario: Scenario, state: ActivityState) -> float:
    p = scenario.active_probs
    a = state.active
    if a.size != p.size:
        raise ValueError(f"activity state has length {a.size}, scenario has {p.size} users")
    return float(np.prod(np.where(a, p, 1.0 - p)))


def enumerate_sample_space(
    scenario: Scenario, max_ues: int = MAX_ENUMERABLE_UES
) -> Iterator[tuple[ActivityState, float]]:
    """Yield every activity state with its probability (2**N states)."""
    n = scenario.num_ues
    if n > max_ues:
        raise CapacityError(f"sample-space enumeration is limited to N <= {max_ues} users (got N = {n})")
    for bits in itertools.product((False, True), repeat=n):
        state = ActivityState(np.array(bits, dtype=bool))
        yield state, joint_probability(scenario, state)


def distances(scenario: Scenario, positions: np.ndarray | None = None) -> np.ndarray:
    """UE-to-AP distances (N x M), clamped below by the distance floor."""
    ue = scenario.ue_positions if positions is None else np.asarray(positions, dtype=float)
    diff = ue[:, None, :] - scenario.ap_positions[None, :, :]
    d = np.hypot(diff[..., 0], diff[..., 1])
    return np.maximum(d, scenario.physics.distance_floor_m)


def realize_channel(
    scenario: Scenario,
    positions: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> ChannelRealization:
    """Path-loss gains, times unit-mean exponential fading when it is enabled."""
    gain = distances(scenario, positions) ** (-scenario.physics.path_loss_exponent)
    if scenario.physics.rayleigh_enabled:
        if rng is None:
            raise ValueError("fading is enabled: an rng is required")
        gain = gain * rng.exponential(1.0, size=gain.shape)
        # an exact zero draw is possible in principle; keep the gain positive
        gain = np.maximum(gain, np.finfo(float).tiny)
    return ChannelRealization(gain)


def _reflect(x: np.ndarray, side: float) -> np.ndarray:
    period = 2.0 * side
    y = np.mod(x, period)
    return np.where(y > side, period - y, y)


def step_mobility(
    scenario: Scenario,
    positions: np.ndarray,
    rng: np.random.Generator,
    step_m: float | None = None,
) -> np.ndarray:
    """Random-walk step: uniform offset in a disc, reflected back into the area."""
    step = scenario.physics.mobility_step_m if step_m is None else step_m
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    radius = step * np.sqrt(rng.random(n))
    angle = rng.uniform(0.0, 2.0 * np.pi, n)
    moved = pos + np.column_stack((radius * np.cos(angle), radius * np.sin(angle)))
    return _reflect(moved, scenario.physics.area_side_m)
