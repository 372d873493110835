import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jcaco.env import (
    ActivityState,
    enumerate_sample_space,
    joint_probability,
    realize_channel,
    sample_activity,
    sample_activity_batch,
    step_mobility,
)
from jcaco.errors import CapacityError
from jcaco.model import GenerationConfig, PhysicsConstants, generate_scenario
from jcaco.rng import RngStream

from conftest import build


def test_all_certain_users_always_active():
    sc = build([(1, 1)] * 4, probs=[1.0] * 4)
    for i in range(20):
        assert sample_activity(sc, np.random.default_rng(i)).active.all()


def test_certain_user_active_in_every_sample():
    sc = build([(1, 1), (2, 2)], probs=[1.0, 0.001])
    batch = sample_activity_batch(sc, np.random.default_rng(0), 10_000)
    assert batch[:, 0].all()


def test_half_probability_frequency():
    sc = build([(1, 1)] * 20, probs=[0.5] * 20)
    batch = sample_activity_batch(sc, RngStream(3).generator("freq"), 100_000)
    rate = batch.mean(axis=0)
    assert np.all((rate >= 0.49) & (rate <= 0.51))


def test_joint_probability_examples():
    sc = build([(1, 1), (2, 2)], probs=[0.5, 0.5])
    assert joint_probability(sc, ActivityState([True, False])) == 0.25
    sure = build([(1, 1), (2, 2)], probs=[1.0, 0.3])
    assert joint_probability(sure, ActivityState([False, True])) == 0.0


def test_single_user_sample_space():
    sc = build([(1, 1)], probs=[0.3])
    space = dict(enumerate_sample_space(sc))
    assert space == {ActivityState([False]): pytest.approx(0.7), ActivityState([True]): pytest.approx(0.3)}


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32))
def test_sample_space_sums_to_one(n, seed):
    sc = generate_scenario(GenerationConfig(1, 1, n, seed=seed))
    states = list(enumerate_sample_space(sc))
    assert len(states) == 2**n
    assert len({s for s, _ in states}) == 2**n
    assert abs(math.fsum(p for _, p in states) - 1.0) <= 1e-12


def test_enumeration_guard():
    sc = generate_scenario(GenerationConfig(1, 1, 21, seed=0, enforce_table_bounds=False))
    with pytest.raises(CapacityError, match="20"):
        next(enumerate_sample_space(sc))


def test_power_law_gain():
    sc = build([(600.0, 500.0)])
    assert realize_channel(sc).gain[0, 0] == pytest.approx(1e-8, rel=1e-12)


def test_colocated_gain_clamped():
    sc = build([(500.0, 500.0)])
    assert realize_channel(sc).gain[0, 0] == 1.0


def test_fading_keeps_mean_gain():
    sc = build([(600.0, 500.0)], physics=PhysicsConstants(rayleigh_enabled=True))
    g = np.random.default_rng(5)
    draws = np.array([realize_channel(sc, rng=g).gain[0, 0] for _ in range(100_000)]) / 1e-8
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - 1.0) <= 3 * se


def test_fading_requires_rng():
    sc = build([(600.0, 500.0)], physics=PhysicsConstants(rayleigh_enabled=True))
    with pytest.raises(ValueError):
        realize_channel(sc)


def test_zero_step_keeps_positions():
    sc = build([(10.0, 20.0), (30.0, 40.0)])
    pos = sc.ue_positions.copy()
    np.testing.assert_array_equal(step_mobility(sc, pos, np.random.default_rng(0), step_m=0.0), pos)


def test_random_walk_stays_inside():
    sc = build([(500.0, 500.0)] * 50)
    pos = sc.ue_positions.copy()
    g = np.random.default_rng(1)
    for _ in range(10_000):
        pos = step_mobility(sc, pos, g)
        assert pos.min() >= 0.0 and pos.max() <= 1000.0


def test_walk_reproducible():
    sc = build([(500.0, 500.0)] * 3)
    a = step_mobility(sc, sc.ue_positions, RngStream(2).generator("walk"))
    b = step_mobility(sc, sc.ue_positions, RngStream(2).generator("walk"))
    np.testing.assert_array_equal(a, b)
