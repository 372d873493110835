import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from jcaco.env import realize_channel
from jcaco.errors import DomainError
from jcaco.games import GameView, candidate_payoffs, is_nash_equilibrium
from jcaco.latency import StrategyProfile, optimal_steps_matrix, unit_comp_times, unit_tx_times
from jcaco.masl import (
    ConvergenceMonitor,
    MaslConfig,
    MixedStrategyState,
    access_reward,
    compute_reward,
    decode,
    estimate_drift,
    lri_update,
    lri_update_rows,
    reward_from_delay,
    reward_normalizers,
    run_alg1,
    run_alg2,
    run_jcaco,
)
from jcaco.model import GenerationConfig, generate_scenario

from conftest import build


def test_zero_reward_leaves_vector():
    p = np.array([0.2, 0.5, 0.3])
    np.testing.assert_array_equal(lri_update(p, 1, 0.0, 0.1), p)


def test_hand_update():
    np.testing.assert_allclose(lri_update([0.5, 0.5], 0, 1.0, 0.1), [0.55, 0.45], rtol=1e-15)


def test_update_rejects_bad_inputs():
    with pytest.raises(DomainError):
        lri_update([0.5, 0.5], 0, 1.5, 0.1)
    with pytest.raises(DomainError):
        lri_update([0.5, 0.5], 0, 0.5, 1.0)


simplex_rows = hnp.arrays(float, st.integers(1, 8), elements=st.floats(0.0, 1.0)).filter(lambda a: a.sum() > 1e-6)


@given(simplex_rows, st.data(), st.floats(0.0, 1.0), st.floats(0.001, 0.999))
def test_update_stays_on_simplex(raw, data, reward, rate):
    p = raw / raw.sum()
    chosen = data.draw(st.integers(0, p.size - 1))
    out = lri_update(p, chosen, reward, rate)
    assert out.min() >= 0.0
    assert abs(out.sum() - 1.0) <= 1e-12
    assert out[chosen] >= p[chosen] - 1e-15


@given(st.integers(1, 6), st.data(), st.floats(0.0, 1.0), st.floats(0.001, 0.999))
def test_pure_rows_absorbing(n, data, reward, rate):
    k = data.draw(st.integers(0, n - 1))
    e = np.eye(n)[k]
    np.testing.assert_array_equal(lri_update(e, k, reward, rate), e)


def test_row_update_matches_single_update():
    g = np.random.default_rng(0)
    P = g.dirichlet(np.ones(4), size=6)
    c = g.integers(0, 4, 6)
    r = g.random(6)
    out = lri_update_rows(P, c, r, 0.3)
    for i in range(6):
        np.testing.assert_allclose(out[i], lri_update(P[i], c[i], r[i], 0.3), rtol=1e-15, atol=1e-17)


def test_reward_clamps():
    assert reward_from_delay(2.0, 2.0) == 0.0
    assert reward_from_delay(0.0, 2.0) == 1.0
    assert reward_from_delay(5.0, 2.0) == 0.0
    assert reward_from_delay(0.5, 2.0) == 0.75


def test_uniform_state_and_check():
    st_ = MixedStrategyState.uniform(3, 4, 2)
    st_.check()
    st_.ap_probs[0, 0] = 0.9
    with pytest.raises(DomainError):
        st_.check()


def test_config_validation():
    for bad in (dict(alpha=0.0), dict(beta=1.0), dict(delta=0.0), dict(max_iter=0), dict(delay_mode="x"), dict(normalizer="x")):
        with pytest.raises(DomainError):
            MaslConfig(**bad)


def test_monitor_ignores_idle_users():
    mon = ConvergenceMonitor(1e-3, 100, 3)
    assert not mon.update(np.zeros(3), np.array([True, True, False]))
    assert mon.update(np.zeros(3), np.array([False, False, True]))
    assert not mon.update(np.array([0.0, 0.5, 0.0]), np.array([False, True, False]))


def _fast_slow():
    return build([(500.0, 500.0), (510.0, 500.0), (490.0, 500.0)], servers=((10.0, 0.1, 1.0), (1.0, 0.1, 1.0)))


def test_lone_user_on_fast_server_rewarded_highly():
    sc = build([(500.0, 500.0)], servers=((10.0, 0.1, 1.0), (1.0, 0.1, 1.0)))
    norm = reward_normalizers(sc)
    prof = StrategyProfile.with_optimal_steps(sc, [0], [0])
    assert compute_reward(sc, prof, 0, norm) >= 0.9


def test_crowded_server_rewarded_zero():
    sc = _fast_slow()
    prof = StrategyProfile.with_optimal_steps(sc, [0, 0, 0], [1, 1, 1])
    for method in ("uniform-start", "pile-up"):
        norm = reward_normalizers(sc, method=method)
        assert compute_reward(sc, prof, 0, norm) == pytest.approx(0.0, abs=1e-12)


def test_access_reward_uses_bound():
    sc = build([(600.0, 500.0), (400.0, 500.0)], ap_positions=((500, 500), (900, 900)))
    ch = realize_channel(sc)
    norm = reward_normalizers(sc, ch)
    prof = StrategyProfile.with_optimal_steps(sc, [0, 1], [0, 0])
    t = unit_tx_times(sc, ch)
    assert access_reward(sc, prof, 0, ch, norm) == pytest.approx(1 - t[0, 0] / norm.access_bound[0], rel=1e-12)
    realized = access_reward(sc, prof, 0, ch, norm, "realized", np.array([1, 1]))
    assert realized == pytest.approx(1 - t[0, 0] / norm.access_bound[0], rel=1e-12)


def test_inactive_rows_frozen():
    sc = generate_scenario(GenerationConfig(3, 3, 8, seed=4))
    seen = {"idle": 0}

    def watch(tau, before, after, active, choice, reward):
        idle = ~active
        seen["idle"] += int(idle.sum())
        assert np.array_equal(before[idle], after[idle])
        assert np.all(np.abs(after.sum(axis=1) - 1.0) <= 1e-12)
        assert after.min() >= 0.0

    run_alg1(sc, config=MaslConfig(max_iter=500), observer=watch)
    run_alg2(sc, config=MaslConfig(max_iter=500), observer=watch)
    assert seen["idle"] > 0


def test_same_seed_same_run():
    sc = generate_scenario(GenerationConfig(3, 3, 10, seed=1))
    a = run_jcaco(sc, MaslConfig(seed=5))
    b = run_jcaco(sc, MaslConfig(seed=5))
    np.testing.assert_array_equal(a.access.probs, b.access.probs)
    np.testing.assert_array_equal(a.compute.trace.objective, b.compute.trace.objective)
    assert a.profile == b.profile


def test_single_ap_trivially_converged():
    sc = build([(100.0, 100.0), (900.0, 900.0)], probs=[0.2, 0.3])
    res = run_alg1(sc)
    assert res.converged and res.iterations == 1
    np.testing.assert_array_equal(res.probs, np.ones((2, 1)))


def test_single_server_trivially_converged():
    sc = build([(100.0, 100.0), (900.0, 900.0)], probs=[0.2, 0.3], servers=((4.0, 0.2, 1.0),))
    res = run_alg2(sc)
    assert res.converged and res.iterations == 1
    assert res.trace.objective[0] == pytest.approx(
        float((sc.active_probs * (unit_comp_times(sc)[:, 0] + sc.active_probs[::-1] * unit_comp_times(sc)[::-1, 0])).sum()),
        rel=1e-12,
    )


def test_two_users_anti_coordinate():
    sc = build([(500.0, 400.0), (500.0, 600.0)], ap_positions=((250.0, 500.0), (750.0, 500.0)))
    split = 0
    for seed in range(20):
        res = run_alg1(sc, config=MaslConfig(seed=seed))
        assert res.converged
        x = decode(res.probs)
        split += int(x[0] != x[1])
    assert split > 10


def test_identical_users_balance_over_equal_servers():
    sc = build([(500.0, 500.0)] * 4, servers=((5.0, 0.2, 1.0), (5.0, 0.2, 1.0)))
    view = GameView.stochastic(sc, realize_channel(sc), "compute")
    # enumeration: the NE set of the 2^4 assignments is exactly the 2-2 splits
    ne = {y for y in itertools.product((0, 1), repeat=4)
          if is_nash_equilibrium(view, StrategyProfile.with_optimal_steps(sc, [0] * 4, y), 1e-9).is_ne}
    assert ne == {y for y in itertools.product((0, 1), repeat=4) if sum(y) == 2}
    hits = 0
    for seed in range(10):
        res = run_alg2(sc, MaslConfig(seed=seed))
        hits += tuple(decode(res.probs)) in ne
    assert hits >= 8


def test_dominant_server_assignment_is_equilibrium():
    sc = build(
        [(500.0, 500.0)] * 6,
        servers=((10.0, 0.2, 1.0), (3.0, 0.2, 1.0), (2.0, 0.2, 1.0)),
        probs=[1.0] * 6,
    )
    view = GameView.stochastic(sc, realize_channel(sc), "compute")
    ok = 0
    for seed in range(10):
        res = run_alg2(sc, MaslConfig(seed=seed))
        prof = StrategyProfile.with_optimal_steps(sc, [0] * 6, decode(res.probs))
        ok += is_nash_equilibrium(view, prof, 1e-6).is_ne
    assert ok >= 8


def test_single_user_decodes_global_argmin():
    sc = build([(300.0, 450.0)], ap_positions=((250, 250), (750, 750), (250, 750)),
               servers=((3.0, 0.3, 1.0), (9.0, 0.4, 1.0)))
    res = run_jcaco(sc)
    ch = realize_channel(sc)
    table = candidate_payoffs(GameView.stochastic(sc, ch), StrategyProfile.with_optimal_steps(sc, [0], [0]), 0)
    m, k = np.unravel_index(np.argmin(table), table.shape)
    assert (res.profile.ap_choice[0], res.profile.es_choice[0]) == (m, k)
    assert res.is_ne


def test_trace_settles():
    sc = generate_scenario(GenerationConfig(5, 5, 30, seed=0))
    res = run_jcaco(sc)
    assert res.converged
    obj = res.joint_trace().objective
    avg = np.convolve(obj, np.ones(50) / 50, mode="valid")
    burn = len(avg) // 10
    rises = np.diff(avg[burn:])
    assert rises.max() <= 1e-3 * obj[0]
    assert obj[-1] < obj[0]


def test_drift_zero_at_pure_state():
    sc = build([(400.0, 500.0), (600.0, 500.0), (500.0, 300.0)], ap_positions=((250, 500), (750, 500), (500, 250)),
               probs=[0.4, 0.7, 1.0])
    ch = realize_channel(sc)
    units = unit_tx_times(sc, ch)
    bound = reward_normalizers(sc, ch).access_bound
    P = np.eye(3)[[0, 1, 2]]
    est = estimate_drift(sc, P, 20_000, np.random.default_rng(0), units, bound)
    assert np.all(est.mean == 0.0)


def _exact_drift(sc, P, units, bound):
    n, a = P.shape
    p = sc.active_probs
    out = np.zeros((n, a))
    for joint in itertools.product(range(a), repeat=n):
        c = np.array(joint)
        prob = np.prod(P[np.arange(n), c])
        own = units[np.arange(n), c]
        load = np.bincount(c, weights=p * own, minlength=a)
        obs = load[c] + (1 - p) * own
        r = np.clip(1 - obs / bound, 0, 1)
        for i in range(n):
            out[i] += prob * p[i] * r[i] * (np.eye(a)[c[i]] - P[i])
    return out


@pytest.mark.parametrize("seed", [0, 1])
def test_drift_matches_enumeration_at_uniform_state(seed):
    sc = generate_scenario(GenerationConfig(3, 2, 3, seed=seed))
    ch = realize_channel(sc)
    units = unit_tx_times(sc, ch)
    bound = reward_normalizers(sc, ch).access_bound
    P = np.full((3, 3), 1 / 3)
    est = estimate_drift(sc, P, 100_000, np.random.default_rng(seed), units, bound)
    exact = _exact_drift(sc, P, units, bound)
    assert np.all(np.abs(est.mean - exact) <= 3 * est.stderr + 1e-15)
