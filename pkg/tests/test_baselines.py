import numpy as np
import pytest

from jcaco.baselines import (
    BaselineConfig,
    default_view,
    run_best_response,
    run_mxfp,
    run_raro,
    run_selfish,
    terminal_is_ne,
)
from jcaco.env import ActivityState, realize_channel
from jcaco.errors import DomainError
from jcaco.games import GameView, candidate_payoffs
from jcaco.latency import StrategyProfile, optimal_steps_matrix, unit_tx_times
from jcaco.model import GenerationConfig, generate_scenario

from conftest import build


def _single():
    return build([(320.0, 610.0)], ap_positions=((250, 250), (750, 750), (250, 750)),
                 servers=((3.0, 0.3, 1.0), (9.0, 0.45, 1.0)), probs=[0.6])


def test_single_user_best_response_is_global_argmin():
    sc = _single()
    view = default_view(sc)
    res = run_best_response(sc)
    table = candidate_payoffs(view, StrategyProfile.with_optimal_steps(sc, [0], [0]), 0)
    m, k = np.unravel_index(np.argmin(table), table.shape)
    assert (res.profile.ap_choice[0], res.profile.es_choice[0]) == (m, k)
    assert res.rounds <= 2 and res.converged


@pytest.mark.parametrize("seed", range(5))
def test_best_response_terminates_in_equilibrium(seed):
    sc = generate_scenario(GenerationConfig(4, 4, 12, seed=seed))
    start = StrategyProfile.with_optimal_steps(sc, np.arange(12) % 4, np.arange(12) % 4)
    res = run_best_response(sc, start=start, record_potential=True)
    assert res.converged
    assert terminal_is_ne(sc, res)
    assert res.moves and all(mv.potential_decreased and mv.gain > 1e-3 for mv in res.moves)


def test_best_response_complete_view_moves_only_active():
    sc = generate_scenario(GenerationConfig(3, 3, 8, seed=1))
    ch = realize_channel(sc)
    act = np.array([1, 0, 1, 1, 0, 1, 1, 0], bool)
    view = GameView.complete(sc, ch, ActivityState(act), "total")
    start = StrategyProfile.with_optimal_steps(sc, [0] * 8, [0] * 8)
    res = run_best_response(sc, view, start=start)
    moved = (res.profile.ap_choice != 0) | (res.profile.es_choice != 0)
    assert not moved[~act].any()
    assert terminal_is_ne(sc, res, view)


def test_mxfp_single_resources_match_selfish():
    sc = build([(100.0, 100.0), (900.0, 800.0)], probs=[0.4, 0.9])
    assert run_mxfp(sc).profile == run_selfish(sc).profile


def test_mxfp_uniform_belief_hand_sums():
    # three users, two APs: opponent n' adds p_n' * T_n'm / 2 to AP m
    sc = build([(200.0, 500.0), (800.0, 500.0), (450.0, 500.0)], ap_positions=((300, 500), (700, 500)),
               probs=[0.5, 0.8, 1.0])
    res = run_mxfp(sc)
    t = unit_tx_times(sc, realize_channel(sc))
    p = sc.active_probs
    for n in range(3):
        others = [sum(p[j] * t[j, m] / 2 for j in range(3) if j != n) for m in range(2)]
        cost = [others[m] + p[n] * t[n, m] for m in range(2)]
        assert res.profile.ap_choice[n] == int(np.argmin(cost))
    assert res.converged


def test_mxfp_empirical_beliefs_converge():
    sc = generate_scenario(GenerationConfig(3, 3, 10, seed=2))
    res = run_mxfp(sc, beliefs="empirical")
    assert res.rounds <= 500
    with pytest.raises(DomainError):
        run_mxfp(sc, beliefs="psychic")


def test_selfish_picks_colocated_ap_and_fastest_server():
    sc = build([(250.0, 250.0), (750.0, 750.0)], ap_positions=((250, 250), (750, 750)),
               servers=((3.0, 0.3, 1.0), (9.0, 0.3, 1.0), (5.0, 0.3, 1.0)))
    prof = run_selfish(sc).profile
    np.testing.assert_array_equal(prof.ap_choice, [0, 1])
    np.testing.assert_array_equal(prof.es_choice, [1, 1])
    np.testing.assert_array_equal(prof.steps, optimal_steps_matrix(sc)[:, 1])


def test_raro_single_resources_unique():
    sc = build([(100.0, 100.0), (900.0, 800.0)])
    for s in range(5):
        prof = run_raro(sc, np.random.default_rng(s)).profile
        assert prof == StrategyProfile.with_optimal_steps(sc, [0, 0], [0, 0])


def test_raro_roughly_uniform():
    sc = build([(500.0, 500.0)] * 200, ap_positions=((250, 250), (750, 750), (250, 750), (750, 250)))
    counts = np.bincount(run_raro(sc, np.random.default_rng(0)).profile.ap_choice, minlength=4)
    # binomial(200, 1/4): sd about 6.1
    assert np.all(np.abs(counts - 50) < 4 * 6.2)


def test_config_validation():
    with pytest.raises(DomainError):
        BaselineConfig("Oracle")
    with pytest.raises(DomainError):
        BaselineConfig(max_rounds=0)
