import numpy as np
import pytest

from jcaco.model import (
    AccessPoint,
    EdgeServer,
    GameConstants,
    GenerationConfig,
    PhysicsConstants,
    Scenario,
    UserEquipment,
    generate_scenario,
)


def build(
    ue_positions,
    ap_positions=((500.0, 500.0),),
    servers=((4.0, 0.3, 1.0),),
    probs=None,
    bandwidth=5e6,
    data_bits=4e7,
    threshold=0.01,
    fitness=0.3,
    power=0.2,
    physics=None,
    game=None,
):
    """Hand-built scenario; servers are (flops_per_sec, flops_per_step, error_scale)."""
    M, K = len(ap_positions), len(servers)
    probs = probs if probs is not None else [1.0] * len(ue_positions)
    bw = np.broadcast_to(np.asarray(bandwidth, float), (M,))
    aps = tuple(AccessPoint(i, tuple(map(float, pos)), float(bw[i])) for i, pos in enumerate(ap_positions))
    srv = tuple(EdgeServer(k, float(f), float(x), float(e)) for k, (f, x, e) in enumerate(servers))
    ues = tuple(
        UserEquipment(
            id=n,
            position=tuple(map(float, pos)),
            data_size_bits=float(data_bits),
            active_prob=float(probs[n]),
            error_threshold=float(threshold),
            fitness=(float(fitness),) * K,
            tx_power_watts=(float(power),) * M,
        )
        for n, pos in enumerate(ue_positions)
    )
    return Scenario(aps, srv, ues, physics or PhysicsConstants(), game or GameConstants())


@pytest.fixture
def small():
    return generate_scenario(GenerationConfig(3, 2, 5, seed=11))


@pytest.fixture
def default_family():
    return [generate_scenario(GenerationConfig(5, 5, 30, seed=s)) for s in range(3)]
