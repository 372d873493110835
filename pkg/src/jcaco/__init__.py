"""Joint AP association and edge-server offloading games for generative-AI inference.

Submodules:

- ``model``: scenario description, validation, generation, JSON round trip
- ``env``: user activity, channel realizations, mobility
- ``latency``: capacities, unit times, loads, content error and step counts
- ``games``: payoffs, load potentials, sign-property and equilibrium checks
- ``masl``: linear reward-inaction learning for both subgames
- ``baselines``: best response, fictitious play, selfish and random choices
- ``harness``: multi-seed sweeps and trend checks
- ``verify``: brute-force verification suites
"""
from .env import ActivityState, ChannelRealization, realize_channel, sample_activity
from .errors import CapacityError, ConfigurationError, DomainError, JcacoError
from .games import GameView, check_sign_property, is_nash_equilibrium, payoff, potential
from .latency import DelayBreakdown, StrategyProfile, optimal_steps, total_service_time
from .masl import MaslConfig, run_alg1, run_alg2, run_jcaco
from .model import GenerationConfig, Scenario, generate_scenario, load_scenario, save_scenario, validate
from .rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "ActivityState",
    "CapacityError",
    "ChannelRealization",
    "ConfigurationError",
    "DelayBreakdown",
    "DomainError",
    "GameView",
    "GenerationConfig",
    "JcacoError",
    "MaslConfig",
    "RngStream",
    "Scenario",
    "StrategyProfile",
    "check_sign_property",
    "generate_scenario",
    "is_nash_equilibrium",
    "load_scenario",
    "optimal_steps",
    "payoff",
    "potential",
    "realize_channel",
    "run_alg1",
    "run_alg2",
    "run_jcaco",
    "sample_activity",
    "save_scenario",
    "total_service_time",
    "validate",
]
