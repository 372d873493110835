"""Network instance description: access points, edge servers, users, constants.

All types here are immutable.  Vectors are stored as tuples so that scenarios
compare and hash by value; numpy views of the same data are exposed through
cached properties on :class:`Scenario`.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ConfigurationError
from .rng import RngStream

__all__ = [
    "AccessPoint",
    "EdgeServer",
    "UserEquipment",
    "PhysicsConstants",
    "GameConstants",
    "Scenario",
    "Violation",
    "ValidationReport",
    "GenerationConfig",
    "TABLE_III_BOUNDS",
    "DEFAULT_RANGES",
    "PROB_GRANULARITY",
    "BITS_PER_MB",
    "validate",
    "generate_scenario",
    "ap_grid_positions",
    "quantize_probability",
    "encode",
    "decode",
    "to_dict",
    "from_dict",
    "save_scenario",
    "load_scenario",
]

PROB_GRANULARITY = 1e-3
BITS_PER_MB = 8e6


@dataclass(frozen=True)
class AccessPoint:
    id: int
    position: tuple[float, float]
    bandwidth_hz: float


@dataclass(frozen=True)
class EdgeServer:
    id: int
    flops_per_sec: float  # TFLOPs/s
    flops_per_step: float  # TFLOPs per inference step
    forward_error_scale: float


@dataclass(frozen=True)
class UserEquipment:
    id: int
    position: tuple[float, float]
    data_size_bits: float
    active_prob: float
    error_threshold: float
    fitness: tuple[float, ...]  # one attenuation factor per edge server
    tx_power_watts: tuple[float, ...]  # one transmit power per access point


@dataclass(frozen=True)
class PhysicsConstants:
    path_loss_exponent: float = 4.0
    noise_psd_dbm_per_hz: float = -174.0
    rayleigh_enabled: bool = False
    area_side_m: float = 1000.0
    distance_floor_m: float = 1.0
    mobility_step_m: float = 10.0


@dataclass(frozen=True)
class GameConstants:
    """Time granularities and exponential-potential bases.

    Bases are stored as base-2 logarithms: the base that guarantees the sign property for a
    1 ms granularity is 2**1000, which no float can hold.  ``None`` means
    "exactly the threshold", i.e. ``1 / granularity``.
    """

    comm_time_granularity: float = 1e-3
    comp_time_granularity: float = 1e-3
    log2_potential_base_comm: float | None = None
    log2_potential_base_comp: float | None = None
    min_inference_steps: int = 1

    @property
    def comm_log2_base(self) -> float:
        if self.log2_potential_base_comm is None:
            return 1.0 / self.comm_time_granularity
        return self.log2_potential_base_comm

    @property
    def comp_log2_base(self) -> float:
        if self.log2_potential_base_comp is None:
            return 1.0 / self.comp_time_granularity
        return self.log2_potential_base_comp


@dataclass(frozen=True)
class Scenario:
    aps: tuple[AccessPoint, ...]
    servers: tuple[EdgeServer, ...]
    ues: tuple[UserEquipment, ...]
    physics: PhysicsConstants = field(default_factory=PhysicsConstants)
    game: GameConstants = field(default_factory=GameConstants)

    @property
    def num_aps(self) -> int:
        return len(self.aps)

    @property
    def num_servers(self) -> int:
        return len(self.servers)

    @property
    def num_ues(self) -> int:
        return len(self.ues)

    # numpy views -----------------------------------------------------------

    @cached_property
    def ap_positions(self) -> np.ndarray:
        return _frozen(np.array([ap.position for ap in self.aps], dtype=float).reshape(-1, 2))

    @cached_property
    def bandwidths(self) -> np.ndarray:
        return _frozen(np.array([ap.bandwidth_hz for ap in self.aps], dtype=float))

    @cached_property
    def ue_positions(self) -> np.ndarray:
        return _frozen(np.array([ue.position for ue in self.ues], dtype=float).reshape(-1, 2))

    @cached_property
    def data_bits(self) -> np.ndarray:
        return _frozen(np.array([ue.data_size_bits for ue in self.ues], dtype=float))

    @cached_property
    def active_probs(self) -> np.ndarray:
        return _frozen(np.array([ue.active_prob for ue in self.ues], dtype=float))

    @cached_property
    def error_thresholds(self) -> np.ndarray:
        return _frozen(np.array([ue.error_threshold for ue in self.ues], dtype=float))

    @cached_property
    def fitness(self) -> np.ndarray:
        return _frozen(np.array([ue.fitness for ue in self.ues], dtype=float).reshape(self.num_ues, -1))

    @cached_property
    def tx_power(self) -> np.ndarray:
        return _frozen(np.array([ue.tx_power_watts for ue in self.ues], dtype=float).reshape(self.num_ues, -1))

    @cached_property
    def server_flops(self) -> np.ndarray:
        return _frozen(np.array([s.flops_per_sec for s in self.servers], dtype=float))

    @cached_property
    def server_step_flops(self) -> np.ndarray:
        return _frozen(np.array([s.flops_per_step for s in self.servers], dtype=float))

    @cached_property
    def server_error_scale(self) -> np.ndarray:
        return _frozen(np.array([s.forward_error_scale for s in self.servers], dtype=float))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def messages(self) -> list[str]:
        return [str(v) for v in self.violations]


def _finite_positive(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x) and x > 0


def validate(scenario: Scenario) -> ValidationReport:
    """Collect every invariant violation; never raises on bad data."""
    out: list[Violation] = []

    def bad(path: str, msg: str) -> None:
        out.append(Violation(path, msg))

    phys, game = scenario.physics, scenario.game
    side = phys.area_side_m
    if not _finite_positive(phys.path_loss_exponent):
        bad("physics.path_loss_exponent", "path_loss_exponent must be > 0")
    if not _finite_positive(side):
        bad("physics.area_side_m", "area_side_m must be > 0")
    if not _finite_positive(phys.distance_floor_m):
        bad("physics.distance_floor_m", "distance_floor_m must be > 0")
    if not (math.isfinite(phys.mobility_step_m) and phys.mobility_step_m >= 0):
        bad("physics.mobility_step_m", "mobility_step_m must be >= 0")
    if not math.isfinite(phys.noise_psd_dbm_per_hz):
        bad("physics.noise_psd_dbm_per_hz", "noise_psd_dbm_per_hz must be finite")

    for name in ("comm_time_granularity", "comp_time_granularity"):
        if not _finite_positive(getattr(game, name)):
            bad(f"game.{name}", f"{name} must be > 0")
    if _finite_positive(game.comm_time_granularity) and game.comm_log2_base < 1.0 / game.comm_time_granularity:
        bad("game.log2_potential_base_comm", "potential_base_comm must be >= 2^(1/comm_time_granularity)")
    if _finite_positive(game.comp_time_granularity) and game.comp_log2_base < 1.0 / game.comp_time_granularity:
        bad("game.log2_potential_base_comp", "potential_base_comp must be >= 2^(1/comp_time_granularity)")
    if not (isinstance(game.min_inference_steps, int) and game.min_inference_steps >= 1):
        bad("game.min_inference_steps", "min_inference_steps must be an integer >= 1")

    M, K = len(scenario.aps), len(scenario.servers)
    if M == 0:
        bad("aps", "at least one access point is required")
    if K == 0:
        bad("servers", "at least one edge server is required")
    if len(scenario.ues) == 0:
        bad("ues", "at least one user is required")

    def check_position(path: str, pos) -> None:
        if len(pos) != 2 or not all(math.isfinite(c) for c in pos):
            bad(path, "position must be two finite coordinates")
        elif _finite_positive(side) and not all(0.0 <= c <= side for c in pos):
            bad(path, "position lies outside the scenario area")

    for i, ap in enumerate(scenario.aps):
        p = f"aps[{i}]"
        if ap.id != i:
            bad(f"{p}.id", f"id {ap.id} does not match index {i}")
        if not _finite_positive(ap.bandwidth_hz):
            bad(f"{p}.bandwidth_hz", "bandwidth_hz must be > 0")
        check_position(f"{p}.position", ap.position)

    for i, s in enumerate(scenario.servers):
        p = f"servers[{i}]"
        if s.id != i:
            bad(f"{p}.id", f"id {s.id} does not match index {i}")
        for name in ("flops_per_sec", "flops_per_step", "forward_error_scale"):
            if not _finite_positive(getattr(s, name)):
                bad(f"{p}.{name}", f"{name} must be > 0")

    for i, ue in enumerate(scenario.ues):
        p = f"ues[{i}]"
        if ue.id != i:
            bad(f"{p}.id", f"id {ue.id} does not match index {i}")
        check_position(f"{p}.position", ue.position)
        if not _finite_positive(ue.data_size_bits):
            bad(f"{p}.data_size_bits", "data_size_bits must be > 0")
        if not _finite_positive(ue.error_threshold):
            bad(f"{p}.error_threshold", "error_threshold must be > 0")
        q = ue.active_prob
        if not (isinstance(q, (int, float)) and 0.0 < q <= 1.0):
            bad(f"{p}.active_prob", "active_prob must lie in (0, 1]")
        elif abs(q / PROB_GRANULARITY - round(q / PROB_GRANULARITY)) > 1e-9:
            bad(f"{p}.active_prob", f"active_prob must be a multiple of {PROB_GRANULARITY}")
        if len(ue.fitness) != K:
            bad(f"{p}.fitness", f"fitness length mismatch: expected {K}, got {len(ue.fitness)}")
        elif not all(_finite_positive(g) for g in ue.fitness):
            bad(f"{p}.fitness", "fitness entries must be > 0")
        if len(ue.tx_power_watts) != M:
            bad(f"{p}.tx_power_watts", f"tx_power length mismatch: expected {M}, got {len(ue.tx_power_watts)}")
        elif not all(_finite_positive(r) for r in ue.tx_power_watts):
            bad(f"{p}.tx_power_watts", "tx_power entries must be > 0")

    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

# Published parameter ranges.  Counts are inclusive integer ranges.
TABLE_III_BOUNDS: dict[str, tuple[float, float]] = {
    "num_aps": (2, 10),
    "num_servers": (2, 10),
    "num_ues": (10, 30),
    "active_prob": (PROB_GRANULARITY, 1.0),
    "flops_per_step": (0.1, 0.5),
    "flops_per_sec": (2.0, 10.0),
    "data_size_mb": (2.0, 10.0),
    "bandwidth_hz": (2e6, 10e6),
    "tx_power_w": (0.2, 0.2),
}

DEFAULT_RANGES: dict[str, tuple[float, float]] = {
    "bandwidth_hz": (2e6, 10e6),
    "flops_per_sec": (2.0, 10.0),
    "flops_per_step": (0.1, 0.5),
    "forward_error_scale": (0.5, 1.0),
    "data_size_mb": (2.0, 10.0),
    "active_prob": (0.1, 1.0),
    "error_threshold": (0.005, 0.05),
    "fitness": (0.1, 0.5),
    "tx_power_w": (0.2, 0.2),
}


@dataclass(frozen=True)
class GenerationConfig:
    num_aps: int
    num_servers: int
    num_ues: int
    seed: int = 0
    ranges: dict = field(default_factory=dict)  # overrides of DEFAULT_RANGES
    physics: PhysicsConstants = field(default_factory=PhysicsConstants)
    game: GameConstants = field(default_factory=GameConstants)
    enforce_table_bounds: bool = True

    def effective_ranges(self) -> dict[str, tuple[float, float]]:
        unknown = set(self.ranges) - set(DEFAULT_RANGES)
        if unknown:
            raise ConfigurationError(f"unknown range keys: {sorted(unknown)}")
        merged = dict(DEFAULT_RANGES)
        merged.update({k: (float(v[0]), float(v[1])) for k, v in self.ranges.items()})
        return merged


def quantize_probability(p: float) -> float:
    """Snap an activity probability onto the measurement grid, keeping it in (0, 1]."""
    steps = round(p / PROB_GRANULARITY)
    steps = min(max(steps, 1), round(1.0 / PROB_GRANULARITY))
    return round(steps * PROB_GRANULARITY, 12)


def ap_grid_positions(num_aps: int, side: float) -> list[tuple[float, float]]:
    """Centres of a ceil(sqrt(M))-column grid of cells, filled row by row."""
    cols = math.ceil(math.sqrt(num_aps))
    rows = math.ceil(num_aps / cols)
    w, h = side / cols, side / rows
    return [((i % cols + 0.5) * w, (i // cols + 0.5) * h) for i in range(num_aps)]


def _check_config(cfg: GenerationConfig, ranges: dict[str, tuple[float, float]]) -> None:
    for name in ("num_aps", "num_servers", "num_ues"):
        v = getattr(cfg, name)
        if not isinstance(v, (int, np.integer)) or v < 1:
            raise ConfigurationError(f"{name} must be an integer >= 1, got {v!r}")
    for key, (lo, hi) in ranges.items():
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ConfigurationError(f"range {key} must be finite")
        if lo > hi:
            raise ConfigurationError(f"range {key} is inverted: lo={lo} > hi={hi}")
        if lo <= 0:
            raise ConfigurationError(f"range {key} must be strictly positive")
    if ranges["active_prob"][1] > 1.0:
        raise ConfigurationError("range active_prob must lie within (0, 1]")
    if cfg.enforce_table_bounds:
        for key, (blo, bhi) in TABLE_III_BOUNDS.items():
            if key in ranges:
                lo, hi = ranges[key]
            elif key in ("num_aps", "num_servers", "num_ues"):
                # single-entity scenarios are allowed for tests; only the upper bound binds
                lo = hi = getattr(cfg, key)
                blo = 1
            else:
                continue
            if lo < blo - 1e-12 or hi > bhi + 1e-12:
                raise ConfigurationError(
                    f"{key} range ({lo}, {hi}) outside published bounds ({blo}, {bhi}); "
                    "pass enforce_table_bounds=False to override"
                )


def generate_scenario(cfg: GenerationConfig) -> Scenario:
    """Draw a scenario.  Each entity reads its own labelled stream, so adding
    users or servers never perturbs the parameters of existing ones."""
    ranges = cfg.effective_ranges()
    _check_config(cfg, ranges)
    rng = RngStream(cfg.seed)
    side = cfg.physics.area_side_m
    M, K, N = int(cfg.num_aps), int(cfg.num_servers), int(cfg.num_ues)

    def draw(gen: np.random.Generator, key: str) -> float:
        # always consume one number so pinning a range (as sweeps do) leaves
        # every later draw of the same entity untouched
        lo, hi = ranges[key]
        return float(lo + (hi - lo) * gen.random())

    aps = []
    for m, pos in enumerate(ap_grid_positions(M, side)):
        g = rng.generator("ap", m)
        aps.append(AccessPoint(id=m, position=pos, bandwidth_hz=draw(g, "bandwidth_hz")))

    servers = []
    for k in range(K):
        g = rng.generator("server", k)
        servers.append(
            EdgeServer(
                id=k,
                flops_per_sec=draw(g, "flops_per_sec"),
                flops_per_step=draw(g, "flops_per_step"),
                forward_error_scale=draw(g, "forward_error_scale"),
            )
        )

    ues = []
    for n in range(N):
        g = rng.generator("ue", n)
        pos = (float(g.uniform(0.0, side)), float(g.uniform(0.0, side)))
        data_bits = draw(g, "data_size_mb") * BITS_PER_MB
        prob = quantize_probability(draw(g, "active_prob"))
        thr = draw(g, "error_threshold")
        fitness = tuple(draw(rng.generator("fitness", n, k), "fitness") for k in range(K))
        power = tuple(draw(rng.generator("tx-power", n, m), "tx_power_w") for m in range(M))
        ues.append(
            UserEquipment(
                id=n,
                position=pos,
                data_size_bits=data_bits,
                active_prob=prob,
                error_threshold=thr,
                fitness=fitness,
                tx_power_watts=power,
            )
        )

    return Scenario(tuple(aps), tuple(servers), tuple(ues), cfg.physics, cfg.game)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

SCENARIO_FORMAT_VERSION = 1


def to_dict(scenario: Scenario) -> dict:
    d = asdict(scenario)
    d["format_version"] = SCENARIO_FORMAT_VERSION
    return d


def _tuple_f(xs: Iterable) -> tuple[float, ...]:
    return tuple(float(x) for x in xs)


def _build(cls, data: dict, path: str):
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigurationError(f"{path}: unknown keys {sorted(unknown)}")
    return cls(**data)


def from_dict(data: dict) -> Scenario:
    data = dict(data)
    version = data.pop("format_version", SCENARIO_FORMAT_VERSION)
    if version != SCENARIO_FORMAT_VERSION:
        raise ConfigurationError(f"unsupported scenario format_version {version}")
    try:
        aps = tuple(
            _build(AccessPoint, {**a, "position": _tuple_f(a["position"]), "bandwidth_hz": float(a["bandwidth_hz"])}, f"aps[{i}]")
            for i, a in enumerate(data.pop("aps"))
        )
        servers = tuple(
            _build(EdgeServer, {k: (v if k == "id" else float(v)) for k, v in s.items()}, f"servers[{i}]")
            for i, s in enumerate(data.pop("servers"))
        )
        ues = []
        for i, u in enumerate(data.pop("ues")):
            u = dict(u)
            for key in ("position", "fitness", "tx_power_watts"):
                if key in u:
                    u[key] = _tuple_f(u[key])
            for key in ("data_size_bits", "active_prob", "error_threshold"):
                if key in u:
                    u[key] = float(u[key])
            ues.append(_build(UserEquipment, u, f"ues[{i}]"))
        physics = _build(PhysicsConstants, data.pop("physics", {}), "physics")
        game = _build(GameConstants, data.pop("game", {}), "game")
    except KeyError as exc:
        raise ConfigurationError(f"scenario is missing required key {exc}") from None
    except TypeError as exc:
        raise ConfigurationError(f"malformed scenario: {exc}") from None
    if data:
        raise ConfigurationError(f"unknown top-level scenario keys {sorted(data)}")
    return Scenario(aps, servers, tuple(ues), physics, game)


def encode(scenario: Scenario) -> bytes:
    """Canonical byte encoding (sorted keys, no whitespace, shortest float repr)."""
    return json.dumps(to_dict(scenario), sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")


def decode(blob: bytes | str) -> Scenario:
    if isinstance(blob, bytes):
        blob = blob.decode("utf-8")
    return from_dict(json.loads(blob))


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    """Write the human-readable form (indented JSON) atomically."""
    from .io import atomic_write_text

    text = json.dumps(to_dict(scenario), sort_keys=True, indent=2, allow_nan=False) + "\n"
    atomic_write_text(Path(path), text)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"scenario file not found: {path}")
    try:
        return decode(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from None

