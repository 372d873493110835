"""Multi-seed parameter sweeps, aggregation and trend checks.

A sweep varies one scenario parameter over a list of values.  For each
(value, seed) pair the scenario is generated from the seed with that one
parameter pinned, so all values of a seed share every other draw.  Each
algorithm then runs on the scenario and its final expected objective is
recorded as one CSV row.
"""
from __future__ import annotations

import csv
import io
import json
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .baselines import BaselineConfig, run_best_response, run_mxfp, run_raro, run_selfish
from .env import realize_channel
from .errors import ConfigurationError
from .io import atomic_write_json, atomic_write_text
from .latency import total_service_time
from .masl import MaslConfig, run_jcaco
from .model import GenerationConfig, Scenario, generate_scenario
from .rng import RngStream

__all__ = [
    "ALGORITHMS",
    "SWEEP_PARAMS",
    "EXPECTED_TRENDS",
    "ACCEPTANCE_VALUES",
    "CSV_FIELDS",
    "SweepSpec",
    "RunRecord",
    "AggregateRow",
    "AggregateResult",
    "SweepResult",
    "TrendVerdict",
    "scenario_for",
    "run_algorithm",
    "run_sweep",
    "aggregate",
    "trend_check",
    "read_rows",
    "rows_to_csv",
    "worker_count",
]

ALGORITHMS = ("MASL", "BR", "mxFP", "Selfish", "RARO")

# swept parameter -> how a value is written into the generation config
SWEEP_PARAMS = {
    "num_aps": ("count", "num_aps"),
    "num_es": ("count", "num_servers"),
    "num_ues": ("count", "num_ues"),
    "ap_bandwidth": ("range", "bandwidth_hz"),
    "es_capacity": ("range", "flops_per_sec"),
    "flops_per_step": ("range", "flops_per_step"),
    "data_volume": ("range", "data_size_mb"),
}

EXPECTED_TRENDS = {
    "num_aps": "monotone-decreasing",
    "ap_bandwidth": "monotone-decreasing",
    "num_es": "monotone-decreasing",
    "es_capacity": "monotone-decreasing",
    "flops_per_step": "monotone-increasing",
    "num_ues": "monotone-increasing",
    "data_volume": "monotone-increasing",
}

ACCEPTANCE_VALUES = {
    "num_aps": (2, 4, 6, 8, 10),
    "ap_bandwidth": (2e6, 4e6, 6e6, 8e6, 10e6),
    "num_es": (2, 4, 6, 8, 10),
    "es_capacity": (2.0, 4.0, 6.0, 8.0, 10.0),
    "flops_per_step": (0.1, 0.2, 0.3, 0.4, 0.5),
    "num_ues": (10, 15, 20, 25, 30),
    "data_volume": (2.0, 4.0, 6.0, 8.0, 10.0),
}

CSV_FIELDS = ("algorithm", "swept_param", "swept_value", "seed", "converged", "iterations", "objective_s")

_MASL_KEYS = {"alpha", "beta", "delta", "max_iter", "delay_mode", "normalizer"}
_BASE_KEYS = {"num_aps", "num_servers", "num_ues", "ranges", "enforce_table_bounds"}
_SPEC_KEYS = {"param", "values", "seeds", "algorithms", "base", "masl"}


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple
    seeds: tuple = tuple(range(20))
    algorithms: tuple = ALGORITHMS
    base: dict = field(default_factory=lambda: {"num_aps": 5, "num_servers": 5, "num_ues": 30})
    masl: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if self.param not in SWEEP_PARAMS:
            raise ConfigurationError(f"param: unknown swept parameter {self.param!r}; expected one of {sorted(SWEEP_PARAMS)}")
        for name in ("values", "seeds", "algorithms"):
            if not getattr(self, name):
                raise ConfigurationError(f"{name}: must be a nonempty list")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigurationError(f"algorithms: unknown algorithm {a!r}; expected one of {list(ALGORITHMS)}")
        for s in self.seeds:
            if s < 0:
                raise ConfigurationError("seeds: must be non-negative integers")
        bad = set(self.base) - _BASE_KEYS
        if bad:
            raise ConfigurationError(f"base: unknown keys {sorted(bad)}")
        bad = set(self.masl) - _MASL_KEYS
        if bad:
            raise ConfigurationError(f"masl: unknown keys {sorted(bad)}")
        self.masl_config(0)
        # generating one scenario per value validates the values against the published ranges
        for v in self.values:
            scenario_for(self, v, self.seeds[0])

    def masl_config(self, seed: int) -> MaslConfig:
        try:
            return MaslConfig(seed=seed, **self.masl)
        except ValueError as exc:
            raise ConfigurationError(f"masl: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "param": self.param,
            "values": list(self.values),
            "seeds": list(self.seeds),
            "algorithms": list(self.algorithms),
            "base": dict(self.base),
            "masl": dict(self.masl),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        bad = set(data) - _SPEC_KEYS
        if bad:
            raise ConfigurationError(f"unknown sweep-spec keys {sorted(bad)}")
        if "param" not in data or "values" not in data:
            raise ConfigurationError("sweep spec needs 'param' and 'values'")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "SweepSpec":
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"sweep spec not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)


def scenario_for(spec: SweepSpec, value, seed: int) -> Scenario:
    """Scenario for one (value, seed) cell of a sweep."""
    how, key = SWEEP_PARAMS[spec.param]
    base = dict(spec.base)
    ranges = dict(base.pop("ranges", {}))
    if how == "count":
        if float(value) != int(value):
            raise ConfigurationError(f"values: {spec.param} needs integers, got {value!r}")
        base[key] = int(value)
    else:
        ranges[key] = (float(value), float(value))
    try:
        return generate_scenario(GenerationConfig(seed=seed, ranges=ranges, **base))
    except ConfigurationError as exc:
        raise ConfigurationError(f"values: {spec.param}={value!r}: {exc}") from exc
    except TypeError as exc:
        raise ConfigurationError(f"base: {exc}") from exc


@dataclass(frozen=True)
class RunRecord:
    algorithm: str
    swept_param: str
    swept_value: float
    seed: int
    converged: bool
    iterations: int
    objective_s: float | None
    error: str | None = None

    def sort_key(self):
        return (self.algorithm, float(self.swept_value), self.seed)


def run_algorithm(name: str, scenario: Scenario, seed: int, masl: MaslConfig | None = None) -> tuple[bool, int, float]:
    """Run one algorithm; returns (converged, iterations or rounds, expected objective)."""
    channel = realize_channel(scenario)
    if name == "MASL":
        res = run_jcaco(scenario, masl or MaslConfig(seed=seed), channel)
        return res.converged, res.iterations, res.objective
    if name == "BR":
        res = run_best_response(scenario)
    elif name == "mxFP":
        res = run_mxfp(scenario, BaselineConfig("mxFP"), channel)
    elif name == "Selfish":
        res = run_selfish(scenario)
    elif name == "RARO":
        res = run_raro(scenario, RngStream(seed).generator("raro"))
    else:
        raise ConfigurationError(f"unknown algorithm {name!r}")
    return res.converged, res.rounds, total_service_time(scenario, res.profile, channel).objective


def _run_cell(args) -> RunRecord:
    spec, value, seed, algorithm = args
    try:
        scenario = scenario_for(spec, value, seed)
        conv, iters, obj = run_algorithm(algorithm, scenario, seed, spec.masl_config(seed))
        return RunRecord(algorithm, spec.param, value, seed, bool(conv), int(iters), float(obj))
    except Exception as exc:  # recorded, the sweep goes on
        msg = f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"
        return RunRecord(algorithm, spec.param, value, seed, False, 0, None, msg)


def worker_count(requested: int | None = None) -> int:
    """Worker processes to use: ``requested`` capped by ``JCACO_WORKERS`` and the CPU count."""
    cap = os.environ.get("JCACO_WORKERS")
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError as exc:
            raise ConfigurationError(f"JCACO_WORKERS must be an integer, got {cap!r}") from exc
    return max(1, n)


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AggregateRow:
    algorithm: str
    swept_value: float
    seeds: int
    converged: int
    not_converged: int
    failed: int
    mean_objective_s: float | None
    std_objective_s: float | None
    mean_iterations: float | None

    @property
    def convergence_rate(self) -> float:
        return self.converged / self.seeds if self.seeds else 0.0


@dataclass
class AggregateResult:
    swept_param: str
    rows: list[AggregateRow]

    def series(self, algorithm: str) -> list[AggregateRow]:
        return sorted((r for r in self.rows if r.algorithm == algorithm), key=lambda r: r.swept_value)

    def to_dict(self) -> dict:
        return {
            "swept_param": self.swept_param,
            "rows": [dict(asdict(r), convergence_rate=r.convergence_rate) for r in self.rows],
        }


def aggregate(rows: list[RunRecord]) -> AggregateResult:
    """Per (algorithm, value): objective statistics over converged runs."""
    if not rows:
        raise ValueError("no runs to aggregate")
    param = rows[0].swept_param
    groups: dict[tuple, list[RunRecord]] = {}
    for r in rows:
        groups.setdefault((r.algorithm, float(r.swept_value)), []).append(r)
    out = []
    for (alg, value), rs in sorted(groups.items()):
        ok = [r for r in rs if r.converged and r.objective_s is not None]
        failed = sum(r.error is not None for r in rs)
        objs = np.array([r.objective_s for r in ok], dtype=float)
        out.append(
            AggregateRow(
                alg,
                value,
                len(rs),
                len(ok),
                len(rs) - len(ok) - failed,
                failed,
                float(objs.mean()) if ok else None,
                float(objs.std(ddof=1)) if len(ok) > 1 else (0.0 if ok else None),
                float(np.mean([r.iterations for r in ok])) if ok else None,
            )
        )
    return AggregateResult(param, out)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _fmt_value(v) -> str:
    f = float(v)
    return str(int(f)) if f.is_integer() else repr(f)


def rows_to_csv(rows: list[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in sorted(rows, key=RunRecord.sort_key):
        w.writerow(
            [
                r.algorithm,
                r.swept_param,
                _fmt_value(r.swept_value),
                r.seed,
                "true" if r.converged else "false",
                r.iterations,
                "" if r.objective_s is None else repr(r.objective_s),
            ]
        )
    return buf.getvalue()


def read_rows(path: str | Path) -> list[RunRecord]:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"run table not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ConfigurationError(f"{path}: unexpected header {reader.fieldnames}")
        out = []
        for rec in reader:
            obj = rec["objective_s"]
            out.append(
                RunRecord(
                    rec["algorithm"],
                    rec["swept_param"],
                    float(rec["swept_value"]),
                    int(rec["seed"]),
                    rec["converged"] == "true",
                    int(rec["iterations"]),
                    float(obj) if obj else None,
                )
            )
    return out


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[RunRecord]
    aggregate: AggregateResult

    @property
    def failures(self) -> list[RunRecord]:
        return [r for r in self.rows if r.error is not None]


def run_sweep(spec: SweepSpec, out_dir: str | Path | None = None, workers: int | None = None) -> SweepResult:
    """Run every (value, seed, algorithm) cell; optionally write ``runs.csv``,
    ``aggregate.json`` and ``failures.json`` into ``out_dir``."""
    cells = [(spec, v, s, a) for v in spec.values for s in spec.seeds for a in spec.algorithms]
    n = worker_count(workers)
    if n > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(_run_cell, cells, chunksize=max(1, len(cells) // (4 * n))))
    else:
        rows = [_run_cell(c) for c in cells]
    rows.sort(key=RunRecord.sort_key)
    result = SweepResult(spec, rows, aggregate(rows))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        atomic_write_text(out / "runs.csv", rows_to_csv(rows))
        atomic_write_json(out / "aggregate.json", {"spec": spec.to_dict(), **result.aggregate.to_dict()})
        atomic_write_json(
            out / "failures.json",
            [{"algorithm": r.algorithm, "swept_value": r.swept_value, "seed": r.seed, "error": r.error} for r in result.failures],
        )
    return result


# ---------------------------------------------------------------------------
# trends
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrendVerdict:
    passed: bool
    expectation: str
    values: tuple
    means: tuple
    violations: tuple  # (value_before, value_after, relative change against the expectation)

    def describe(self) -> str:
        pts = ", ".join(f"{_fmt_value(v)}:{m:.4g}" for v, m in zip(self.values, self.means))
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.expectation} [{pts}]"


def trend_check(
    result: AggregateResult,
    expectation: Literal["monotone-decreasing", "monotone-increasing"],
    noise_tolerance: float = 0.05,
    algorithm: str = "MASL",
) -> TrendVerdict:
    """Monotonicity of the seed-averaged objective along the swept values.

    Each consecutive step may go against the expected direction by at most
    ``noise_tolerance`` relative to the earlier mean.  A perfectly flat
    series fails at tolerance 0, since it is not strictly monotone there.
    """
    if expectation not in ("monotone-decreasing", "monotone-increasing"):
        raise ValueError(f"unknown expectation {expectation!r}")
    series = [r for r in result.series(algorithm) if r.mean_objective_s is not None]
    if len(series) < 3:
        raise ValueError("a trend check needs at least three swept values with results")
    values = tuple(r.swept_value for r in series)
    means = tuple(r.mean_objective_s for r in series)
    sign = -1.0 if expectation == "monotone-decreasing" else 1.0
    bad = []
    for (v0, m0), (v1, m1) in zip(zip(values, means), zip(values[1:], means[1:])):
        against = -sign * (m1 - m0) / abs(m0) if m0 else -sign * (m1 - m0)
        if against > noise_tolerance or (noise_tolerance == 0 and m1 == m0):
            bad.append((v0, v1, against))
    return TrendVerdict(not bad, expectation, values, means, tuple(bad))
