import json

import pytest

from jcaco.errors import ConfigurationError
from jcaco.harness import (
    CSV_FIELDS,
    AggregateResult,
    AggregateRow,
    SweepSpec,
    read_rows,
    rows_to_csv,
    run_sweep,
    scenario_for,
    trend_check,
    worker_count,
)


def test_full_grid_row_count(tmp_path):
    spec = SweepSpec("num_aps", (2, 4, 6, 8, 10), masl={"max_iter": 20})
    res = run_sweep(spec, tmp_path, workers=4)
    assert len(res.rows) == 500
    assert not res.failures
    lines = (tmp_path / "runs.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_FIELDS)
    assert len(lines) == 501
    agg = json.loads((tmp_path / "aggregate.json").read_text())
    assert len(agg["rows"]) == 25 and all(r["seeds"] == 20 for r in agg["rows"])


def test_single_cell_one_row_per_algorithm(tmp_path):
    spec = SweepSpec("num_ues", (10,), seeds=(3,), masl={"max_iter": 200})
    res = run_sweep(spec, tmp_path, workers=1)
    assert sorted(r.algorithm for r in res.rows) == sorted(spec.algorithms)
    assert read_rows(tmp_path / "runs.csv") == [r for r in res.rows]


def test_rerun_identical_bytes(tmp_path):
    spec = SweepSpec("data_volume", (2.0, 6.0), seeds=(0, 1), masl={"max_iter": 300})
    run_sweep(spec, tmp_path / "a", workers=1)
    run_sweep(spec, tmp_path / "b", workers=2)
    assert (tmp_path / "a" / "runs.csv").read_bytes() == (tmp_path / "b" / "runs.csv").read_bytes()


def test_swept_value_pins_only_that_parameter():
    spec = SweepSpec("ap_bandwidth", (2e6, 10e6), seeds=(0,))
    lo, hi = scenario_for(spec, 2e6, 0), scenario_for(spec, 10e6, 0)
    assert all(ap.bandwidth_hz == 2e6 for ap in lo.aps)
    assert lo.ues == hi.ues and lo.servers == hi.servers


def test_spec_validation(tmp_path):
    with pytest.raises(ConfigurationError, match="param"):
        SweepSpec("colour", (1, 2))
    with pytest.raises(ConfigurationError, match="values"):
        SweepSpec("num_aps", ())
    with pytest.raises(ConfigurationError, match="algorithms"):
        SweepSpec("num_aps", (2,), algorithms=("Oracle",))
    with pytest.raises(ConfigurationError, match="outside published bounds"):
        SweepSpec("ap_bandwidth", (50e6,))
    with pytest.raises(ConfigurationError, match="masl"):
        SweepSpec("num_aps", (2,), masl={"gamma": 1})
    with pytest.raises(ConfigurationError, match="not found"):
        SweepSpec.load(tmp_path / "nope.json")
    path = tmp_path / "s.json"
    spec = SweepSpec("num_es", (2, 4), seeds=(1,))
    path.write_text(json.dumps(spec.to_dict()))
    assert SweepSpec.load(path) == spec


def _agg(means):
    rows = [AggregateRow("MASL", float(v), 20, 20, 0, 0, m, 0.0, 1.0) for v, m in enumerate(means)]
    return AggregateResult("num_aps", rows)


def test_trend_check_tolerance():
    assert trend_check(_agg([10, 9, 8, 7]), "monotone-decreasing").passed
    assert trend_check(_agg([10, 10.4, 8, 7]), "monotone-decreasing", 0.05).passed
    bumpy = trend_check(_agg([10, 11, 8, 7]), "monotone-decreasing", 0.05)
    assert not bumpy.passed and bumpy.violations[0][:2] == (0.0, 1.0)
    assert trend_check(_agg([1, 2, 3]), "monotone-increasing").passed
    assert bumpy.describe().startswith("FAIL")


def test_flat_series_fails_at_zero_tolerance():
    assert not trend_check(_agg([5, 5, 5, 5, 5]), "monotone-decreasing", 0.0).passed
    assert not trend_check(_agg([5, 5, 5, 5, 5]), "monotone-increasing", 0.0).passed


def test_worker_cap(monkeypatch):
    monkeypatch.setenv("JCACO_WORKERS", "2")
    assert worker_count(8) == 2
    monkeypatch.setenv("JCACO_WORKERS", "many")
    with pytest.raises(ConfigurationError):
        worker_count(8)


def test_csv_lf_and_sorted():
    spec = SweepSpec("num_ues", (10,), seeds=(2, 1), algorithms=("Selfish", "BR"))
    res = run_sweep(spec, workers=1)
    text = rows_to_csv(list(reversed(res.rows)))
    assert "\r" not in text
    body = text.splitlines()[1:]
    assert [ln.split(",")[0] for ln in body] == ["BR", "BR", "Selfish", "Selfish"]
    assert [ln.split(",")[3] for ln in body] == ["1", "2", "1", "2"]
