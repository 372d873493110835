import csv
import json

import pytest

from jcaco.cli import main


def test_generate_then_run(tmp_path, capsys):
    scen = tmp_path / "s.cfg"
    assert main(["generate", "--m", "4", "--k", "3", "--n", "10", "--seed", "1", "--out", str(scen)]) == 0
    out = tmp_path / "run"
    assert main(["run", "--algo", "masl", "--scenario", str(scen), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["converged"] is True
    assert set(summary["profile"]) == {"ap_choice", "es_choice", "steps"}
    with (out / "trace.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:3] == ["iteration", "total_expected_time", "max_strategy_delta"]
    assert len(rows[0]) == 3 + 10
    assert len(rows) - 1 == summary["iterations"]


@pytest.mark.parametrize("algo", ["br", "mxfp", "selfish", "raro"])
def test_run_baselines(tmp_path, algo):
    scen = tmp_path / "s.json"
    main(["generate", "--m", "2", "--k", "2", "--n", "10", "--out", str(scen)])
    assert main(["run", "--algo", algo, "--scenario", str(scen), "--out", str(tmp_path / algo)]) == 0
    assert json.loads((tmp_path / algo / "summary.json").read_text())["objective_s"] > 0


def test_missing_scenario_named(tmp_path, capsys):
    missing = tmp_path / "missing.txt"
    assert main(["run", "--algo", "masl", "--scenario", str(missing), "--out", str(tmp_path / "o")]) == 1
    assert str(missing) in capsys.readouterr().err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"m": 3, "colour": "red"}))
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "s.json")]) == 1
    assert "colour" in capsys.readouterr().err


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"m": 3, "k": 2, "n": 12, "seed": 4}))
    scen = tmp_path / "s.json"
    assert main(["generate", "--config", str(cfg), "--n", "11", "--out", str(scen)]) == 0
    data = json.loads(scen.read_text())
    assert (len(data["aps"]), len(data["servers"]), len(data["ues"])) == (3, 2, 11)


def test_usage_error_exits_one():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--algo", "nope"])
    assert exc.value.code == 1


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "verify" in capsys.readouterr().out


def test_verify_suites(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "--suite", "ne", "--trials", "5", "--seed", "7", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["ok"] and rep["suite"] == "ne"
    assert main(["verify", "--suite", "expectation", "--trials", "2000", "--out", str(tmp_path / "e.json")]) == 0


def test_sweep_and_report(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"param": "num_ues", "values": [10, 20, 30], "seeds": [0, 1],
                                "algorithms": ["BR", "Selfish"]}))
    out = tmp_path / "sw"
    assert main(["sweep", "--spec", str(spec), "--out", str(out), "--workers", "1"]) == 0
    assert (out / "runs.csv").is_file() and (out / "failures.json").is_file()
    capsys.readouterr()
    assert main(["report", "--in", str(out)]) == 0
    text = capsys.readouterr().out
    assert "trend BR:" in text and "monotone-increasing" in text


def test_report_missing_dir(tmp_path, capsys):
    assert main(["report", "--in", str(tmp_path / "nowhere")]) == 1
    assert "nowhere" in capsys.readouterr().err
