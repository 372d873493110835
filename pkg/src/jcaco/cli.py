"""``jcaco`` command line: generate, run, verify, sweep, report.

Exit codes: 0 success, 1 bad configuration or input, 2 verification failure.
Option precedence: command-line flag, then ``--config`` file, then built-in
default.  The effective options are echoed into every summary file.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from .baselines import BaselineConfig, run_best_response, run_mxfp, run_raro, run_selfish
from .env import realize_channel
from .errors import ConfigurationError, JcacoError
from .games import GameView, is_nash_equilibrium
from .harness import EXPECTED_TRENDS, SweepSpec, aggregate, read_rows, run_sweep, trend_check
from .io import atomic_write_json, atomic_write_text
from .latency import StrategyProfile, conditional_delays, total_service_time
from .masl import NORMALIZERS, MaslConfig, run_jcaco
from .model import GenerationConfig, PhysicsConstants, generate_scenario, load_scenario, save_scenario, validate
from .rng import RngStream
from .verify import SUITES, run_suite

SCHEMA_VERSION = 1
ALGOS = ("masl", "br", "mxfp", "selfish", "raro")

DEFAULTS = {
    "generate": {"m": 5, "k": 5, "n": 30, "seed": 0, "out": None, "rayleigh": False},
    "run": {
        "algo": "masl",
        "scenario": None,
        "alpha": 0.1,
        "beta": 0.1,
        "delta": 1e-3,
        "max_iter": 10_000,
        "delay_mode": "conditional",
        "normalizer": "uniform-start",
        "seed": 0,
        "out": None,
    },
    "verify": {"suite": None, "trials": None, "seed": 0, "out": None},
    "sweep": {"spec": None, "out": None, "workers": None},
    "report": {"in": None, "noise_tolerance": 0.05},
}
REQUIRED = {"generate": ("out",), "run": ("scenario", "out"), "verify": ("suite",), "sweep": ("spec", "out"), "report": ("in",)}


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors (exit 1); 2 is reserved for failed verification
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="jcaco", description="Joint AP association and edge offloading games.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH", help="JSON file of option values (flags override it)")

    g = sub.add_parser("generate", help="draw a random scenario and save it as JSON")
    g.add_argument("--m", type=int, help="number of access points (default 5)")
    g.add_argument("--k", type=int, help="number of edge servers (default 5)")
    g.add_argument("--n", type=int, help="number of users (default 30)")
    g.add_argument("--seed", type=_u64, help="root seed (default 0)")
    g.add_argument("--rayleigh", action="store_const", const=True, help="enable Rayleigh fading in the scenario physics")
    g.add_argument("--out", metavar="PATH", help="output scenario file")
    common(g)

    r = sub.add_parser("run", help="run one algorithm on a scenario file")
    r.add_argument("--algo", choices=ALGOS, help="algorithm (default masl)")
    r.add_argument("--scenario", metavar="PATH", help="scenario JSON written by 'generate'")
    r.add_argument("--alpha", type=float, help="learning rate of the access automata (default 0.1)")
    r.add_argument("--beta", type=float, help="learning rate of the compute automata (default 0.1)")
    r.add_argument("--delta", type=float, help="convergence threshold on strategy changes (default 1e-3)")
    r.add_argument("--max-iter", type=int, dest="max_iter", help="iteration cap (default 10000)")
    r.add_argument("--delay-mode", choices=("conditional", "realized"), dest="delay_mode", help="delay observed by the learners (default conditional)")
    r.add_argument("--normalizer", choices=NORMALIZERS, help="reward scale (default uniform-start)")
    r.add_argument("--seed", type=_u64, help="root seed (default 0)")
    r.add_argument("--out", metavar="DIR", help="directory for trace.csv and summary.json")
    common(r)

    v = sub.add_parser("verify", help="brute-force verification suites")
    v.add_argument("--suite", choices=SUITES, help="which suite to run")
    v.add_argument("--trials", type=int, help="deviations per view / Monte-Carlo samples / instances")
    v.add_argument("--seed", type=_u64, help="root seed (default 0)")
    v.add_argument("--out", metavar="PATH", help="JSON report path (default verify-<suite>.json)")
    common(v)

    s = sub.add_parser("sweep", help="multi-seed parameter sweep")
    s.add_argument("--spec", metavar="PATH", help="sweep spec JSON")
    s.add_argument("--out", metavar="DIR", help="output directory")
    s.add_argument("--workers", type=int, help="worker processes (capped by JCACO_WORKERS)")
    common(s)

    rp = sub.add_parser("report", help="aggregate table and trend verdicts of a sweep directory")
    rp.add_argument("--in", dest="in", metavar="DIR", help="directory written by 'sweep'")
    rp.add_argument("--noise-tolerance", type=float, dest="noise_tolerance", help="relative slack of trend checks (default 0.05)")
    common(rp)
    return p


def effective_options(command: str, args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: expected a JSON object")
        for key, value in data.items():
            k = key.replace("-", "_")
            if k not in opts:
                raise ConfigurationError(f"unknown config key {key!r} for '{command}'")
            opts[k] = value
    for key in opts:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    for key in REQUIRED[command]:
        if opts.get(key) in (None, ""):
            raise ConfigurationError(f"missing required option --{key.replace('_', '-')}")
    return opts


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_generate(o: dict) -> int:
    physics = PhysicsConstants(rayleigh_enabled=bool(o["rayleigh"]))
    sc = generate_scenario(GenerationConfig(int(o["m"]), int(o["k"]), int(o["n"]), seed=int(o["seed"]), physics=physics))
    save_scenario(sc, o["out"])
    print(f"wrote {o['out']} (M={sc.num_aps}, K={sc.num_servers}, N={sc.num_ues})")
    return 0


def _fmt(x) -> str:
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def _trace_csv(objective, max_delta, delays) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = delays.shape[1]
    w.writerow(["iteration", "total_expected_time", "max_strategy_delta"] + [f"delay_ue{i}" for i in range(n)])
    for t in range(len(objective)):
        w.writerow([t, _fmt(objective[t]), _fmt(max_delta[t])] + [_fmt(d) for d in delays[t]])
    return buf.getvalue()


def _ne_block(scenario, channel, profile: StrategyProfile) -> dict:
    out = {}
    g = scenario.game
    for label, cond, tol_a, tol_c in (
        ("conditional", True, 1e-6, 1e-6),
        ("expected_load", False, g.comm_time_granularity, g.comp_time_granularity),
    ):
        view = GameView.stochastic(scenario, channel, "access", conditional=cond)
        out[label] = {
            "access": is_nash_equilibrium(view, profile, tol_a).to_dict(),
            "compute": is_nash_equilibrium(view.with_kind("compute"), profile, tol_c).to_dict(),
        }
    return out


def cmd_run(o: dict) -> int:
    sc = load_scenario(o["scenario"])
    report = validate(sc)
    if not report.ok:
        raise ConfigurationError(f"{o['scenario']}: invalid scenario: {'; '.join(report.messages())}")
    if sc.physics.rayleigh_enabled:
        channel = realize_channel(sc, rng=RngStream(int(o["seed"])).generator("channel"))
    else:
        channel = realize_channel(sc)
    algo = o["algo"]
    if algo not in ALGOS:
        raise ConfigurationError(f"algo: unknown algorithm {algo!r}")
    summary = {"schema_version": SCHEMA_VERSION, "algorithm": algo, "config": o}
    if algo == "masl":
        try:
            cfg = MaslConfig(
                alpha=float(o["alpha"]),
                beta=float(o["beta"]),
                delta=float(o["delta"]),
                max_iter=int(o["max_iter"]),
                delay_mode=o["delay_mode"],
                seed=int(o["seed"]),
                normalizer=o["normalizer"],
            )
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        res = run_jcaco(sc, cfg, channel)
        tr = res.joint_trace()
        trace = _trace_csv(tr.objective, tr.max_delta, tr.delays)
        profile = res.profile
        summary.update(
            converged=res.converged,
            iterations=res.iterations,
            access={"converged": res.access.converged, "iterations": res.access.iterations},
            compute={"converged": res.compute.converged, "iterations": res.compute.iterations},
        )
    else:
        if algo == "br":
            out = run_best_response(sc, GameView.stochastic(sc, channel, "total", conditional=False))
        elif algo == "mxfp":
            out = run_mxfp(sc, BaselineConfig("mxFP"), channel)
        elif algo == "selfish":
            out = run_selfish(sc)
        else:
            out = run_raro(sc, RngStream(int(o["seed"])).generator("raro"))
        profile = out.profile
        acc, comp = conditional_delays(sc, profile, channel)
        obj = total_service_time(sc, profile, channel).objective
        trace = _trace_csv([obj], [0.0], (acc + comp)[None, :])
        summary.update(converged=out.converged, iterations=out.rounds)
    summary["objective_s"] = total_service_time(sc, profile, channel).objective
    summary["profile"] = profile.to_dict()
    summary["ne"] = _ne_block(sc, channel, profile)
    out_dir = Path(o["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "trace.csv", trace)
    atomic_write_json(out_dir / "summary.json", summary)
    print(f"{algo}: objective {summary['objective_s']:.6g} s, converged={summary['converged']}, iterations={summary['iterations']}")
    return 0


def cmd_verify(o: dict) -> int:
    trials = None if o["trials"] is None else int(o["trials"])
    if trials is not None and trials < 1:
        raise ConfigurationError("trials must be >= 1")
    rep = run_suite(o["suite"], trials, int(o["seed"]))
    out = Path(o["out"] or f"verify-{o['suite']}.json")
    atomic_write_json(out, {"schema_version": SCHEMA_VERSION, "config": o, **rep.to_dict()})
    print(f"{rep.suite}: {'ok' if rep.ok else 'FAILED'} ({len(rep.failures)} violations); report {out}")
    return 0 if rep.ok else 2


def cmd_sweep(o: dict) -> int:
    spec = SweepSpec.load(o["spec"])
    res = run_sweep(spec, o["out"], None if o["workers"] is None else int(o["workers"]))
    print(f"{len(res.rows)} runs ({len(res.failures)} failed) written to {o['out']}")
    return 0


def cmd_report(o: dict) -> int:
    in_dir = Path(o["in"])
    rows = read_rows(in_dir / "runs.csv")
    if not rows:
        raise ConfigurationError(f"{in_dir / 'runs.csv'}: no runs")
    agg = aggregate(rows)
    print(f"swept parameter: {agg.swept_param}")
    print(f"{'algorithm':<9} {'value':>12} {'seeds':>5} {'conv':>4} {'mean_s':>12} {'std_s':>10} {'iters':>9}")
    for r in agg.rows:
        mean = "-" if r.mean_objective_s is None else f"{r.mean_objective_s:.4f}"
        std = "-" if r.std_objective_s is None else f"{r.std_objective_s:.4f}"
        it = "-" if r.mean_iterations is None else f"{r.mean_iterations:.1f}"
        print(f"{r.algorithm:<9} {r.swept_value:>12g} {r.seeds:>5} {r.converged:>4} {mean:>12} {std:>10} {it:>9}")
    expectation = EXPECTED_TRENDS.get(agg.swept_param)
    if expectation:
        for alg in sorted({r.algorithm for r in agg.rows}):
            try:
                verdict = trend_check(agg, expectation, float(o["noise_tolerance"]), alg)
                print(f"trend {alg}: {verdict.describe()}")
            except ValueError as exc:
                print(f"trend {alg}: skipped ({exc})")
    return 0


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = effective_options(args.command, args)
        return COMMANDS[args.command](opts)
    except (JcacoError, FileNotFoundError, ValueError) as exc:
        print(f"jcaco: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
