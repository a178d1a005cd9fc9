"""Command-line interface: ``walknav {classify,simulate,predict,experiment,check}``.

Exit codes: 0 when every tolerance check passed, 1 when any failed, 2 on
configuration or input errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checks import CHECKS, run_checks
from .experiments import (DEFAULTS, SCENARIOS, ConfigError, ExperimentConfig, evaluate,
                          generate_topology, run_experiment)
from .graph import GraphError, classify_edges, load_graph, shortest_path_count
from .meanfield import UnsupportedModeError
from .rewards import RewardModel
from .walk import log_checkpoints, simulate_ensemble, write_trajectory_csv

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def _add_graph_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", type=Path, help="graph JSON file")
    src.add_argument("--scenario", choices=[s for s in SCENARIOS if s != "custom"])
    p.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE",
                   help="scenario parameter, e.g. --param l4=18")


def _add_reward(p):
    p.add_argument("--reward", choices=["power_law", "inverse_linear", "constant"])
    p.add_argument("--phi", type=float, help="exponent of the power-law reward")
    p.add_argument("--value", type=float, help="value of the constant reward")
    p.add_argument("--mode", choices=["single", "multiple"])


def _add_run(p):
    p.add_argument("--n-walks", type=int)
    p.add_argument("--runs", type=int, help="ensemble size")
    p.add_argument("--checkpoints", type=int, help="number of log-spaced checkpoints")
    p.add_argument("--jobs", type=int, help="worker processes for the ensemble")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="walknav", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="decision points and edge roles of a graph")
    _add_graph_source(p)

    p = sub.add_parser("simulate", help="run an ensemble and write the trajectory CSV")
    _add_graph_source(p)
    _add_reward(p)
    _add_run(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=Path, default=Path("trajectory.csv"))

    for name, helptext in (("experiment", "simulate, predict and check a scenario"),
                           ("predict", "analytical predictions only")):
        p = sub.add_parser(name, help=helptext)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", type=Path, help="experiment config (JSON)")
        src.add_argument("--scenario", choices=SCENARIOS)
        p.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE")
        _add_reward(p)
        _add_run(p)
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=int, required=name == "experiment")

    p = sub.add_parser("evaluate", help="recompute verdicts from a stored output directory")
    p.add_argument("directory", type=Path)

    p = sub.add_parser("check", help="numeric sweeps of the survival inequalities")
    p.add_argument("--which", choices=["all", *CHECKS], default="all")
    p.add_argument("--seed", type=int, default=0)
    return ap


def _reward_from_args(args, base: dict | None = None) -> dict:
    r = dict(base or {"kind": "inverse_linear", "mode": "multiple"})
    if args.reward or args.phi is not None:
        r = {"kind": args.reward or "power_law", "mode": r.get("mode", "multiple")}
    if args.phi is not None:
        r["phi"] = args.phi
    if args.value is not None:
        r["value"] = args.value
    if args.mode:
        r["mode"] = args.mode
    return r


def _graph(args):
    if args.graph is not None:
        return load_graph(args.graph)
    return generate_topology(args.scenario, {**DEFAULTS[args.scenario]["params"], **dict(args.param)})


def cmd_classify(args) -> int:
    g = _graph(args)
    c = classify_edges(g)
    report = c.summary()
    report["shortest_path_count"] = shortest_path_count(g)
    print(json.dumps(report, indent=2, sort_keys=True, default=str))
    return EXIT_OK


def cmd_simulate(args) -> int:
    g = _graph(args)
    m = RewardModel.from_dict(_reward_from_args(args))
    n_walks = args.n_walks or 10_000
    cp = log_checkpoints(n_walks, args.checkpoints or 30)
    traj = simulate_ensemble(g, None, m, None, n_walks, cp, args.runs or 10, args.seed,
                             n_jobs=args.jobs or 1)
    write_trajectory_csv(traj, args.out, method="simulation")
    print(f"wrote {args.out}: {traj.run_count} runs x {n_walks} walks, "
          f"final shortest-path fraction {traj.shortest_path_fraction[-1]:.4f}, "
          f"capped walks {traj.capped_walks}")
    return EXIT_OK


def _config_from_args(args, methods) -> ExperimentConfig:
    if args.config is not None:
        cfg = ExperimentConfig.load(args.config)
        cfg.params.update(dict(args.param))
    else:
        cfg = ExperimentConfig.for_scenario(args.scenario, params=dict(args.param))
    cfg.reward = _reward_from_args(args, cfg.reward)
    for attr, val in (("n_walks", args.n_walks), ("run_count", args.runs), ("n_jobs", args.jobs),
                      ("checkpoints", args.checkpoints), ("master_seed", args.seed)):
        if val is not None:
            setattr(cfg, attr, val)
    if args.out is not None:
        cfg.output_dir = str(args.out)
    cfg.methods = methods
    cfg.validate()
    return cfg


def _report(summary: dict) -> int:
    for ch in summary["checks"]:
        print(f"{'PASS' if ch['passed'] else 'FAIL'} {ch['name']}: value={ch['value']} "
              f"target={ch['target']} tolerance={ch['tolerance']}")
    for fit in summary["fits"]:
        print(f"fit {fit['entity']}: slope {fit['fitted']:.4f} +/- {fit['stderr']:.4f}, "
              f"predicted {fit['predicted']}")
    return EXIT_OK if summary["passed"] else EXIT_FAIL


def cmd_experiment(args) -> int:
    cfg = _config_from_args(args, ["simulation", "analytic"])
    res = run_experiment(cfg)
    print(f"outputs in {res.output_dir}")
    return _report(res.summary)


def cmd_predict(args) -> int:
    cfg = _config_from_args(args, ["analytic"])
    res = run_experiment(cfg)
    meta = res.summary["meta"]
    shown = {k: v for k, v in meta.items() if k.startswith(("predicted", "first_order", "n_star"))}
    if shown:
        print(json.dumps(shown, indent=2, sort_keys=True))
    print(f"outputs in {res.output_dir}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    return _report(evaluate(args.directory))


def cmd_check(args) -> int:
    results = run_checks(args.which, seed=args.seed)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


COMMANDS = {"classify": cmd_classify, "simulate": cmd_simulate, "experiment": cmd_experiment,
            "predict": cmd_predict, "evaluate": cmd_evaluate, "check": cmd_check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, GraphError, UnsupportedModeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
