"""Command-line experiment runner.

Flags override the matching keys of ``--config``; without a config file the
flags alone describe the experiment.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .experiment import dump_config, parse_config, run_experiment, spec_from_dict, spec_to_dict
from .games import GameError
from .solvers import ALGORITHMS, AVERAGING, VALUE_SOURCES


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def _param(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), yaml.safe_load(value)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="escherlab", description="Run tabular equilibrium-solver experiments.")
    p.add_argument("--config", type=Path, help="YAML experiment config")
    p.add_argument("--game", action="append", help="game name (repeatable)")
    p.add_argument("--game-param", action="append", type=_param, default=[], metavar="KEY=VALUE",
                   help="parameter for every --game (repeatable)")
    p.add_argument("--algo", action="append", help=f"algorithm, repeatable or comma-separated: {', '.join(ALGORITHMS)}")
    p.add_argument("--iterations", type=int)
    p.add_argument("--seed", "--seeds", dest="seeds", type=_int_list, help="one seed or a comma-separated list")
    p.add_argument("--eval-every", type=int)
    p.add_argument("--variance-window", type=int)
    p.add_argument("--trajectories-per-update", type=int)
    p.add_argument("--os-eps", type=float, help="exploration of the OS-MCCFR update player")
    p.add_argument("--oracle-noise", type=float, help="noise bound of the value oracle")
    p.add_argument("--noise-redraw", choices=("iteration", "run"))
    p.add_argument("--use-bootstrap-baseline", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--use-reach-weighting", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--value-source", choices=VALUE_SOURCES)
    p.add_argument("--rollouts", type=int, help="rollouts per learned-value refresh")
    p.add_argument("--exploration-mix", type=float, help="uniform mix of learned-value rollouts")
    p.add_argument("--averaging", choices=AVERAGING)
    p.add_argument("--log-rate", type=float, help="fraction of estimate vectors kept in the log")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="parallel runs")
    p.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    return p


def config_from_args(args: argparse.Namespace) -> dict:
    """Merge a config file (if any) with command-line overrides into a raw dict."""
    data: dict = {}
    if args.config is not None:
        try:
            data = spec_to_dict(parse_config(args.config.read_text()))
        except OSError as e:
            raise GameError(f"--config: cannot read {args.config}: {e}") from None
    if args.game:
        data["games"] = [{"name": g, "params": dict(args.game_param)} for g in args.game]
    elif args.game_param:
        for g in data.get("games", []):
            g["params"] = {**g.get("params", {}), **dict(args.game_param)}
    overrides = {
        "iterations": args.iterations, "trajectories_per_update": args.trajectories_per_update,
        "os_exploration_eps": args.os_eps, "oracle_noise": args.oracle_noise, "noise_redraw": args.noise_redraw,
        "use_bootstrap_baseline": args.use_bootstrap_baseline, "use_reach_weighting": args.use_reach_weighting,
        "value_source": args.value_source, "averaging": args.averaging,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.rollouts is not None or args.exploration_mix is not None:
        learned = {}
        if args.rollouts is not None:
            learned["rollouts"] = args.rollouts
        if args.exploration_mix is not None:
            learned["exploration_mix"] = args.exploration_mix
        overrides["learned_value"] = learned
    if args.algo:
        algos = [a.strip() for entry in args.algo for a in entry.split(",") if a.strip()]
        data["runs"] = [{"name": a, "algorithm": a} for a in algos]
    runs = data.get("runs")
    if runs:
        for r in runs:
            r.update(overrides)
    else:
        data.update(overrides)
    top = {"seeds": args.seeds, "eval_every": args.eval_every, "variance_window": args.variance_window,
           "out": args.out, "workers": args.workers, "log_rate": args.log_rate}
    data.update({k: v for k, v in top.items() if v is not None})
    return data


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None and not args.game:
        parser.error("give --config or --game")
    try:
        spec = spec_from_dict(config_from_args(args))
    except (GameError, ValueError) as e:
        print(f"escherlab: error: {e}", file=sys.stderr)
        return 2
    if args.print_config:
        sys.stdout.write(dump_config(spec))
        return 0
    result = run_experiment(spec)
    sys.stdout.write(result.summary)
    for row in result.rows:
        if row["status"] != "ok":
            print(f"run {row['run']}/{row['game']}/seed {row['seed']} failed: {row['error']}", file=sys.stderr)
    print(f"outputs written to {spec.out}", file=sys.stderr)
    return result.exit_status


if __name__ == "__main__":
    sys.exit(main())
