import argparse
import logging
from typing import Any, Dict, List, Optional

from dss.cli.commands import COMMAND_HANDLERS, EXIT_CONFIG
from dss.cli.run_config import load_run_config, parse_overrides
from dss.errors import ConfigError
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="cli/main.log",
)

# argparse destination -> dotted run-config key
_FLAG_KEYS = {
    "scenario": "scenario",
    "action_count": "action_count",
    "seed": "seed",
    "out": "out_dir",
    "overwrite": "overwrite",
    "iterations": "train.iterations",
    "workers": "train.num_workers",
    "record_wall_time": "record_wall_time",
    "no_randomize": "randomize",
    "checkpoint": "checkpoint",
    "seeds": "seeds",
    "agents": "agents",
    "experimental_search": "experimental_search",
    "horizon": "oracle_horizon",
    "node_budget": "node_budget",
    "run_dirs": "run_dirs",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dss",
        description="LTE/NR dynamic spectrum sharing: train, evaluate and plan bandwidth splits.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", type=str, default=None, help="YAML run config")
    common.add_argument("-s", "--scenario", type=str, default=None, help="Scenario id or YAML file")
    common.add_argument("-n", "--action-count", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("-o", "--out", type=str, default=None, help="Run directory")
    common.add_argument("--overwrite", action="store_const", const=True, default=None)
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override any dotted config key, e.g. train.batch_size=16",
    )

    subparsers = parser.add_subparsers(dest="command", required=True)

    train = subparsers.add_parser("train", parents=[common], help="Train the learned model")
    train.add_argument("-i", "--iterations", type=int, default=None)
    train.add_argument("-w", "--workers", type=int, default=None)
    train.add_argument("--record-wall-time", action="store_const", const=True, default=None)
    train.add_argument(
        "--no-randomize",
        action="store_const",
        const=False,
        default=None,
        help="Train on the pinned scenario only",
    )

    evaluate = subparsers.add_parser("eval", parents=[common], help="Compare a checkpoint with the baselines")
    evaluate.add_argument("-k", "--checkpoint", type=str, default=None)
    evaluate.add_argument("--seeds", type=int, nargs="+", default=None)
    evaluate.add_argument("-a", "--agents", type=str, nargs="+", default=None)
    evaluate.add_argument("--experimental-search", action="store_const", const=True, default=None)

    oracle = subparsers.add_parser("oracle", parents=[common], help="Exact best action sequence")
    oracle.add_argument("--horizon", type=int, default=None)
    oracle.add_argument("--node-budget", type=int, default=None)

    export = subparsers.add_parser(
        "export-plot-data", parents=[common], help="Tidy per-scenario score series"
    )
    export.add_argument("run_dirs", nargs="+")
    return parser


def cli_values(args: argparse.Namespace) -> Dict[str, Any]:
    values: Dict[str, Any] = {"command": args.command}
    for dest, key in _FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            values[key] = value
    values.update(parse_overrides(args.overrides))
    return values


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_run_config(args.config, cli_values(args))
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    logger.info(f"Running {config.command} on scenario {config.scenario} with seed {config.seed}")
    return COMMAND_HANDLERS[config.command](config)


if __name__ == "__main__":
    raise SystemExit(main())
