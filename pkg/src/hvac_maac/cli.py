"""Command-line front-end: ``synth``, ``train``, ``eval``, ``compare`` and ``sweep``."""

import argparse
import logging
import sys
from typing import List, Optional

from .building import EnvError
from .config import Config, ConfigError, parse_int_list
from .experiments import ExperimentConfig, ExperimentPipeline
from .maac import MAACError
from .networks import CheckpointError, NNError
from .traces import TraceError

logger = logging.getLogger(__name__)

COMMANDS = ("synth", "train", "eval", "compare", "sweep")


def error_category(error: BaseException) -> str:
    """Map an exception to its ``Config.EXIT_CODES`` family."""
    if isinstance(error, ConfigError):
        return "config"
    if isinstance(error, TraceError):
        return "trace"
    if isinstance(error, EnvError):
        return "env"
    if isinstance(error, CheckpointError):
        return "checkpoint"
    if isinstance(error, (MAACError, NNError)):
        return "learning"
    return "other"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hvac-maac",
        description="Multi-zone HVAC control with attention critics: traces, training, evaluation and sweeps.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", required=True, help="key/value parameter file")
        sub.add_argument("--seed", action="append", default=None,
                         help="seed (repeatable or comma-separated); overrides experiment.seeds")
        sub.add_argument("--out", default=None, help="output directory; overrides experiment.out")
        sub.add_argument("--quiet", action="store_true", help="suppress progress lines")
        if name in ("eval", "compare"):
            sub.add_argument("--checkpoint", default=None,
                             help="checkpoint file (default: <out>/train/seed_<s>/checkpoint.bin)")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config)
    if args.seed:
        seeds = []
        for item in args.seed:
            seeds.extend(parse_int_list(item))
        config = config.with_seeds(seeds)
    if args.out:
        config = config.with_out_dir(args.out)
    return config


def run(args: argparse.Namespace) -> None:
    config = load_config(args)
    pipeline = ExperimentPipeline(config, show_progress=not args.quiet)
    if args.command == "synth":
        pipeline.cmd_synth()
    elif args.command == "train":
        pipeline.cmd_train()
    elif args.command == "eval":
        pipeline.cmd_eval(checkpoint=args.checkpoint)
    elif args.command == "compare":
        checkpoints = {seed: args.checkpoint for seed in config.seeds} if args.checkpoint else None
        pipeline.cmd_compare(checkpoints)
    else:
        pipeline.cmd_sweep()


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=Config.LOG_LEVEL, format=Config.LOG_FORMAT)
    args = build_parser().parse_args(argv)
    try:
        run(args)
    except Exception as e:
        category = error_category(e)
        logger.debug("command failed", exc_info=True)
        print(f"{Config.get_emoji('cross')} error [{category}]: {e}", file=sys.stderr)
        return Config.EXIT_CODES[category]
    return Config.EXIT_CODES["ok"]


if __name__ == "__main__":
    sys.exit(main())
