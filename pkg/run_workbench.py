"""
Command-line entry point for the ergodic workbench.

Subcommands run single stages (metrics, independence, conjugate, towers) or
the full pipeline (run). The exit status is 0 iff every verdict passes.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from src.core.config_manager import ConfigManager, ExperimentConfig
from src.core.experiment_runner import run_experiment
from src.core.report_writer import emit_reports
from src.utils.exceptions import ConfigurationError, WorkbenchException

DEFAULT_CONFIG = "config/demo_config.json"
DEFAULT_SCHEMA = "config/config_schema.json"
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="run_workbench",
        description="Exact desk-scale experiments on conjugacy, independence and Rokhlin towers.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=DEFAULT_CONFIG, help="experiment config JSON (default: %(default)s)")
    common.add_argument("--schema", default=DEFAULT_SCHEMA, help="JSON schema checked before loading")
    common.add_argument("--output-dir", help="report directory; overrides config and WORKBENCH_OUTPUT_DIR")
    common.add_argument("--seed", type=int, help="64-bit seed for every random stream")
    common.add_argument("--resolution-log2", type=int, help="grid size N = 2^value")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                        help="override the configured log level")

    pipeline = argparse.ArgumentParser(add_help=False)
    pipeline.add_argument("--epsilon", help="neighborhood radius as 'p/q'")
    pipeline.add_argument("--k", type=int, help="lowest rank of the atom neighborhood")
    pipeline.add_argument("--trials", type=int, help="random trials for the half-measure search")

    powers = argparse.ArgumentParser(add_help=False)
    powers.add_argument("--window", type=int, help="window W truncating powers to |n| <= W")
    powers.add_argument("--independence-window", type=int, help="window M of the image family (>= rank + W)")

    subparsers = parser.add_subparsers(dest="command", required=True)
    metrics = subparsers.add_parser("metrics", parents=[common],
                                    help="d, a and tau_W between two maps (default: S and a perturbation)")
    metrics.add_argument("--window", type=int, help="window W for tau")
    metrics.add_argument("--maps", nargs=2, metavar=("FIRST", "SECOND"),
                         help="two serialized GridMap JSON files")
    metrics.add_argument("--basis", help="serialized Basis JSON file (default: dyadic intervals)")

    independence = subparsers.add_parser("independence", parents=[common, pipeline],
                                         help="half-measure independence search and lemma audit")
    independence.add_argument("--window", type=int, help="window M of the image family")
    independence.add_argument("--delta", help="target deviation as 'p/q' (default: the ledger's target)")

    subparsers.add_parser("conjugate", parents=[common, pipeline, powers],
                          help="build V = Q^-1 S Q and certify it against the Bernoulli shift")

    towers = subparsers.add_parser("towers", parents=[common], help="towers, R(j,k) and the openness certificate")
    towers.add_argument("--height", type=int, help="tower height n")
    towers.add_argument("--k", type=int, help="accuracy threshold 1/k")
    towers.add_argument("--sets", help="JSON file with a list of level index lists")
    towers.add_argument("--perturb", type=int, help="seed for the transposition perturbations")
    towers.add_argument("--perturbations", type=int, help="number of perturbations to certify")

    subparsers.add_parser("run", parents=[common, pipeline, powers],
                          help="metrics, conjugate and towers in one record")
    return parser


def _load_level_sets(path: Optional[str]) -> Optional[List[List[int]]]:
    if path is None:
        return None
    try:
        with open(path, "r") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read sets file {path}: {e}")


def apply_arguments(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    """Fold command-line flags into the loaded config."""
    overrides: Dict[str, Any] = {
        "seed": args.seed,
        "resolution_log2": args.resolution_log2,
        "trials": getattr(args, "trials", None),
        "independence_window": getattr(args, "independence_window", None),
        "epsilon": getattr(args, "epsilon", None),
    }
    if args.command == "independence":
        overrides["independence"] = {"window": args.window, "delta": args.delta}
    else:
        overrides["window"] = getattr(args, "window", None)
    if args.command == "metrics":
        overrides["metrics"] = {"maps": args.maps, "basis": args.basis}
    if args.command == "towers":
        overrides["towers"] = {
            "height": args.height,
            "k": args.k,
            "level_sets": _load_level_sets(args.sets),
            "seed": args.perturb,
            "perturbations": args.perturbations,
        }
    else:
        overrides["k"] = getattr(args, "k", None)
    if args.log_level:
        overrides["logging"] = {"level": args.log_level}
    updated = config.with_overrides(overrides)
    if args.output_dir:
        updated.output.directory = args.output_dir
    return updated


def setup_logging(settings: Dict[str, Any]) -> None:
    """Configure the root logger from the config's logging section."""
    root = logging.getLogger()
    for handler in root.handlers[:]:
        root.removeHandler(handler)
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    file_path = settings.get("file_path")
    if file_path:
        Path(file_path).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(file_path))
    logging.basicConfig(level=settings.get("level", "INFO"), format=LOG_FORMAT, handlers=handlers)


STAGES_BY_COMMAND = {
    "metrics": ["metrics"],
    "independence": ["independence"],
    "conjugate": ["conjugate"],
    "towers": ["towers"],
    "run": None,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit status."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        manager = ConfigManager(args.config, args.schema)
        config = apply_arguments(manager.load_config(), args)
    except ConfigurationError as e:
        print(e.message, file=sys.stderr)
        return 2

    setup_logging(config.logging)
    try:
        record = run_experiment(config, STAGES_BY_COMMAND[args.command])
        emit_reports(record, config.output.formats, config.output.directory)
    except ConfigurationError as e:
        logger.error(f"Workbench input rejected: {e.message}")
        return 2
    except WorkbenchException as e:
        logger.error(f"Workbench run failed: {e.message}")
        return 1

    for name, passed in sorted(record.verdicts.items()):
        logger.info(f"{name}: {'pass' if passed else 'FAIL'}")
    return 0 if record.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
