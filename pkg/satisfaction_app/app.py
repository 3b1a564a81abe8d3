# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Command-line entry point for the satisfaction pipeline
"""
Command-line entry point.

    python -m satisfaction_app.app run --variant col5_full --seed 7 --out output

Exit codes: 0 ok, 2 config error, 3 data error, 4 non-convergence.
"""
import argparse
import sys
from typing import Dict, List, Optional

from satisfaction_app.config import VARIANTS, load_config
from satisfaction_app.errors import SatisfactionError, StageError
from satisfaction_app.pipeline import run_pipeline
from satisfaction_app.utils.logger import get_logger

logger = get_logger(__name__)

COMMANDS = ("generate", "ingest", "features", "smote", "fit", "attribute", "simulate", "smote-study", "report", "run")

COMMAND_HELP = {
    "generate": "write a synthetic dataset",
    "ingest": "load and join the input tables, apply the sample filters",
    "features": "build the feature frame and design matrix",
    "smote": "oversample business travelers",
    "fit": "select controls and fit the ordered probit",
    "attribute": "fit the delay stage and split delays by origin",
    "simulate": "rating shift and delay-duration curves",
    "smote-study": "delay coefficient across oversampling shares",
    "report": "descriptive, fit and study tables",
    "run": "every stage",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="satisfaction_app", description="Passenger satisfaction pipeline")
    commands = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = commands.add_parser(name, help=COMMAND_HELP[name])
        sub.add_argument("--config", metavar="PATH", help="key=value settings file")
        sub.add_argument("--variant", choices=VARIANTS, help="named model column preset")
        sub.add_argument("--seed", type=int, help="seed for every random stream")
        sub.add_argument("--out", metavar="DIR", help="output directory")
        sub.add_argument("--threads", type=int, metavar="N", help="worker processes")
        sub.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                         help="override one setting, may repeat")
    return parser


def flag_settings(args: argparse.Namespace) -> Dict[str, str]:
    flags: Dict[str, str] = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            flags[item.strip()] = ""
        else:
            flags[key.strip()] = value.strip()
    if args.seed is not None:
        flags["seed"] = str(args.seed)
    if args.out is not None:
        flags["out_dir"] = args.out
    if args.threads is not None:
        flags["threads"] = str(args.threads)
    return flags


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, variant=args.variant, flags=flag_settings(args))
        artifacts = run_pipeline(config, args.command)
    except StageError as exc:
        logger.error(f"{args.command} halted in stage '{exc.stage}': {exc.cause}")
        return exc.exit_code
    except SatisfactionError as exc:
        logger.error(f"{args.command} failed: {exc}")
        return exc.exit_code
    logger.info(f"{args.command}: {len(artifacts)} artifacts written")
    return 0


if __name__ == "__main__":
    sys.exit(main())
