import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from cli import (
    RunConfig,
    cmd_compare,
    cmd_fetch,
    cmd_fit_joint,
    cmd_fit_twostep,
    cmd_gen_synthetic,
    cmd_irf,
    cmd_simulate_lorenz,
)
from utils import resolve_level, setup_logging
from utils.errors import DataIOError, NumericalError, ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Run configuration JSON")
    common.add_argument("--seed", type=int, help="Random seed (overrides the config)")
    common.add_argument("--out", type=Path, help="Output directory (overrides the config)")
    common.add_argument("--threads", type=int, help="Worker threads for independent chains")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR (default: $INEQVAR_LOG_LEVEL or INFO)")
    common.add_argument("--log-file", help="Also write logs to this file")
    common.add_argument("--svg", action="store_true", help="Emit static SVG charts of the bands")

    parser = argparse.ArgumentParser(
        prog="ineqvar",
        description="Joint Bayesian estimation of income inequality and a monetary VAR from grouped data",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("fit-joint", parents=[common], help="Run the joint MCMC sampler and write draws")
    commands.add_parser("fit-twostep", parents=[common], help="Plug-in estimate: static fit, then the VAR")

    irf = commands.add_parser("irf", parents=[common], help="Impulse responses with credible bands")
    irf.add_argument("--draws", type=Path, required=True, help="Directory written by fit-joint or fit-twostep")
    irf.add_argument("--shutdown", nargs="+", default=[], metavar="NAME", help="Variables whose channel is switched off")

    commands.add_parser("compare", parents=[common], help="Joint versus two-step responses of inequality")

    lorenz = commands.add_parser("simulate-lorenz", parents=[common], help="Grouped versus true Gini simulation")
    lorenz.add_argument("--mu", type=float, default=0.0)
    lorenz.add_argument("--sigma", type=float, default=1.0)
    lorenz.add_argument("--n-obs", type=int, default=100_000)
    lorenz.add_argument("--n-groups", type=int, default=5)

    synthetic = commands.add_parser("gen-synthetic", parents=[common], help="Simulate a dataset from a truth file")
    synthetic.add_argument("--truth", type=Path, required=True, help="Synthetic truth JSON")

    fetch = commands.add_parser("fetch", parents=[common], help="Download series into the cache")
    fetch.add_argument("source_ids", nargs="+", help="Remote series identifiers")
    fetch.add_argument("--start", help="First observation date (YYYY-MM-DD)")
    fetch.add_argument("--end", help="Last observation date (YYYY-MM-DD)")
    fetch.add_argument("--base-url", help="Alternative CSV endpoint")
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    overrides = {"seed": args.seed, "output_dir": args.out, "threads": args.threads}
    config = RunConfig.load(args.config, overrides)
    logger.info(f"Configuration loaded: {config}")
    return config


def _require_out(args: argparse.Namespace) -> Path:
    if args.out is None:
        raise ValidationError(f"{args.command} needs --out")
    return args.out


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "fit-joint":
        return cmd_fit_joint(_load_config(args), svg=args.svg)
    if args.command == "fit-twostep":
        return cmd_fit_twostep(_load_config(args), svg=args.svg)
    if args.command == "irf":
        return cmd_irf(_load_config(args), args.draws, args.shutdown, svg=args.svg)
    if args.command == "compare":
        return cmd_compare(_load_config(args), svg=args.svg)
    if args.command == "simulate-lorenz":
        return cmd_simulate_lorenz(
            _require_out(args),
            seed=0 if args.seed is None else args.seed,
            mu=args.mu,
            sigma=args.sigma,
            n_obs=args.n_obs,
            n_groups=args.n_groups,
        )
    if args.command == "gen-synthetic":
        return cmd_gen_synthetic(args.truth, _require_out(args), seed=args.seed)
    if args.command == "fetch":
        # The seed only labels the manifest here.
        seed = args.seed if args.seed is not None or args.config else 0
        config = RunConfig.load(args.config, {"seed": seed, "output_dir": args.out})
        kwargs = {"base_url": args.base_url} if args.base_url else {}
        return cmd_fetch(
            args.source_ids, config.output_dir, config.cache_dir, args.start, args.end, seed=config.seed, **kwargs
        )
    raise ValidationError(f"unknown command {args.command}")


def run(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        setup_logging(resolve_level(args.log_level), args.log_file)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"error: cannot open log file: {e}", file=sys.stderr)
        return EXIT_IO

    try:
        return dispatch(args)
    except ValidationError as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_VALIDATION
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except DataIOError as e:
        logger.error(f"I/O failure: {e}")
        return EXIT_IO
    except KeyboardInterrupt:
        logger.info("Program terminated by user.")
        return EXIT_UNEXPECTED
    except Exception as e:
        logger.error(f"Unexpected error in '{args.command}': {e}", exc_info=True)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(run())
