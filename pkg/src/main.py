import argparse
import logging
import sys
from typing import List, Optional

from src.config.config import Config, RunConfig, configure_logging, example_run_config, load_run_config
from src.errors import ConfigError, SimulationError
from src.handlers.command_handlers import CommandHandlers
from src.services.sweep_service import RunOptions, parse_sweep_values
from src.telegraph import DEFAULT_HI, DEFAULT_LO

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_COMPUTATION_ERROR = 1
EXIT_CONFIG_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='telegraph-dynamics',
        description='Exact diagonalization and time evolution of a two-sided system coupled to a discretized continuum',
    )
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument('--config', help='run configuration file (key = value)')
    source.add_argument('--example', type=int, choices=(1, 2, 3), help='built-in parameter preset')
    common.add_argument('--out', help='output directory (default: OUTPUT_DIR)')
    common.add_argument('--threads', type=int, help='worker threads for sweeps (default: THREADS)')
    common.add_argument('--no-environment', action='store_true',
                        help='count only remote and gateway states in the side occupations')
    common.add_argument('--degenerate', action='store_true', help='place every continuum level on the band center')
    common.add_argument('--dump-blocks', action='store_true', help='write the symmetry blocks as CSV')
    common.add_argument('--hi', type=float, default=DEFAULT_HI, help='upper switch threshold')
    common.add_argument('--lo', type=float, default=DEFAULT_LO, help='lower switch threshold')
    common.add_argument('--verbose', action='store_true', help='debug logging')

    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('simulate', parents=[common], help='evolve g_alpha and detect side switches')
    sub.add_parser('spectrum', parents=[common], help='spectral distribution and Lorentzian fit')
    sub.add_parser('verify', parents=[common], help='perturbative estimates against exact diagonalization')
    sweep = sub.add_parser('sweep', parents=[common], help='classify a parameter grid')
    sweep.add_argument('--sweep-key', action='append', default=[], help='parameter to sweep (V, dV or W)')
    sweep.add_argument('--sweep-values', action='append', default=[], help='comma-separated values for the key')
    return parser


def resolve_config(args) -> RunConfig:
    """Run configuration from a file, a preset or the defaults"""
    if args.config:
        config = load_run_config(args.config)
    else:
        config = example_run_config(args.example or 2)
    if args.degenerate:
        config = config.with_params(degenerate_continuum=True)
    if not 0 < args.lo < args.hi < 1:
        raise ConfigError(f"Thresholds must satisfy 0 < lo < hi < 1, got lo={args.lo}, hi={args.hi}")
    return config


def run_command(args) -> None:
    config = resolve_config(args)
    options = RunOptions(include_environment=not args.no_environment, hi=args.hi, lo=args.lo)
    handlers = CommandHandlers(args.out or Config.OUTPUT_DIR, options, dump=args.dump_blocks)

    if args.command == 'simulate':
        handlers.cmd_simulate(config)
    elif args.command == 'spectrum':
        handlers.cmd_spectrum(config)
    elif args.command == 'verify':
        handlers.cmd_verify(config)
    elif args.command == 'sweep':
        if not args.sweep_key or len(args.sweep_key) != len(args.sweep_values):
            raise ConfigError("Each --sweep-key needs exactly one --sweep-values")
        try:
            axes = [(key, parse_sweep_values(raw)) for key, raw in zip(args.sweep_key, args.sweep_values)]
        except SimulationError as e:
            raise ConfigError(str(e)) from e
        threads = args.threads or Config.THREADS
        if threads < 1:
            raise ConfigError(f"--threads must be at least 1, got {threads}")
        handlers.cmd_sweep(config, axes, threads)


def main(argv: Optional[List[str]] = None) -> int:
    """Command-line entry point; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG_ERROR if e.code else EXIT_OK

    try:
        Config.validate()
        configure_logging(args.verbose)
        logger.info(f"Running {args.command}")
        run_command(args)
        return EXIT_OK
    except ConfigError as e:
        logger.error(f"Configuration error: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except SimulationError as e:
        logger.error(f"Computation failed: {str(e)}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_COMPUTATION_ERROR
