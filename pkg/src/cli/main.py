"""Command-line entry point: ``qeilab <analysis> --config PATH [--seed N] [--out DIR] [--plots]``."""

import sys
import logging
import argparse
from pathlib import Path
from typing import List, Optional

from src.config import Analysis, ConfigFactory, OutputConfig, RunConfig
from src.cli.runner import AnalysisRunner
from src.output import OutputManager
from src.utils.errors import ConfigError, LabError, ErrorContext
from src.utils.logger import LabLogger

logger = logging.getLogger(__name__)

ERROR_RECORD = "error"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qeilab",
        description="Quantum energy inequalities, nuclearity and negative-energy states: numerical reports.",
    )
    parser.add_argument("analysis", choices=[a.value for a in Analysis], help="Analysis to run.")
    parser.add_argument("--config", help="JSON run configuration; analysis defaults when omitted.")
    parser.add_argument("--seed", type=int, help="Root random seed, overrides the configuration.")
    parser.add_argument("--out", help="Output directory, overrides the configuration.")
    parser.add_argument("--plots", action="store_true", help="Also write SVG plots.")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """
    Resolve the run configuration from the file and the command-line overrides.

    Raises:
        ConfigError: If the file is rejected, names another analysis, or an override is invalid.
    """
    if args.config:
        config = ConfigFactory.from_file(args.config)
        if config.analysis.value != args.analysis:
            raise ConfigError(f"configuration is for {config.analysis.value}, not {args.analysis}",
                              context=ErrorContext("cli", "load_config", {'path': args.config}))
    else:
        config = ConfigFactory.for_analysis(args.analysis)

    if args.seed is not None:
        config.seed = args.seed
    if args.out:
        config.output.output_dir = args.out
    if args.plots:
        config.output.plots = True
    config.validate()
    return config


def _write_error(output_dir: str, error: LabError, lab_logger: LabLogger) -> None:
    """Leave error.json, with the errors logged during the run, in the output directory."""
    record = error.to_record()
    record['logged_errors'] = lab_logger.error_records()
    try:
        path = OutputManager(output_dir).save_json(ERROR_RECORD, record)
        logger.info(f"Error record written to {path}")
    except LabError as e:
        logger.error(f"Could not write the error record: {e}")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one analysis and return the process exit status.

    0 on success, otherwise the exit code of the LabError that aborted the
    run (2 configuration, 3 numeric failure, 4 theorem-check violation).
    """
    args = build_parser().parse_args(argv)
    output_dir = args.out or OutputConfig().output_dir
    lab_logger = LabLogger()

    try:
        config = load_config(args)
        output_dir = config.output.output_dir
        lab_logger = LabLogger(level=config.log.level, log_dir=config.log.log_dir)
        AnalysisRunner(config).run()
    except LabError as e:
        lab_logger.error(e.user_message, exc_info=e if e.exit_code == 1 else None)
        _write_error(output_dir, e, lab_logger)
        return e.exit_code
    except Exception as e:
        error = LabError(f"unexpected failure: {e}", ErrorContext("cli", "main", {'analysis': args.analysis}))
        lab_logger.critical(str(error), exc_info=e)
        _write_error(output_dir, error, lab_logger)
        return error.exit_code

    logger.info(f"Reports written to {Path(output_dir).resolve()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
