"""
This module is the main driver file.
"""
import argparse
import pathlib
import sys

from src import experiments, report, utils
from src.config import ExperimentConfig
from src.exceptions import (
    BracketInvalidError,
    ConfigError,
    InstanceTooLargeError
)

# region Constants
DEFAULT_CONFIG_PATH = "config.yaml"
COMMANDS = (
    "schedule",
    "simulate",
    "sweep",
    "regimes",
    "cdf",
    "gain-curves",
    "tightness"
)
# Commands whose full result is printed; the rest print their metadata
TABLE_COMMANDS = ("schedule", "sweep", "regimes", "gain-curves", "tightness")

EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_INSTANCE_TOO_LARGE = 3
EXIT_BRACKET_INVALID = 4
# endregion Constants


# region Argparse
def get_args(argv: list[str] | None = None) -> argparse.Namespace:
    """
    Gets the parsed args.

    Args:
        argv: The arguments to parse, defaults to sys.argv

    Returns:
        The command line args.
    """
    parser = argparse.ArgumentParser(
        description="Full-duplex MIMO downlink scheduling experiments."
    )
    parser.add_argument(
        "command",
        help="The experiment to run.",
        choices=COMMANDS
    )
    parser.add_argument(
        "-c",
        "--config",
        help=f"Path to the config file. Defaults to {DEFAULT_CONFIG_PATH}."
    )
    parser.add_argument(
        "--seed",
        help="Seed of every random stream, overrides experiment.seed.",
        type=int
    )
    parser.add_argument(
        "-o",
        "--out",
        help="CSV output path, overrides output.path.",
        type=pathlib.Path
    )
    parser.add_argument(
        "--samples",
        help="Number of random group assignments, overrides cdf.samples.",
        type=int
    )
    parser.add_argument(
        "--horizon",
        help="Slots per simulation, overrides the configured horizons.",
        type=int
    )
    parser.add_argument(
        "--full-scale",
        "--paper-scale",
        dest="full_scale",
        help="Run the random group assignment experiment at full scale.",
        action="store_true"
    )
    parser.add_argument(
        "--workers",
        help="Number of worker processes.",
        type=int
    )
    parser.add_argument(
        "--max-r",
        help="Largest log2 K of the tightness table, overrides"
        " tightness.max_r.",
        type=int
    )

    return parser.parse_args(argv)
# endregion Argparse


# region Parse config
def get_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Load the config file and apply the command line overrides.

    Args:
        args: The command line args

    Returns:
        The experiment config.
    """
    config_path = args.config
    if config_path is None:
        config_path = DEFAULT_CONFIG_PATH
        utils.print_warning(
            "Config file path was not provided. Defaulting to"
            f" {DEFAULT_CONFIG_PATH}."
        )
    config = ExperimentConfig.load(config_path)
    if config.kind is not None and config.kind != args.command:
        utils.print_warning(
            f"The config describes a {config.kind} experiment; running"
            f" {args.command}."
        )
    return config.with_overrides(
        kind=args.command,
        seed=args.seed,
        horizon=args.horizon,
        samples=args.samples,
        output_path=args.out,
        workers=args.workers,
        full_scale=args.full_scale
    )
# endregion Parse config


# region Run
def run_command(
    command: str,
    config: ExperimentConfig,
    max_r: int | None = None
) -> experiments.ExperimentResult:
    """
    Dispatch a command to its experiment.

    Args:
        command: The command name
        config: The experiment config
        max_r: The tightness table override

    Returns:
        The experiment result.
    """
    if command == "tightness":
        return experiments.cmd_tightness(max_r or config.tightness_max_r)
    commands = {
        "schedule": experiments.cmd_schedule,
        "simulate": experiments.cmd_simulate,
        "sweep": experiments.cmd_sweep,
        "regimes": experiments.cmd_regimes,
        "cdf": experiments.cmd_cdf,
        "gain-curves": experiments.cmd_gain_curves
    }
    return commands[command](config)


def emit(
    command: str,
    result: experiments.ExperimentResult,
    output_path: str | None
) -> None:
    """
    Print the result and write it as CSV.

    Args:
        command: The command name
        result: The experiment result
        output_path: Where to write the CSV, if anywhere
    """
    if command in TABLE_COMMANDS:
        report.print_table(result.frame, command)
    else:
        report.print_metadata(result.metadata, command)
    for name, frame in (result.extra or {}).items():
        report.print_table(frame, name)

    if output_path is None:
        utils.print_warning(
            "No value for output.path was provided. Results were not saved."
        )
        return
    metadata = report.build_metadata(**result.metadata)
    path = pathlib.Path(output_path)
    saved = [report.write_csv(result.frame, path, metadata)]
    for name, frame in (result.extra or {}).items():
        saved.append(report.write_csv(
            frame,
            path.with_name(f"{path.stem}_{name}{path.suffix}"),
            metadata
        ))
    for saved_path in saved:
        print(f"Results successfully saved at \"{saved_path}\".")
# endregion Run


def main(argv: list[str] | None = None) -> int:
    """
    Runs the requested experiment and maps failures to exit codes.

    Args:
        argv: The arguments to parse, defaults to sys.argv

    Returns:
        The exit code.
    """
    args = get_args(argv)
    try:
        config = get_config(args)
        result = run_command(args.command, config, args.max_r)
        emit(args.command, result, config.output_path)
    except ConfigError as exc:
        utils.print_error(f"Config error: {exc}")
        return EXIT_CONFIG_ERROR
    except InstanceTooLargeError as exc:
        utils.print_error(f"Instance too large: {exc}")
        return EXIT_INSTANCE_TOO_LARGE
    except BracketInvalidError as exc:
        utils.print_error(f"Invalid bracket: {exc}")
        return EXIT_BRACKET_INVALID
    except (TypeError, ValueError) as exc:
        utils.print_error(str(exc))
        return EXIT_FAILURE
    return EXIT_SUCCESS


if __name__ == "__main__":
    sys.exit(main())
