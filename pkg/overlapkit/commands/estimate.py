import argparse

from loguru import logger

from overlapkit.core.analysis import run_analysis
from overlapkit.core.arguments import add_dataset_arguments, add_output_arguments, config_from_args, emit_report


def estimate(args: argparse.Namespace) -> int:
    """Point estimates of the overlap indices, no resampling."""
    report = run_analysis(config_from_args(args))
    logger.debug(f"Estimated overlap of groups {', '.join(report.group_labels)}")
    emit_report(report, args.format, args.out)
    return 0


def setup(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("estimate", help="estimate the overlap indices of every group and component")
    add_dataset_arguments(parser)
    add_output_arguments(parser)
    parser.set_defaults(handler=estimate)
