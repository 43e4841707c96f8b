import argparse

from overlapkit.config import IntervalMethod
from overlapkit.core.analysis import run_analysis
from overlapkit.core.arguments import (
    add_analysis_arguments, add_dataset_arguments, add_inference_arguments, add_output_arguments, config_from_args,
    finish_analysis
)


def ci(args: argparse.Namespace) -> int:
    """Simultaneous confidence intervals, optionally written out as plot data and joined by `--tests`."""
    finish_analysis(run_analysis(config_from_args(args)), args)
    return 0


def setup(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("ci", help="simultaneous confidence intervals for the overlap indices")
    add_dataset_arguments(parser)
    add_inference_arguments(parser)
    add_analysis_arguments(parser, intervals=tuple(IntervalMethod))
    add_output_arguments(parser)
    parser.set_defaults(handler=ci)
