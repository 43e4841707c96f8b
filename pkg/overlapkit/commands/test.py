import argparse

from overlapkit.config import TestMethod
from overlapkit.core.analysis import run_analysis
from overlapkit.core.arguments import (
    add_analysis_arguments, add_dataset_arguments, add_inference_arguments, add_output_arguments, config_from_args,
    finish_analysis
)


def test(args: argparse.Namespace) -> int:
    """
    Test the null hypothesis that every overlap index equals the benchmark 0.5.

    With `--posthoc`, closed testing over the component and group families follows the global tests, `--ci` adds
    intervals to the same report.
    """
    finish_analysis(run_analysis(config_from_args(args)), args)
    return 0


def setup(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("test", help="global tests of no overlap difference against the benchmark")
    add_dataset_arguments(parser)
    add_inference_arguments(parser)
    add_analysis_arguments(parser, tests=(TestMethod.wald, TestMethod.anova_type))
    add_output_arguments(parser)
    parser.set_defaults(handler=test)
