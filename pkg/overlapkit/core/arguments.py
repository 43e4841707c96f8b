"""Flags shared by the dataset commands and the conversion of parsed flags into an analysis config."""
import argparse
import sys
import typing as t
from enum import Enum
from pathlib import Path

from loguru import logger

from overlapkit.config import (
    BENCHMARK, DEFAULT_ALPHA, DEFAULT_BOOTSTRAP, DEFAULT_MC_SAMPLES, FALLBACK_SEED, Estimand, IntervalMethod, OutputFormat,
    TestMethod, WeightMode, default_seed, default_workers
)
from overlapkit.core.analysis import AnalysisConfig
from overlapkit.core.report import AnalysisReport, emit_ci_plot_data
from overlapkit.utils import converters


def add_dataset_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags describing the input data and the estimand."""
    group = parser.add_argument_group("data")
    group.add_argument("--input", "-i", type=Path, required=True, help="CSV file with a group column and component columns")
    group.add_argument("--group-col", default="group", help="name of the group label column (default: %(default)s)")
    group.add_argument("--components", type=converters.comma_list, help="comma separated component columns (default: all others)")
    group.add_argument(
        "--weights", type=converters.weight_spec, default=(WeightMode.proportional, None),
        help="proportional, equal, or explicit weights w1,w2,... (default: proportional)",
    )
    group.add_argument(
        "--estimand", type=converters.enum_member(Estimand), default=Estimand.reference,
        help="reference (every group against the weighted mixture) or two_sample (default: reference)",
    )


def add_inference_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags of the bootstrap and the Monte Carlo budget."""
    group = parser.add_argument_group("inference")
    group.add_argument("--alpha", type=converters.probability, default=DEFAULT_ALPHA, help="significance level (default: %(default)s)")
    group.add_argument("--bootstrap", "-B", type=converters.positive_int, default=DEFAULT_BOOTSTRAP, help="bootstrap replicates (default: %(default)s)")
    group.add_argument("--seed", type=converters.seed, help=f"random seed (default: OVERLAPKIT_SEED or {FALLBACK_SEED})")
    group.add_argument("--mc-samples", type=converters.positive_int, default=DEFAULT_MC_SAMPLES, help="Monte Carlo budget of normal rectangle probabilities")
    group.add_argument("--workers", type=converters.positive_int, help="worker processes, results don't depend on it (default: OVERLAPKIT_WORKERS or 1)")


def _names(methods: t.Sequence[Enum]) -> str:
    return ",".join(method.value for method in methods) or "none"


def add_analysis_arguments(
    parser: argparse.ArgumentParser,
    tests: t.Sequence[TestMethod] = (),
    intervals: t.Sequence[IntervalMethod] = (),
) -> None:
    """
    Flags choosing what the report holds: global tests, closed testing, intervals and plot data.

    `tests` and `intervals` are the command's defaults, so `test` and `ci` can both produce the full report.
    """
    group = parser.add_argument_group("analysis")
    group.add_argument(
        "--tests", type=converters.enum_list(TestMethod, allow_none=True), default=list(tests),
        help=f"comma separated tests among wald, anova_type, max_t, percentile, all or none (default: {_names(tests)})",
    )
    group.add_argument("--posthoc", action="store_true", help="closed testing over components and groups after the global tests")
    group.add_argument(
        "--ci", type=converters.enum_list(IntervalMethod, allow_none=True), default=list(intervals),
        help=f"comma separated intervals among bonferroni, mvt, ellipse_projection, all or none (default: {_names(intervals)})",
    )
    group.add_argument("--plot-data", type=Path, help="also write one CSV row per variable and interval construction here")


def add_output_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("output")
    group.add_argument("--format", type=converters.enum_member(OutputFormat), default=OutputFormat.json, help="json, csv or table (default: json)")
    group.add_argument("--out", "-o", type=Path, help="output file (default: standard output)")


def _or_default(value: t.Optional[int], default: t.Callable[[], int]) -> int:
    return default() if value is None else value


def config_from_args(args: argparse.Namespace) -> AnalysisConfig:
    """One field per flag, commands without the inference or analysis flags get the defaults."""
    weight_mode, custom_weights = args.weights
    return AnalysisConfig(
        input=args.input,
        group_column=args.group_col,
        components=None if args.components is None else tuple(args.components),
        weight_mode=weight_mode,
        custom_weights=custom_weights,
        estimand=args.estimand,
        alpha=getattr(args, "alpha", DEFAULT_ALPHA),
        B=getattr(args, "bootstrap", DEFAULT_BOOTSTRAP),
        seed=_or_default(getattr(args, "seed", None), default_seed),
        tests=tuple(getattr(args, "tests", ())),
        intervals=tuple(getattr(args, "ci", ())),
        posthoc=getattr(args, "posthoc", False),
        output_format=args.format,
        mc_samples=getattr(args, "mc_samples", DEFAULT_MC_SAMPLES),
        workers=_or_default(getattr(args, "workers", None), default_workers),
    )


def emit_report(report: AnalysisReport, output_format: OutputFormat, out: t.Optional[Path]) -> None:
    """Write the report in the requested format to `out`, or to standard output."""
    if output_format is OutputFormat.json:
        text = report.to_json()
    elif output_format is OutputFormat.csv:
        text = report.to_csv()
    else:
        text = report.to_table()

    if out is None:
        sys.stdout.write(text)
        return
    out.write_text(text, encoding="utf-8")
    logger.info(f"Report written to {out}")


def finish_analysis(report: AnalysisReport, args: argparse.Namespace) -> None:
    """Emit the report, then the plot data when `--plot-data` was given."""
    emit_report(report, args.format, args.out)
    if getattr(args, "plot_data", None) is not None:
        emit_ci_plot_data(report, args.plot_data, BENCHMARK)
