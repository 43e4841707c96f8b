"""The analysis pipeline: estimate, bootstrap, test, build intervals and run post-hoc closed tests."""
import typing as t
from dataclasses import dataclass, field
from pathlib import Path

from loguru import logger

import overlapkit
from overlapkit.config import (
    BOOTSTRAP_WARN_THRESHOLD, DEFAULT_ALPHA, DEFAULT_BOOTSTRAP, DEFAULT_MC_SAMPLES, Estimand, IntervalMethod, OutputFormat,
    PostHocFamily, TestMethod, WeightMode, default_seed, default_workers
)
from overlapkit.core.bootstrap import bootstrap_covariance, bootstrap_replicates
from overlapkit.core.dataset_io import parse_dataset
from overlapkit.core.empirical import GroupedDataset, WeightScheme
from overlapkit.core.errors import DomainError, InputError
from overlapkit.core.inference import closed_testing, run_test
from overlapkit.core.intervals import build_intervals
from overlapkit.core.numerics import McParams
from overlapkit.core.overlap import estimate
from overlapkit.core.report import AnalysisReport


@dataclass(frozen=True)
class AnalysisConfig:
    """Settings of one analysis, mirroring the command line flags."""

    input: t.Optional[Path] = None
    group_column: str = "group"
    components: t.Optional[t.Tuple[str, ...]] = None
    weight_mode: WeightMode = WeightMode.proportional
    custom_weights: t.Optional[t.Tuple[float, ...]] = None
    estimand: Estimand = Estimand.reference
    alpha: float = DEFAULT_ALPHA
    B: int = DEFAULT_BOOTSTRAP
    seed: int = field(default_factory=default_seed)
    tests: t.Tuple[TestMethod, ...] = field(default=())
    intervals: t.Tuple[IntervalMethod, ...] = field(default=())
    posthoc: bool = False
    posthoc_method: TestMethod = TestMethod.wald
    output_format: OutputFormat = OutputFormat.json
    mc_samples: int = DEFAULT_MC_SAMPLES
    workers: int = field(default_factory=default_workers)

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 1:
            raise DomainError("alpha", self.alpha, "(0, 1)")
        if self.needs_bootstrap and self.B < 2:
            raise DomainError("B", self.B, "integers >= 2")
        if self.posthoc_method not in (TestMethod.wald, TestMethod.anova_type):
            raise DomainError("posthoc_method", self.posthoc_method.value, "{wald, anova_type}")
        if self.workers < 1:
            raise DomainError("workers", self.workers, "positive integers")

    @property
    def needs_bootstrap(self) -> bool:
        return bool(self.tests or self.intervals or self.posthoc)


def _dedupe(messages: t.Iterable[str]) -> t.Tuple[str, ...]:
    return tuple(dict.fromkeys(message for message in messages if message))


def analyze_dataset(data: GroupedDataset, config: AnalysisConfig, warnings: t.Sequence[str] = ()) -> AnalysisReport:
    """Run the pipeline on an in-memory dataset."""
    warnings = list(warnings)
    if (config.tests or config.posthoc) and data.k < 2 and config.estimand is Estimand.reference:
        raise InputError(f"Tests need at least 2 groups, the dataset has {data.k}")

    weights = WeightScheme.for_dataset(data, config.weight_mode, config.custom_weights)
    overlap = estimate(data, weights, config.estimand)
    logger.info(f"Estimated {overlap.entries.size} overlap indices for {data.k} group(s) and {data.d} component(s)")

    tied = data.tied_components()
    if tied:
        warnings.append(f"Ties present in component(s) {', '.join(tied)}, handled by the plug-in estimator")

    tests, posthoc, intervals = [], [], []
    if config.needs_bootstrap:
        if config.B < BOOTSTRAP_WARN_THRESHOLD:
            warnings.append(f"Only {config.B} bootstrap replicates, at least {BOOTSTRAP_WARN_THRESHOLD} are recommended")
            logger.warning(warnings[-1])

        rep = bootstrap_replicates(data, weights, config.B, config.seed, config.workers, config.estimand)
        cov = bootstrap_covariance(rep, data.N)
        mc = McParams(sample_count=config.mc_samples, seed=config.seed)

        for method in config.tests:
            result = run_test(method, overlap, rep, cov, data.N, config.alpha, mc)
            logger.info(f"{method.value} test: statistic {result.statistic:.4g}, p-value {result.p_value}, reject {result.reject}")
            tests.append(result)

        intervals = build_intervals(config.intervals, overlap, rep, cov, data.N, config.alpha, mc)

        if config.posthoc:
            for family in PostHocFamily:
                posthoc.extend(closed_testing(overlap, cov, data.N, family, config.posthoc_method, config.alpha))

        warnings.extend(cov.notes)

    for result in tests:
        warnings.extend(result.notes)
    for result in posthoc:
        warnings.extend(result.raw.notes)
    for interval_set in intervals:
        warnings.extend(interval_set.notes)

    provenance = {
        "software_version": overlapkit.__version__,
        "seed": config.seed,
        "B": config.B if config.needs_bootstrap else None,
        "alpha": config.alpha,
        "estimand": config.estimand.value,
        "weight_mode": weights.mode.value,
        "mc_samples": config.mc_samples,
        "group_sizes": list(data.sizes),
        "N": data.N,
    }
    return AnalysisReport(
        group_labels=overlap.group_labels,
        component_labels=overlap.component_labels,
        estimates=overlap.entries,
        estimand=config.estimand,
        weights=None if overlap.weights is None else overlap.weights.weights,
        tests=tuple(tests),
        posthoc=tuple(posthoc),
        intervals=tuple(intervals),
        warnings=_dedupe(warnings),
        provenance=provenance,
    )


def run_analysis(config: AnalysisConfig) -> AnalysisReport:
    """Read `config.input` and run the full pipeline on it."""
    if config.input is None:
        raise InputError("No input file given")

    min_groups = 2 if (config.tests or config.posthoc) else 1
    parsed = parse_dataset(config.input, config.group_column, config.components, min_groups=min_groups)
    return analyze_dataset(parsed.data, config, parsed.warnings)
