"""
Monte Carlo runs of the tests and interval constructions on simulated scenarios.

Every replication draws its data and bootstrap streams from `(scenario seed, replication)`, so a report
is fully determined by the scenario regardless of how replications are spread over workers.
"""
import json
import math
import time
import typing as t
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger

from overlapkit.config import Family, IntervalMethod, LognormalScale, SimulationMode, TestMethod
from overlapkit.core.bootstrap import bootstrap_covariance, bootstrap_replicates
from overlapkit.core.errors import NumericalError
from overlapkit.core.inference import run_test
from overlapkit.core.intervals import build_intervals
from overlapkit.core.numerics import McParams
from overlapkit.core.overlap import estimate
from overlapkit.simulation.samplers import lognormal_moments
from overlapkit.simulation.scenarios import SEED_MASK, ScenarioPlan, ScenarioSpec, analytic_truth, generate_scenario
from overlapkit.utils.time import stringify_duration

LARGE_SAMPLE_SIZE = 1_000_000
# Replication index reserved for the large-sample truth, never used by a regular replication
TRUTH_REPLICATION = (1 << 63) - 1
REPLICATION_CHUNK = 8

Outcome = t.Dict[str, t.Any]


@dataclass(frozen=True)
class MethodSummary:
    """
    Aggregate of one method over all replications.

    `rate` is the rejection rate (size/power) or the simultaneous coverage, `mc_se` its Monte Carlo standard error.
    Replications where the method failed numerically are counted in `failures` and left out of `rate`.
    """

    method: str
    setting: str
    rate: float
    mc_se: float
    successes: int
    failures: int
    mean_length: t.Optional[float] = None

    def to_dict(self) -> t.Dict[str, t.Any]:
        return {
            "method": self.method,
            "setting": self.setting,
            "rate": self.rate,
            "mc_se": self.mc_se,
            "successes": self.successes,
            "failures": self.failures,
            "mean_length": self.mean_length,
        }


@dataclass(frozen=True)
class SimulationReport:
    scenario: str
    mode: SimulationMode
    reps: int
    B: int
    seed: int
    summaries: t.Tuple[MethodSummary, ...]
    truth: t.Optional[t.Tuple[float, ...]] = None
    truth_source: t.Optional[str] = None
    notes: t.Tuple[str, ...] = field(default=())
    elapsed: float = 0.0

    @property
    def elapsed_text(self) -> str:
        return stringify_duration(self.elapsed, min_unit="seconds")

    def summary(self, method: t.Union[TestMethod, IntervalMethod, str], setting: t.Optional[str] = None) -> MethodSummary:
        name = method if isinstance(method, str) else method.value
        for summary in self.summaries:
            if summary.method == name and (setting is None or summary.setting == setting):
                return summary
        raise KeyError(name)

    def to_frame(self) -> pd.DataFrame:
        """One row per method and setting."""
        frame = pd.DataFrame([summary.to_dict() for summary in self.summaries])
        frame.insert(0, "scenario", self.scenario)
        frame.insert(1, "mode", self.mode.value)
        frame["reps"] = self.reps
        frame["B"] = self.B
        return frame

    def to_dict(self, include_timing: bool = True) -> t.Dict[str, t.Any]:
        payload = {
            "scenario": self.scenario,
            "mode": self.mode.value,
            "reps": self.reps,
            "B": self.B,
            "seed": self.seed,
            "truth": None if self.truth is None else list(self.truth),
            "truth_source": self.truth_source,
            "summaries": [summary.to_dict() for summary in self.summaries],
            "notes": list(self.notes),
        }
        if include_timing:
            payload["elapsed_seconds"] = self.elapsed
            payload["elapsed"] = self.elapsed_text
        return payload


def derived_seed(seed: int, replication: int, purpose: int) -> int:
    """Independent 64-bit seed for one purpose of one replication."""
    state = np.random.SeedSequence([seed & SEED_MASK, replication, purpose]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def _binomial_se(rate: float, count: int) -> float:
    return math.sqrt(rate * (1 - rate) / count) if count else float("nan")


def _scenario_notes(spec: ScenarioSpec) -> t.List[str]:
    """Moments of both readings of any lognormal component, so the parameterization can be audited."""
    notes = []
    for label, group in zip(spec.labels, spec.groups):
        if group.family is not Family.mvnormal_with_lognormal_component:
            continue
        for scale in LognormalScale:
            mean, variance = lognormal_moments(group.lognormal_mean, group.lognormal_variance, scale)
            marker = " (used)" if scale is group.lognormal_scale else ""
            notes.append(f"{label}: lognormal read on the {scale.value} scale has mean {mean:.6g}, variance {variance:.6g}{marker}")
    return notes


# region: Truth

def large_sample_truth(spec: ScenarioSpec, n: int = LARGE_SAMPLE_SIZE) -> np.ndarray:
    """Overlap vector estimated from one dataset with `n` observations per group."""
    big = replace(spec, n=tuple(n for _ in spec.n))
    data = generate_scenario(big, TRUTH_REPLICATION)
    return estimate(data, big.weight_scheme(), big.estimand).flatten()


def resolve_truth(spec: ScenarioSpec, large_sample_size: int = LARGE_SAMPLE_SIZE) -> t.Tuple[np.ndarray, str]:
    """Supplied truth, the closed form where it exists, or the large-sample estimate."""
    if spec.truth is not None:
        return np.asarray(spec.truth, dtype=float), "supplied"
    truth = analytic_truth(spec)
    if truth is not None:
        return truth, "analytic"
    logger.info(f"No closed form truth for {spec.name}, estimating it from {large_sample_size} observations per group")
    return large_sample_truth(spec, large_sample_size), f"large_sample(n={large_sample_size})"

# endregion

# region: Replications


def _prepare(spec: ScenarioSpec, replication: int) -> t.Tuple[t.Any, ...]:
    data = generate_scenario(spec, replication)
    weights = spec.weight_scheme()
    est = estimate(data, weights, spec.estimand)
    rep = bootstrap_replicates(data, weights, spec.B, derived_seed(spec.seed, replication, 1), estimand=spec.estimand)
    cov = bootstrap_covariance(rep, data.N)
    mc = McParams(sample_count=spec.mc_samples, seed=derived_seed(spec.seed, replication, 2))
    return data, est, rep, cov, mc


def _test_replication(spec: ScenarioSpec, methods: t.Sequence[TestMethod], replication: int) -> Outcome:
    """`{method: reject flag}`, `None` for a numerical failure."""
    outcome: Outcome = {}
    try:
        data, est, rep, cov, mc = _prepare(spec, replication)
    except NumericalError as error:
        logger.debug(f"Replication {replication} failed before testing: {error}")
        return {method.value: None for method in methods}

    for method in methods:
        try:
            outcome[method.value] = run_test(method, est, rep, cov, data.N, spec.alpha, mc).reject
        except NumericalError as error:
            logger.debug(f"Replication {replication}, {method.value} failed: {error}")
            outcome[method.value] = None
    return outcome


def _coverage_replication(spec: ScenarioSpec, methods: t.Sequence[IntervalMethod], truth: np.ndarray, replication: int) -> Outcome:
    """`{method: (covered, mean length)}`, `None` for a numerical failure."""
    outcome: Outcome = {}
    try:
        data, est, rep, cov, mc = _prepare(spec, replication)
    except NumericalError as error:
        logger.debug(f"Replication {replication} failed before interval construction: {error}")
        return {method.value: None for method in methods}

    for method in methods:
        try:
            (intervals,) = build_intervals([method], est, rep, cov, data.N, spec.alpha, mc)
            outcome[method.value] = (intervals.covers(truth), float(intervals.widths.mean()))
        except NumericalError as error:
            logger.debug(f"Replication {replication}, {method.value} failed: {error}")
            outcome[method.value] = None
    return outcome


def _run_chunk(task: t.Callable[..., Outcome], arguments: t.Tuple[t.Any, ...], replications: t.Sequence[int]) -> t.List[Outcome]:
    return [task(*arguments, replication) for replication in replications]


def _run_replications(task: t.Callable[..., Outcome], arguments: t.Tuple[t.Any, ...], reps: int, workers: int) -> t.List[Outcome]:
    """Outcomes in replication order, however they were scheduled."""
    chunks = [range(start, min(start + REPLICATION_CHUNK, reps)) for start in range(0, reps, REPLICATION_CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, task, arguments, chunk) for chunk in chunks]
            blocks = [future.result() for future in futures]
    else:
        blocks = [_run_chunk(task, arguments, chunk) for chunk in chunks]
    return [outcome for block in blocks for outcome in block]

# endregion


def run_size_power(spec: ScenarioSpec, methods: t.Sequence[TestMethod], workers: int = 1, setting: str = "base") -> SimulationReport:
    """Rejection rate of every test over `spec.reps` replications: empirical size under the null, power otherwise."""
    started = time.perf_counter()
    logger.info(f"Size/power run of {spec.name} ({setting}): {spec.reps} replications, B={spec.B}")
    outcomes = _run_replications(_test_replication, (spec, tuple(methods)), spec.reps, workers)

    summaries = []
    for method in methods:
        flags = [outcome[method.value] for outcome in outcomes if outcome[method.value] is not None]
        rate = sum(flags) / len(flags) if flags else float("nan")
        summaries.append(MethodSummary(method.value, setting, rate, _binomial_se(rate, len(flags)), len(flags), spec.reps - len(flags)))
        if len(flags) < spec.reps:
            logger.warning(f"{method.value}: {spec.reps - len(flags)} replication(s) failed numerically")

    return SimulationReport(
        scenario=spec.name,
        mode=SimulationMode.size_power,
        reps=spec.reps,
        B=spec.B,
        seed=spec.seed,
        summaries=tuple(summaries),
        notes=tuple(_scenario_notes(spec)),
        elapsed=time.perf_counter() - started,
    )


def run_coverage(
    spec: ScenarioSpec,
    methods: t.Sequence[IntervalMethod],
    workers: int = 1,
    setting: str = "base",
    large_sample_size: int = LARGE_SAMPLE_SIZE,
) -> SimulationReport:
    """Simultaneous coverage of the true overlap vector and the mean componentwise length of every construction."""
    started = time.perf_counter()
    truth, source = resolve_truth(spec, large_sample_size)
    logger.info(f"Coverage run of {spec.name} ({setting}): {spec.reps} replications, truth from {source}")
    outcomes = _run_replications(_coverage_replication, (spec, tuple(methods), truth), spec.reps, workers)

    summaries = []
    for method in methods:
        results = [outcome[method.value] for outcome in outcomes if outcome[method.value] is not None]
        coverage = sum(covered for covered, _ in results) / len(results) if results else float("nan")
        # Pairwise summation keeps the mean independent of scheduling
        length = float(np.sum(np.asarray([length for _, length in results]))) / len(results) if results else float("nan")
        summaries.append(MethodSummary(
            method.value, setting, coverage, _binomial_se(coverage, len(results)), len(results), spec.reps - len(results), length,
        ))

    notes = _scenario_notes(spec)
    if source.startswith("large_sample"):
        notes.append(f"True overlap vector estimated by {source}")

    return SimulationReport(
        scenario=spec.name,
        mode=SimulationMode.coverage,
        reps=spec.reps,
        B=spec.B,
        seed=spec.seed,
        summaries=tuple(summaries),
        truth=tuple(float(value) for value in truth),
        truth_source=source,
        notes=tuple(notes),
        elapsed=time.perf_counter() - started,
    )


def run_plan(plan: ScenarioPlan, workers: int = 1) -> SimulationReport:
    """Run every setting of a scenario file and merge the rows into one report."""
    started = time.perf_counter()
    reports = []
    for setting, spec in plan.settings():
        if plan.mode is SimulationMode.coverage:
            reports.append(run_coverage(spec, plan.methods, workers, setting))
        else:
            reports.append(run_size_power(spec, plan.methods, workers, setting))

    first = reports[0]
    notes = list(dict.fromkeys(note for report in reports for note in report.notes))
    return SimulationReport(
        scenario=plan.base.name,
        mode=plan.mode,
        reps=plan.base.reps,
        B=plan.base.B,
        seed=plan.base.seed,
        summaries=tuple(summary for report in reports for summary in report.summaries),
        truth=first.truth if len(reports) == 1 else None,
        truth_source=first.truth_source if len(reports) == 1 else None,
        notes=tuple(notes),
        elapsed=time.perf_counter() - started,
    )


def write_report(report: SimulationReport, path: t.Union[str, Path]) -> None:
    """CSV (one row per method and setting) for `.csv` paths, JSON otherwise."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        report.to_frame().to_csv(path, index=False, float_format="%.12g")
    else:
        path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
    logger.info(f"Simulation report written to {path} ({report.elapsed_text})")
