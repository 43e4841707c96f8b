import json
import math
import os
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from overlapkit.config import IntervalMethod, SimulationMode, TestMethod
from overlapkit.simulation.harness import (
    derived_seed, large_sample_truth, resolve_truth, run_coverage, run_plan, run_size_power, write_report
)
from overlapkit.simulation.scenarios import GroupFamily, ScenarioPlan, ScenarioSpec, build_preset

TESTS = (TestMethod.wald, TestMethod.anova_type, TestMethod.percentile)
WORKERS = os.cpu_count() or 1


def small(name: str, **parameters):
    defaults = dict(n=12, reps=4, B=40, mc_samples=5000, seed=314)
    defaults.update(parameters)
    return build_preset(name, **defaults)


def test_derived_seeds_are_stable_and_distinct():
    assert derived_seed(1, 2, 1) == derived_seed(1, 2, 1)
    assert len({derived_seed(1, 2, 1), derived_seed(1, 2, 2), derived_seed(1, 3, 1), derived_seed(2, 2, 1)}) == 4
    assert 0 <= derived_seed(-1, 0, 0) < 2 ** 64


def test_size_power_run():
    report = run_size_power(small("example7"), TESTS)
    assert report.mode is SimulationMode.size_power
    assert [summary.method for summary in report.summaries] == [method.value for method in TESTS]
    for summary in report.summaries:
        assert summary.successes + summary.failures == 4
        assert 0 <= summary.rate <= 1
        assert summary.mean_length is None
    assert report.summary(TestMethod.wald).setting == "base"
    with pytest.raises(KeyError):
        report.summary(TestMethod.max_t)


def test_scenarios_without_spread_count_as_failures():
    flat = GroupFamily.normal([0.0, 0.0], [[0.0, 0.0], [0.0, 0.0]])
    spec = ScenarioSpec(name="flat", groups=(flat,) * 3, n=(8, 8, 8), B=50, reps=4, mc_samples=5000, seed=314)
    report = run_size_power(spec, TESTS + (TestMethod.max_t,))
    for summary in report.summaries:
        assert summary.failures == 4
        assert summary.successes == 0


def test_reports_do_not_depend_on_workers():
    spec = small("example8", reps=10)
    serial = run_size_power(spec, TESTS)
    parallel = run_size_power(spec, TESTS, workers=2)
    assert serial.to_dict(include_timing=False) == parallel.to_dict(include_timing=False)


def test_coverage_run():
    report = run_coverage(small("s4", reps=3), list(IntervalMethod))
    assert report.truth == (0.5, 0.5)
    assert report.truth_source == "analytic"
    for summary in report.summaries:
        assert summary.successes + summary.failures == 3
        assert summary.mean_length is not None and summary.mean_length >= 0


def test_resolve_truth():
    spec = small("s4")
    truth, source = resolve_truth(replace(spec, truth=(0.4, 0.45)))
    np.testing.assert_array_equal(truth, [0.4, 0.45])
    assert source == "supplied"

    truth, source = resolve_truth(small("example9"), large_sample_size=2000)
    assert source == "large_sample(n=2000)"
    assert truth.shape == (6,)
    assert ((truth >= 0) & (truth <= 1)).all()


def test_large_sample_truth_matches_the_closed_form():
    truth = large_sample_truth(small("s1"), n=20_000)
    closed, source = resolve_truth(small("s1"))
    assert source == "analytic"
    np.testing.assert_allclose(truth, closed, atol=0.01)


def test_lognormal_scenarios_report_both_readings():
    report = run_size_power(small("example9", reps=2), (TestMethod.wald,))
    assert len(report.notes) == 2
    assert sum("(used)" in note for note in report.notes) == 1


def test_plan_with_sweep():
    plan = ScenarioPlan(small("example8"), SimulationMode.size_power, (TestMethod.anova_type,), "n", (10.0, 14.0))
    report = run_plan(plan)
    assert [summary.setting for summary in report.summaries] == ["n=10", "n=14"]
    assert report.summary("anova_type", "n=14").successes + report.summary("anova_type", "n=14").failures == 4
    assert report.truth is None


def test_write_report(tmp_path):
    report = run_size_power(small("example7", reps=2), TESTS)

    write_report(report, tmp_path / "report.csv")
    frame = pd.read_csv(tmp_path / "report.csv")
    assert list(frame["method"]) == [method.value for method in TESTS]
    assert {"scenario", "mode", "rate", "mc_se", "reps", "B"} <= set(frame.columns)

    write_report(report, tmp_path / "report.json")
    payload = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert payload["scenario"] == "example7"
    assert len(payload["summaries"]) == 3
    assert "elapsed" in payload


# region: Monte Carlo acceptance runs

@pytest.mark.slow
def test_k_sample_size_under_identical_groups():
    report = run_size_power(build_preset("example7", seed=7), TESTS, workers=WORKERS)
    for method in (TestMethod.wald, TestMethod.anova_type):
        assert 0.005 <= report.summary(method).rate <= 0.05
    assert report.summary(TestMethod.percentile).rate <= 0.02


@pytest.mark.slow
def test_two_sample_coverage_and_length():
    report = run_coverage(build_preset("s1", reps=500, seed=11), list(IntervalMethod), workers=WORKERS)
    bonferroni = report.summary(IntervalMethod.bonferroni)
    assert bonferroni.rate == pytest.approx(0.964, abs=0.03)
    assert bonferroni.mean_length == pytest.approx(0.271, abs=0.03)
    assert report.summary(IntervalMethod.ellipse_projection).mean_length > report.summary(IntervalMethod.mvt).mean_length


def _nondecreasing(summaries):
    for before, after in zip(summaries, summaries[1:]):
        assert after.rate >= before.rate - 2 * math.hypot(before.mc_se, after.mc_se)


@pytest.mark.slow
def test_power_grows_with_the_sample_size():
    plan = ScenarioPlan(
        build_preset("example8", seed=13), SimulationMode.size_power, (TestMethod.wald, TestMethod.anova_type), "n", (50, 100, 150),
    )
    report = run_plan(plan, workers=WORKERS)
    anova = [summary for summary in report.summaries if summary.method == "anova_type"]
    wald = [summary for summary in report.summaries if summary.method == "wald"]
    _nondecreasing(anova)
    for a, w in zip(anova, wald):
        assert a.rate >= w.rate - 2 * math.hypot(a.mc_se, w.mc_se)


@pytest.mark.slow
def test_power_grows_with_the_scale_difference():
    plan = ScenarioPlan(
        build_preset("s5", reps=500, seed=17), SimulationMode.size_power, (TestMethod.anova_type,), "sigma2", (1.1, 1.4, 1.7, 2.0),
    )
    _nondecreasing(run_plan(plan, workers=WORKERS).summaries)

# endregion
