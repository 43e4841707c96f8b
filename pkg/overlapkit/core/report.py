"""
Analysis reports: JSON serialization, tabular views and confidence interval plot data.

JSON output is deterministic: keys are sorted and every float is written with 12 significant digits,
so identical analyses produce byte-identical files.
"""
import json
import math
import typing as t
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger

from overlapkit.config import BENCHMARK, REPORT_SIGNIFICANT_DIGITS, Estimand
from overlapkit.core.errors import InputError
from overlapkit.core.inference import ClosedTestResult, TestResult
from overlapkit.core.intervals import IntervalSet

PLOT_COLUMNS = ("variable_label", "method", "estimate", "lower", "upper", "level")


def round_floats(value: t.Any, digits: int = REPORT_SIGNIFICANT_DIGITS) -> t.Any:
    """Recursively round floats to `digits` significant digits, non-finite floats become None."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f"{value:.{digits}g}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, dict):
        return {key: round_floats(item, digits) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(item, digits) for item in value]
    if isinstance(value, np.ndarray):
        return round_floats(value.tolist(), digits)
    return value


@dataclass(frozen=True)
class AnalysisReport:
    """Everything one analysis produced, with the provenance needed to reproduce it."""

    group_labels: t.Tuple[str, ...]
    component_labels: t.Tuple[str, ...]
    estimates: np.ndarray
    estimand: Estimand
    weights: t.Optional[t.Tuple[float, ...]]
    tests: t.Tuple[TestResult, ...] = field(default=())
    posthoc: t.Tuple[ClosedTestResult, ...] = field(default=())
    intervals: t.Tuple[IntervalSet, ...] = field(default=())
    warnings: t.Tuple[str, ...] = field(default=())
    provenance: t.Dict[str, t.Any] = field(default_factory=dict)

    @property
    def variable_labels(self) -> t.List[str]:
        return [f"{group} {component}" for group in self.group_labels for component in self.component_labels]

    def estimate_rows(self) -> t.List[t.Dict[str, t.Any]]:
        flat = np.asarray(self.estimates, dtype=float).ravel()
        rows = []
        for index, (group, component) in enumerate((g, c) for g in self.group_labels for c in self.component_labels):
            rows.append({"variable": f"Var {index + 1}", "group": group, "component": component, "estimate": float(flat[index])})
        return rows

    def to_dict(self) -> t.Dict[str, t.Any]:
        return {
            "group_labels": list(self.group_labels),
            "component_labels": list(self.component_labels),
            "estimand": self.estimand.value,
            "weights": None if self.weights is None else list(self.weights),
            "estimates": self.estimate_rows(),
            "tests": [test.to_dict() for test in self.tests],
            "posthoc": [result.to_dict() for result in self.posthoc],
            "intervals": [intervals.to_dict() for intervals in self.intervals],
            "warnings": list(self.warnings),
            "provenance": dict(self.provenance),
        }

    def to_json(self) -> str:
        return json.dumps(round_floats(self.to_dict()), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, payload: t.Dict[str, t.Any]) -> "AnalysisReport":
        group_labels = tuple(payload["group_labels"])
        component_labels = tuple(payload["component_labels"])
        rows = len(payload["estimates"]) // max(len(component_labels), 1)
        estimates = np.asarray([row["estimate"] for row in payload["estimates"]], dtype=float).reshape(rows, len(component_labels))
        return cls(
            group_labels=group_labels,
            component_labels=component_labels,
            estimates=estimates,
            estimand=Estimand(payload["estimand"]),
            weights=None if payload["weights"] is None else tuple(payload["weights"]),
            tests=tuple(TestResult.from_dict(item) for item in payload.get("tests", ())),
            posthoc=tuple(ClosedTestResult.from_dict(item) for item in payload.get("posthoc", ())),
            intervals=tuple(IntervalSet.from_dict(item) for item in payload.get("intervals", ())),
            warnings=tuple(payload.get("warnings", ())),
            provenance=dict(payload.get("provenance", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "AnalysisReport":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as error:
            raise InputError(f"Report isn't valid JSON: {error}")
        return cls.from_dict(payload)

    # region: Tabular views

    def estimates_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.estimate_rows())

    def tests_frame(self) -> pd.DataFrame:
        rows = [
            {"label": test.label, "method": test.method.value, "statistic": test.statistic, "reference": test.reference,
             "p_value": test.p_value, "reject": test.reject}
            for test in self.tests
        ]
        rows.extend(
            {"label": f"{result.family.value}: {result.member}", "method": result.raw.method.value,
             "statistic": result.raw.statistic, "reference": result.raw.reference,
             "p_value": result.raw.p_value, "adjusted_p_value": result.adjusted_p_value, "reject": result.reject}
            for result in self.posthoc
        )
        return pd.DataFrame(rows)

    def intervals_frame(self) -> pd.DataFrame:
        rows = []
        for intervals in self.intervals:
            for index, label in enumerate(intervals.labels):
                rows.append({
                    "variable_label": label,
                    "method": intervals.method.value,
                    "estimate": float(intervals.estimate[index]),
                    "lower": float(intervals.lower[index]),
                    "upper": float(intervals.upper[index]),
                    "level": intervals.level,
                })
        return pd.DataFrame(rows, columns=list(PLOT_COLUMNS))

    def to_table(self) -> str:
        """Human readable summary, sections separated by blank lines."""
        float_format = "{:.4f}".format
        sections = ["Estimates", self.estimates_frame().to_string(index=False, float_format=float_format)]
        if self.tests or self.posthoc:
            sections += ["", "Tests", self.tests_frame().to_string(index=False, float_format="{:.4g}".format)]
        if self.intervals:
            sections += ["", "Simultaneous intervals", self.intervals_frame().to_string(index=False, float_format=float_format)]
        if self.warnings:
            sections += ["", "Warnings", *(f"  - {warning}" for warning in self.warnings)]
        return "\n".join(sections) + "\n"

    def to_csv(self) -> str:
        """Long format: one row per variable, with the interval bounds of every method as extra columns."""
        frame = self.estimates_frame()
        frame.insert(0, "variable_label", self.variable_labels)
        for intervals in self.intervals:
            frame[f"{intervals.method.value}_lower"] = intervals.lower
            frame[f"{intervals.method.value}_upper"] = intervals.upper
        return frame.to_csv(index=False, float_format="%.12g")

    # endregion


def emit_ci_plot_data(report: AnalysisReport, path: t.Union[str, Path], reference_line: float = BENCHMARK) -> Path:
    """
    Write one row per variable and interval method, ready for plotting.

    The first line is a comment carrying the horizontal reference value, `# reference_line=0.5`.
    """
    if not report.intervals:
        raise InputError("The report holds no confidence intervals to plot")

    path = Path(path)
    frame = report.intervals_frame()
    try:
        with path.open("w", encoding="utf-8", newline="") as handle:
            handle.write(f"# reference_line={reference_line}\n")
            frame.to_csv(handle, index=False, float_format="%.17g")
    except OSError as error:
        raise InputError(f"Can't write plot data to {path}: {error}")

    logger.debug(f"Wrote {len(frame)} interval rows to {path}")
    return path


def read_ci_plot_data(path: t.Union[str, Path]) -> t.Tuple[pd.DataFrame, t.Dict[str, float]]:
    """Plot data written by `emit_ci_plot_data`, with the metadata of its comment lines."""
    path = Path(path)
    metadata = {}
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            metadata[key.strip()] = float(value)
    return pd.read_csv(path, comment="#"), metadata
