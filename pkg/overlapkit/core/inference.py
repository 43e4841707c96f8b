"""
Tests of the hypothesis that every overlap index equals the benchmark 1/2.

Wald, ANOVA-type and Max-T work on the bootstrap covariance, the percentile test on the replicates themselves.
Post-hoc sub-hypotheses (one component across all groups, one group across all components) are tested on
sub-vectors and combined by closed testing.
"""
import itertools
import typing as t
from dataclasses import dataclass, field, replace

import numpy as np
from loguru import logger

from overlapkit.config import BENCHMARK, PostHocFamily, TestMethod
from overlapkit.core.bootstrap import CovarianceEstimate, ReplicateMatrix
from overlapkit.core.errors import DegenerateCovarianceError, DomainError, InputError
from overlapkit.core.intervals import Estimate, bonferroni_sci, check_alpha, unpack_estimate
from overlapkit.core.numerics import (
    CorrelationMatrix, McParams, chi_square_sf, equicoordinate_quantile, f_nu_inf_sf, mvn_rectangle_prob, quadratic_form_matrix
)
from overlapkit.core.overlap import OverlapMatrix

# Closed testing enumerates all intersections of a family, 2^members - 1 sub-vector tests
MAX_CLOSED_FAMILY = 16


@dataclass(frozen=True)
class TestResult:
    """
    Outcome of one test.

    `p_value` is None for the percentile test, which only decides at the configured `alpha`.
    `per_component` holds the component statistics of Max-T and percentile tests, `per_component_reject` their flags.
    """

    method: TestMethod
    statistic: float
    reference: str
    p_value: t.Optional[float]
    reject: bool
    alpha: float
    df: t.Optional[float] = None
    critical_value: t.Optional[float] = None
    label: str = "global"
    labels: t.Tuple[str, ...] = field(default=())
    per_component: t.Optional[t.Tuple[float, ...]] = None
    per_component_reject: t.Optional[t.Tuple[bool, ...]] = None
    notes: t.Tuple[str, ...] = field(default=())

    __test__ = False

    def to_dict(self) -> t.Dict[str, t.Any]:
        return {
            "method": self.method.value,
            "label": self.label,
            "statistic": self.statistic,
            "reference": self.reference,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "df": self.df,
            "critical_value": self.critical_value,
            "labels": list(self.labels),
            "per_component": None if self.per_component is None else list(self.per_component),
            "per_component_reject": None if self.per_component_reject is None else list(self.per_component_reject),
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, payload: t.Dict[str, t.Any]) -> "TestResult":
        per_component = payload.get("per_component")
        per_component_reject = payload.get("per_component_reject")
        return cls(
            method=TestMethod(payload["method"]),
            statistic=float(payload["statistic"]),
            reference=payload["reference"],
            p_value=None if payload["p_value"] is None else float(payload["p_value"]),
            reject=bool(payload["reject"]),
            alpha=float(payload["alpha"]),
            df=payload.get("df"),
            critical_value=payload.get("critical_value"),
            label=payload.get("label", "global"),
            labels=tuple(payload.get("labels", ())),
            per_component=None if per_component is None else tuple(float(value) for value in per_component),
            per_component_reject=None if per_component_reject is None else tuple(bool(flag) for flag in per_component_reject),
            notes=tuple(payload.get("notes", ())),
        )


def _deviation(est: Estimate, dimension: int, target: float = BENCHMARK) -> t.Tuple[np.ndarray, t.Tuple[str, ...]]:
    vector, labels = unpack_estimate(est)
    if vector.size != dimension:
        raise InputError(f"Estimate has {vector.size} entries but the covariance is {dimension}-dimensional")
    return vector - target, labels


def _clip_probability(p: float) -> float:
    return float(min(max(p, 0.0), 1.0))


def wald_test(est: Estimate, cov: CovarianceEstimate, N: int, alpha: float, target: float = BENCHMARK) -> TestResult:
    """`N (I - target)' M (I - target)` against chi-square with `df` equal to the rank of the middle matrix `M`."""
    alpha = check_alpha(alpha)
    deviation, labels = _deviation(est, cov.dimension, target)

    middle = quadratic_form_matrix(cov.sigma_star)
    if middle.rank == 0:
        raise DegenerateCovarianceError("Bootstrap covariance has effective rank 0, the Wald statistic is undefined")

    notes = list(cov.notes)
    if middle.note:
        notes.append(middle.note)
        logger.warning(middle.note)

    statistic = max(float(N * deviation @ middle.matrix @ deviation), 0.0)
    p_value = _clip_probability(chi_square_sf(middle.rank, statistic))
    return TestResult(
        method=TestMethod.wald,
        statistic=statistic,
        reference=f"chi2({middle.rank})",
        p_value=p_value,
        reject=p_value < alpha,
        alpha=alpha,
        df=float(middle.rank),
        labels=labels,
        notes=tuple(notes),
    )


def anova_type_test(est: Estimate, cov: CovarianceEstimate, N: int, alpha: float, target: float = BENCHMARK) -> TestResult:
    """
    Trace normalized statistic `F_n = N / tr(S) * sum((I - target)^2)`.

    The reference is `F(nu, infinity)` with `nu = tr(S)^2 / tr(S^2)`.
    """
    alpha = check_alpha(alpha)
    deviation, labels = _deviation(est, cov.dimension, target)

    trace = float(np.trace(cov.sigma_star))
    if trace <= 0:
        raise DegenerateCovarianceError("Bootstrap covariance has zero trace, the ANOVA-type statistic is undefined")

    statistic = N / trace * float(deviation @ deviation)
    nu = trace ** 2 / float(np.sum(cov.sigma_star * cov.sigma_star))
    p_value = _clip_probability(f_nu_inf_sf(nu, statistic))
    return TestResult(
        method=TestMethod.anova_type,
        statistic=statistic,
        reference=f"F({nu:.6g}, inf)",
        p_value=p_value,
        reject=p_value < alpha,
        alpha=alpha,
        df=nu,
        labels=labels,
        notes=cov.notes,
    )


def max_t_test(
    est: Estimate,
    cov: CovarianceEstimate,
    N: int,
    alpha: float,
    mc: McParams = McParams(),
    target: float = BENCHMARK,
) -> TestResult:
    """
    Maximum of the standardized deviations `T_s = (I_s - target) / sd_s`.

    The p-value is `1 - P(max |Z_s| <= max |T_s|)` under the estimated correlation, and the test rejects when it
    is at most `alpha`. The critical value comes from the same integration rule, so `max |T_s| >= critical_value`
    always implies rejection. Degenerate components are left out.
    """
    alpha = check_alpha(alpha)
    deviation, labels = _deviation(est, cov.dimension, target)

    alive = ~cov.degenerate
    if not alive.any():
        raise DegenerateCovarianceError("Every component has zero bootstrap spread, the Max-T statistic is undefined")

    notes = list(cov.notes)
    if not alive.all():
        notes.append(f"{int((~alive).sum())} degenerate component(s) excluded from the Max-T test")
    if isinstance(est, OverlapMatrix) and est.weights is not None and len(est.group_labels) > 1:
        notes.append("Max-T on the k-sample reference estimand extends the two-sample procedure")

    statistics = np.zeros(deviation.size)
    statistics[alive] = deviation[alive] / cov.component_sd[alive]
    observed = float(np.abs(statistics).max())

    correlation = CorrelationMatrix.from_array(cov.correlation.entries[np.ix_(alive, alive)])
    critical = equicoordinate_quantile(correlation, 1 - alpha, mc)
    if observed > 0:
        limits = np.full(correlation.p, observed)
        inside, _ = mvn_rectangle_prob(correlation, -limits, limits, mc)
        p_value = _clip_probability(1 - inside)
    else:
        p_value = 1.0

    return TestResult(
        method=TestMethod.max_t,
        statistic=observed,
        reference=f"equicoordinate normal quantile over {correlation.p} component(s)",
        p_value=p_value,
        reject=p_value <= alpha,
        alpha=alpha,
        critical_value=critical,
        labels=labels,
        per_component=tuple(float(value) for value in statistics),
        per_component_reject=tuple(bool(abs(value) >= critical) for value in statistics),
        notes=tuple(notes),
    )


def percentile_test(est: Estimate, rep: ReplicateMatrix, N: int, alpha: float, target: float = BENCHMARK) -> TestResult:
    """
    Rejects when `target` lies outside at least one Bonferroni corrected basic bootstrap interval.

    Degenerate components have point intervals and never reject; when every component is degenerate
    the test raises instead of deciding.
    """
    alpha = check_alpha(alpha)
    intervals = bonferroni_sci(est, rep, N, alpha)
    flagged = np.asarray(intervals.flagged, dtype=bool)
    excluded = intervals.excludes(target) & ~flagged
    notes = list(intervals.notes)
    if flagged.any():
        notes.append(f"{int(flagged.sum())} degenerate component(s) excluded from the percentile test")
    p = intervals.estimate.size
    level = alpha / (2 * p)

    return TestResult(
        method=TestMethod.percentile,
        statistic=float(excluded.sum()),
        reference=f"Bonferroni levels {level:.6g} and {1 - level:.6g}",
        p_value=None,
        reject=bool(excluded.any()),
        alpha=alpha,
        labels=intervals.labels,
        per_component=tuple(float(flag) for flag in excluded),
        per_component_reject=tuple(bool(flag) for flag in excluded),
        notes=tuple(notes),
    )


def run_test(
    method: TestMethod,
    est: Estimate,
    rep: ReplicateMatrix,
    cov: CovarianceEstimate,
    N: int,
    alpha: float,
    mc: McParams = McParams(),
) -> TestResult:
    if method is TestMethod.wald:
        return wald_test(est, cov, N, alpha)
    if method is TestMethod.anova_type:
        return anova_type_test(est, cov, N, alpha)
    if method is TestMethod.max_t:
        return max_t_test(est, cov, N, alpha, mc)
    return percentile_test(est, rep, N, alpha)


# region: Post-hoc sub-hypotheses

def component_selector(rows: int, d: int, component: int) -> np.ndarray:
    """Mask of component `component` in every group of the group-major flattening."""
    mask = np.zeros((rows, d), dtype=bool)
    mask[:, component] = True
    return mask.ravel()


def group_selector(rows: int, d: int, group: int) -> np.ndarray:
    """Mask of every component of group `group`."""
    mask = np.zeros((rows, d), dtype=bool)
    mask[group, :] = True
    return mask.ravel()


def subvector_test(
    est: Estimate,
    cov: CovarianceEstimate,
    N: int,
    selector: t.Sequence[bool],
    method: TestMethod = TestMethod.wald,
    alpha: float = 0.05,
    label: str = "subvector",
) -> TestResult:
    """Wald or ANOVA-type test on the selected entries and the principal submatrix of the covariance."""
    selector = np.asarray(selector, dtype=bool).ravel()
    vector, labels = unpack_estimate(est)
    if selector.size != vector.size:
        raise InputError(f"Selector has {selector.size} entries, expected {vector.size}")
    if not selector.any():
        raise InputError("Selector doesn't select any component")

    indices = np.flatnonzero(selector)
    sub_cov = cov.submatrix(indices)
    sub_est = vector[indices]

    if method is TestMethod.wald:
        result = wald_test(sub_est, sub_cov, N, alpha)
    elif method is TestMethod.anova_type:
        result = anova_type_test(sub_est, sub_cov, N, alpha)
    else:
        raise DomainError("method", method.value, "{wald, anova_type}")

    return replace(result, label=label, labels=tuple(labels[index] for index in indices))


@dataclass(frozen=True)
class ClosedTestResult:
    """One member of a post-hoc family: its own test and the closure adjusted decision."""

    family: PostHocFamily
    member: str
    raw: TestResult
    adjusted_p_value: float
    reject: bool

    def to_dict(self) -> t.Dict[str, t.Any]:
        return {
            "family": self.family.value,
            "member": self.member,
            "raw": self.raw.to_dict(),
            "adjusted_p_value": self.adjusted_p_value,
            "reject": self.reject,
        }

    @classmethod
    def from_dict(cls, payload: t.Dict[str, t.Any]) -> "ClosedTestResult":
        return cls(
            family=PostHocFamily(payload["family"]),
            member=payload["member"],
            raw=TestResult.from_dict(payload["raw"]),
            adjusted_p_value=float(payload["adjusted_p_value"]),
            reject=bool(payload["reject"]),
        )


def family_members(est: OverlapMatrix, family: PostHocFamily) -> t.List[t.Tuple[str, np.ndarray]]:
    rows, d = est.entries.shape
    if family is PostHocFamily.component:
        return [(label, component_selector(rows, d, s)) for s, label in enumerate(est.component_labels)]
    return [(label, group_selector(rows, d, i)) for i, label in enumerate(est.group_labels)]


def closed_testing(
    est: OverlapMatrix,
    cov: CovarianceEstimate,
    N: int,
    family: PostHocFamily,
    method: TestMethod = TestMethod.wald,
    alpha: float = 0.05,
) -> t.List[ClosedTestResult]:
    """
    Closed testing over one predefined family.

    Every intersection of members is tested on the union of their masks; the adjusted p-value of a member
    is the largest p-value over all intersections containing it.
    """
    alpha = check_alpha(alpha)
    members = family_members(est, family)
    if len(members) > MAX_CLOSED_FAMILY:
        raise DomainError("family size", len(members), f"at most {MAX_CLOSED_FAMILY} members")

    adjusted = [0.0] * len(members)
    raw: t.List[t.Optional[TestResult]] = [None] * len(members)
    for size in range(1, len(members) + 1):
        for subset in itertools.combinations(range(len(members)), size):
            mask = np.logical_or.reduce([members[index][1] for index in subset])
            label = "+".join(members[index][0] for index in subset)
            result = subvector_test(est, cov, N, mask, method, alpha, label=label)
            for index in subset:
                adjusted[index] = max(adjusted[index], result.p_value)
            if size == 1:
                raw[subset[0]] = result

    logger.debug(f"Closed testing over {len(members)} {family.value} member(s) took {2 ** len(members) - 1} sub-vector tests")
    return [
        ClosedTestResult(family, label, raw[index], adjusted[index], adjusted[index] < alpha)
        for index, (label, _) in enumerate(members)
    ]

# endregion
