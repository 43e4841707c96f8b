"""
Simultaneous confidence intervals for the overlap vector and the elliptical confidence region.

All bounds are reported twice: raw, and clipped to the parameter space `[0, 1]`.
"""
import typing as t
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from overlapkit.config import IntervalMethod
from overlapkit.core.bootstrap import CovarianceEstimate, ReplicateMatrix, bootstrap_quantiles
from overlapkit.core.errors import ContractError, DegenerateCovarianceError, DomainError
from overlapkit.core.numerics import (
    CorrelationMatrix, McParams, chi_square_quantile, equicoordinate_quantile, quadratic_form_matrix
)
from overlapkit.core.overlap import OverlapMatrix

Estimate = t.Union[OverlapMatrix, np.ndarray, t.Sequence[float]]

# Below this many replicates beyond each Bonferroni quantile, the quantiles are unreliable
MIN_TAIL_REPLICATES = 5
BOUNDARY_TOLERANCE = 1e-12


def unpack_estimate(est: Estimate) -> t.Tuple[np.ndarray, t.Tuple[str, ...]]:
    """Flattened estimate and its `group component` labels."""
    if isinstance(est, OverlapMatrix):
        return est.flatten(), tuple(f"{group} {component}" for group, component in est.labels)
    vector = np.asarray(est, dtype=float).ravel()
    return vector, tuple(f"V{index + 1}" for index in range(vector.size))


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise DomainError("alpha", alpha, "(0, 1)")
    return alpha


def _check_dimension(vector: np.ndarray, dimension: int) -> None:
    if vector.size != dimension:
        raise ContractError("Estimate and covariance dimensions differ", expected=dimension, actual=vector.size)


@dataclass(frozen=True)
class IntervalSet:
    """Simultaneous intervals, one per component of the flattened overlap vector."""

    method: IntervalMethod
    level: float
    estimate: np.ndarray
    raw_lower: np.ndarray
    raw_upper: np.ndarray
    labels: t.Tuple[str, ...]
    flagged: t.Tuple[bool, ...] = field(default=())
    notes: t.Tuple[str, ...] = field(default=())

    @property
    def lower(self) -> np.ndarray:
        return np.clip(self.raw_lower, 0.0, 1.0)

    @property
    def upper(self) -> np.ndarray:
        return np.clip(self.raw_upper, 0.0, 1.0)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def covers(self, truth: t.Sequence[float]) -> bool:
        """True when every component interval contains the matching entry of `truth`."""
        truth = np.asarray(truth, dtype=float).ravel()
        _check_dimension(truth, self.estimate.size)
        return bool(np.all((self.lower <= truth) & (truth <= self.upper)))

    def excludes(self, value: float) -> np.ndarray:
        """Components whose raw interval lies entirely on one side of `value`."""
        return (self.raw_lower > value) | (self.raw_upper < value)

    def to_dict(self) -> t.Dict[str, t.Any]:
        return {
            "method": self.method.value,
            "level": self.level,
            "labels": list(self.labels),
            "estimate": self.estimate.tolist(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "raw_lower": self.raw_lower.tolist(),
            "raw_upper": self.raw_upper.tolist(),
            "flagged": list(self.flagged),
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, payload: t.Dict[str, t.Any]) -> "IntervalSet":
        return cls(
            method=IntervalMethod(payload["method"]),
            level=float(payload["level"]),
            estimate=np.asarray(payload["estimate"], dtype=float),
            raw_lower=np.asarray(payload["raw_lower"], dtype=float),
            raw_upper=np.asarray(payload["raw_upper"], dtype=float),
            labels=tuple(payload["labels"]),
            flagged=tuple(bool(flag) for flag in payload.get("flagged", ())),
            notes=tuple(payload.get("notes", ())),
        )


@dataclass(frozen=True)
class EllipseRegion:
    """
    `{v : (center - v)' shape (center - v) <= threshold}`.

    `shape` is `N` times the (pseudo)inverse of `sigma_star`, which is the middle matrix of the Wald statistic.
    """

    center: np.ndarray
    shape: np.ndarray
    threshold: float
    effective_rank: int
    notes: t.Tuple[str, ...] = field(default=())

    @property
    def dimension(self) -> int:
        return self.center.size


def bonferroni_sci(est: Estimate, rep: ReplicateMatrix, N: int, alpha: float) -> IntervalSet:
    """
    Basic bootstrap intervals at the Bonferroni adjusted levels `alpha / (2p)` and `1 - alpha / (2p)`.

    Component `s` is `[I_s - q_s(high) / sqrt(N), I_s - q_s(low) / sqrt(N)]` with `q_s` the quantiles of
    `sqrt(N) * (I*_s - I_s)`.

    Components whose replicates don't vary are flagged, when none vary there is nothing to resample.
    """
    alpha = check_alpha(alpha)
    center, labels = unpack_estimate(est)
    _check_dimension(center, rep.dimension)

    degenerate = rep.degenerate
    if degenerate.all():
        raise DegenerateCovarianceError("Every component has zero bootstrap spread, the percentile intervals collapse to points")

    p = center.size
    low, high = alpha / (2 * p), 1 - alpha / (2 * p)
    quantiles = bootstrap_quantiles(rep, center, N, [low, high])

    notes = []
    if rep.B * low < MIN_TAIL_REPLICATES:
        notes.append(f"Only {rep.B} bootstrap replicates for Bonferroni level {low:.3g}, the extreme quantiles are unreliable")
        logger.warning(notes[-1])
    if degenerate.any():
        notes.append(f"{int(degenerate.sum())} component(s) have zero bootstrap spread and are flagged degenerate")
        logger.warning(notes[-1])

    return IntervalSet(
        method=IntervalMethod.bonferroni,
        level=1 - alpha,
        estimate=center,
        raw_lower=center - quantiles[1] / np.sqrt(N),
        raw_upper=center - quantiles[0] / np.sqrt(N),
        labels=labels,
        flagged=tuple(bool(flag) for flag in degenerate),
        notes=tuple(notes),
    )


def mvt_sci(est: Estimate, cov: CovarianceEstimate, N: int, alpha: float, mc: McParams = McParams()) -> IntervalSet:
    """Intervals `I_s +/- q * sd_s` with `q` the equicoordinate normal quantile of the estimated correlation."""
    alpha = check_alpha(alpha)
    center, labels = unpack_estimate(est)
    _check_dimension(center, cov.dimension)

    alive = ~cov.degenerate
    if not alive.any():
        raise DegenerateCovarianceError("Every component has zero bootstrap spread, no normal based intervals exist")

    block = cov.correlation.entries[np.ix_(alive, alive)]
    critical = equicoordinate_quantile(CorrelationMatrix.from_array(block), 1 - alpha, mc)
    half_width = np.where(alive, critical * cov.component_sd, 0.0)

    notes = list(cov.notes)
    if not alive.all():
        notes.append(f"{int((~alive).sum())} degenerate component(s) got zero width intervals")

    return IntervalSet(
        method=IntervalMethod.mvt,
        level=1 - alpha,
        estimate=center,
        raw_lower=center - half_width,
        raw_upper=center + half_width,
        labels=labels,
        flagged=tuple(bool(flag) for flag in ~alive),
        notes=tuple(notes),
    )


def ellipse_projection_sci(est: Estimate, cov: CovarianceEstimate, N: int, alpha: float) -> IntervalSet:
    """Coordinate projections `I_s +/- sqrt(chi2_r(1 - alpha) * sigma_ss / N)` of the elliptical region."""
    alpha = check_alpha(alpha)
    center, labels = unpack_estimate(est)
    _check_dimension(center, cov.dimension)

    middle = quadratic_form_matrix(cov.sigma_star)
    rank = middle.rank if middle.rank > 0 else center.size
    threshold = chi_square_quantile(rank, 1 - alpha)
    half_width = np.sqrt(threshold * np.clip(np.diag(cov.sigma_star), 0.0, None) / N)

    notes = [middle.note] if middle.note else []
    return IntervalSet(
        method=IntervalMethod.ellipse_projection,
        level=1 - alpha,
        estimate=center,
        raw_lower=center - half_width,
        raw_upper=center + half_width,
        labels=labels,
        flagged=tuple(bool(flag) for flag in cov.degenerate),
        notes=tuple(notes),
    )


def build_ellipse_region(est: Estimate, cov: CovarianceEstimate, N: int, alpha: float) -> EllipseRegion:
    alpha = check_alpha(alpha)
    center, _ = unpack_estimate(est)
    _check_dimension(center, cov.dimension)

    middle = quadratic_form_matrix(cov.sigma_star)
    if middle.rank == 0:
        raise DegenerateCovarianceError("Covariance has effective rank 0, the elliptical region is undefined")
    threshold = chi_square_quantile(middle.rank, 1 - alpha)
    notes = (middle.note,) if middle.note else ()
    return EllipseRegion(center, N * middle.matrix, threshold, middle.rank, notes)


def ellipse_contains(region: EllipseRegion, v: t.Sequence[float]) -> bool:
    """Closed membership test, points on the boundary belong to the region."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size != region.dimension:
        raise ContractError("Point and region dimensions differ", expected=region.dimension, actual=v.size)

    deviation = region.center - v
    distance = float(deviation @ region.shape @ deviation)
    return distance <= region.threshold * (1 + BOUNDARY_TOLERANCE)


def build_intervals(
    methods: t.Iterable[IntervalMethod],
    est: Estimate,
    rep: ReplicateMatrix,
    cov: CovarianceEstimate,
    N: int,
    alpha: float,
    mc: McParams = McParams(),
) -> t.List[IntervalSet]:
    """Every requested construction, in the order given."""
    intervals = []
    for method in methods:
        if method is IntervalMethod.bonferroni:
            intervals.append(bonferroni_sci(est, rep, N, alpha))
        elif method is IntervalMethod.mvt:
            intervals.append(mvt_sci(est, cov, N, alpha, mc))
        else:
            intervals.append(ellipse_projection_sci(est, cov, N, alpha))
    return intervals
