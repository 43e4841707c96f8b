"""
Group-wise vector bootstrap of the overlap estimates.

Whole `d`-dimensional rows are resampled within every group, which keeps the dependence between
components. Random streams are derived from `(seed, replicate, group)` and replicates are processed
in fixed-size chunks, so the output doesn't depend on the number of workers.
"""
import typing as t
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from overlapkit.config import BOOTSTRAP_CHUNK, Estimand
from overlapkit.core.empirical import GroupedDataset, Sample, WeightScheme, empirical_quantile
from overlapkit.core.errors import DomainError, InputError
from overlapkit.core.numerics import CorrelationMatrix
from overlapkit.core.overlap import batched_estimate

SEED_MASK = (1 << 64) - 1
DEGENERATE_SD = 1e-14


@dataclass(frozen=True)
class ReplicateMatrix:
    """`replicates[b]` is the flattened overlap estimate of the `b`-th bootstrap dataset."""

    replicates: np.ndarray
    seed: int
    estimand: Estimand = Estimand.reference

    @property
    def B(self) -> int:
        return self.replicates.shape[0]

    @property
    def dimension(self) -> int:
        return self.replicates.shape[1]

    @property
    def degenerate(self) -> np.ndarray:
        """Components whose replicates don't vary, by the same standard deviation cut-off as `CovarianceEstimate`."""
        if self.B < 2:
            return np.ones(self.dimension, dtype=bool)
        return self.replicates.std(axis=0, ddof=1) <= DEGENERATE_SD


@dataclass(frozen=True)
class CovarianceEstimate:
    """
    Bootstrap covariance on the asymptotic scale.

    `sigma_star` is `N` times the sample covariance of the replicates, `component_sd` are
    standard deviations on the scale of the estimates. Components without spread are flagged in `degenerate`.
    """

    sigma_star: np.ndarray
    correlation: CorrelationMatrix
    component_sd: np.ndarray
    degenerate: np.ndarray
    N: int
    notes: t.Tuple[str, ...] = field(default=())

    @classmethod
    def from_sigma_star(cls, sigma_star: np.ndarray, N: int) -> "CovarianceEstimate":
        """Derive standard deviations, degeneracy flags and the correlation from `sigma_star`."""
        sigma_star = np.atleast_2d(np.asarray(sigma_star, dtype=float))
        sigma_star = (sigma_star + sigma_star.T) / 2
        variances = np.clip(np.diag(sigma_star), 0.0, None)
        component_sd = np.sqrt(variances / N)
        degenerate = component_sd <= DEGENERATE_SD

        scale = np.sqrt(variances)
        correlation = np.eye(sigma_star.shape[0])
        alive = ~degenerate
        if alive.any():
            block = sigma_star[np.ix_(alive, alive)] / np.outer(scale[alive], scale[alive])
            correlation[np.ix_(alive, alive)] = np.clip(block, -1.0, 1.0)
        np.fill_diagonal(correlation, 1.0)

        notes = ()
        if degenerate.any():
            notes = (f"{int(degenerate.sum())} component(s) have zero bootstrap spread and are flagged degenerate",)
        return cls(sigma_star, CorrelationMatrix.from_array(correlation), component_sd, degenerate, N, notes)

    @property
    def dimension(self) -> int:
        return self.sigma_star.shape[0]

    def submatrix(self, indices: t.Sequence[int]) -> "CovarianceEstimate":
        """Principal submatrix for the components in `indices`."""
        indices = np.asarray(indices, dtype=int)
        return CovarianceEstimate.from_sigma_star(self.sigma_star[np.ix_(indices, indices)], self.N)


def replicate_rng(seed: int, replicate: int, group: int) -> np.random.Generator:
    """Counter based stream for one group of one replicate."""
    return np.random.default_rng([seed & SEED_MASK, replicate, group])


def resample_group(group: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw `n` rows uniformly with replacement, rows are copied intact."""
    n = group.shape[0]
    return group[rng.integers(0, n, size=n)]


def canonical_order(group: np.ndarray) -> np.ndarray:
    """Rows sorted lexicographically (first component first), so the input order can't influence resampling."""
    keys = tuple(group[:, s] for s in reversed(range(group.shape[1])))
    return group[np.lexsort(keys)]


def _replicate_chunk(
    tables: t.Sequence[np.ndarray],
    weights: WeightScheme,
    estimand: Estimand,
    seed: int,
    start: int,
    stop: int,
) -> np.ndarray:
    resampled = [
        np.stack([resample_group(table, replicate_rng(seed, b, i)) for b in range(start, stop)])
        for i, table in enumerate(tables)
    ]
    return batched_estimate(resampled, weights, estimand)


def bootstrap_replicates(
    data: GroupedDataset,
    weights: WeightScheme,
    B: int,
    seed: int,
    workers: int = 1,
    estimand: Estimand = Estimand.reference,
) -> ReplicateMatrix:
    """
    Resample every group independently `B` times and re-estimate the overlap vector.

    `workers` only changes how chunks are scheduled, never the result.
    """
    if B < 1:
        raise DomainError("B", B, "positive integers")

    tables = [canonical_order(group) for group in data.groups]
    chunks = [(start, min(start + BOOTSTRAP_CHUNK, B)) for start in range(0, B, BOOTSTRAP_CHUNK)]
    logger.debug(f"Bootstrapping {B} replicates in {len(chunks)} chunks on {workers} worker(s)")

    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_replicate_chunk, tables, weights, estimand, seed, start, stop) for start, stop in chunks]
            blocks = [future.result() for future in futures]
    else:
        blocks = [_replicate_chunk(tables, weights, estimand, seed, start, stop) for start, stop in chunks]

    replicates = np.concatenate(blocks, axis=0)
    replicates.setflags(write=False)
    return ReplicateMatrix(replicates, seed, estimand)


def bootstrap_covariance(rep: ReplicateMatrix, N: int) -> CovarianceEstimate:
    """`N` times the unbiased sample covariance of the replicate rows, with derived correlation and standard deviations."""
    if rep.B < 2:
        raise InputError(f"A covariance estimate needs at least 2 replicates, got {rep.B}")

    sigma_star = N * np.atleast_2d(np.cov(rep.replicates, rowvar=False, ddof=1))
    estimate = CovarianceEstimate.from_sigma_star(sigma_star, N)
    for note in estimate.notes:
        logger.warning(note)
    return estimate


def bootstrap_quantiles(rep: ReplicateMatrix, center: np.ndarray, N: int, probs: t.Sequence[float]) -> np.ndarray:
    """
    Componentwise quantiles of `sqrt(N) * (replicate - center)`.

    Returns a `len(probs) x dimension` array, using the `inf` quantile convention.
    """
    if len(probs) == 0:
        raise InputError("At least one probability level is required")
    for prob in probs:
        if not 0 < prob < 1:
            raise DomainError("probs", prob, "(0, 1)")

    scaled = np.sqrt(N) * (rep.replicates - np.asarray(center, dtype=float)[None, :])
    result = np.empty((len(probs), rep.dimension))
    for s in range(rep.dimension):
        sample = Sample.from_values(scaled[:, s])
        for row, prob in enumerate(probs):
            result[row, s] = empirical_quantile(sample, prob)
    return result
