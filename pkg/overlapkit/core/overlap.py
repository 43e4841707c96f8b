"""
Plug-in estimators of the niche overlap index.

The canonical definition is the plug-in integral

    I(G, F) = 2 * (integral of G dF above the median of F - integral of G dF below it),

evaluated with empirical distribution functions. `F` is the splitting sample, `G` the evaluated
(or reference) distribution. For odd sample sizes the median observation carries half of its mass
to each side, so it drops out of the difference. The rank formulas are fast paths, verified against
the plug-in sum.
"""
import typing as t
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from overlapkit.config import Estimand, WeightMode
from overlapkit.core.empirical import GroupedDataset, Sample, WeightScheme, ecdf_values, midranks
from overlapkit.core.errors import ContractError, InputError, UnsupportedWeightsError

# Bound on booleans materialized at once by the batched estimator
BATCH_ELEMENT_LIMIT = 4_000_000


@dataclass(frozen=True)
class OverlapMatrix:
    """
    Estimated overlap indices, one row per group and one column per component.

    Flattening is group-major (group outer, component inner).
    """

    entries: np.ndarray
    weights: t.Optional[WeightScheme]
    group_labels: t.Tuple[str, ...]
    component_labels: t.Tuple[str, ...]

    def flatten(self) -> np.ndarray:
        return np.ascontiguousarray(self.entries).ravel()

    @property
    def labels(self) -> t.List[t.Tuple[str, str]]:
        return [(group, component) for group in self.group_labels for component in self.component_labels]


@dataclass(frozen=True)
class PairwiseOverlap:
    """`entries[j, i, s]` is `I(F_j, F_i)` on component `s`, group `i` splits at its median."""

    entries: np.ndarray
    group_labels: t.Tuple[str, ...]
    component_labels: t.Tuple[str, ...]


def split_bounds(n: int) -> t.Tuple[int, int]:
    """
    Sorted positions `[0, lower_end)` below the median and `[upper_start, n)` above it.

    For odd `n` the median position `n // 2` belongs to neither side.
    """
    return n // 2, (n + 1) // 2


def split_difference(reference_at_sorted: np.ndarray) -> np.ndarray:
    """
    `2/n * (sum above median - sum below median)` over the last axis.

    `reference_at_sorted` holds the reference distribution evaluated at the sorted splitting sample.
    """
    n = reference_at_sorted.shape[-1]
    lower_end, upper_start = split_bounds(n)
    upper = reference_at_sorted[..., upper_start:].sum(axis=-1)
    lower = reference_at_sorted[..., :lower_end].sum(axis=-1)
    return 2 * (upper - lower) / n


def pairwise_overlap(splitter: Sample, evaluated: Sample) -> float:
    """Plug-in `I(F_evaluated, F_splitter)`: how much of `evaluated` lies around the median of `splitter`."""
    return float(split_difference(ecdf_values(evaluated.values, splitter.values)))


def _even_split_rank_overlap(x: Sample, y: Sample) -> float:
    """Two-sample rank identity `2/(mn) * (R_upper - R_lower) - m/(2n)` for even `m` and untied data."""
    n, m = x.n, y.n
    ranks = midranks(np.concatenate([x.values, y.values]))[n:]
    lower_end, upper_start = split_bounds(m)
    return float(2 * (ranks[upper_start:].sum() - ranks[:lower_end].sum()) / (m * n) - m / (2 * n))


def two_sample_overlap(x: t.Sequence[Sample], y: t.Sequence[Sample]) -> np.ndarray:
    """
    Componentwise two-sample index `I(F, G)`, where `x` ~ `F` is evaluated and `y` ~ `G` splits.

    Even `m` with untied data goes through the rank identity, anything else through the exact plug-in sum.
    """
    if len(x) != len(y):
        raise ContractError("Both samples need the same number of components", expected=len(x), actual=len(y))

    result = np.empty(len(x))
    for s, (x_s, y_s) in enumerate(zip(x, y)):
        untied = not x_s.has_ties and not y_s.has_ties and np.intersect1d(x_s.values, y_s.values).size == 0
        if y_s.n % 2 == 0 and untied:
            result[s] = _even_split_rank_overlap(x_s, y_s)
        else:
            result[s] = pairwise_overlap(y_s, x_s)
    return result


def _check_weights(data: GroupedDataset, weights: WeightScheme) -> None:
    if len(weights.weights) != data.k:
        raise ContractError("Weight count doesn't match group count", expected=data.k, actual=len(weights.weights))


def reference_overlap(data: GroupedDataset, weights: WeightScheme) -> OverlapMatrix:
    """Plug-in estimate of `I(H, F_i)` for every group and component, with `H` the weighted mixture of all groups."""
    _check_weights(data, weights)
    lam = weights.array
    entries = np.empty((data.k, data.d))

    for s in range(data.d):
        sorted_groups = [np.sort(group[:, s]) for group in data.groups]
        for i, splitter in enumerate(sorted_groups):
            reference = np.zeros(splitter.size)
            for j, evaluated in enumerate(sorted_groups):
                reference = reference + lam[j] * ecdf_values(evaluated, splitter)
            entries[i, s] = split_difference(reference)

    return OverlapMatrix(entries, weights, data.group_labels, data.component_labels)


def pairwise_overlap_matrix(data: GroupedDataset) -> PairwiseOverlap:
    entries = np.empty((data.k, data.k, data.d))
    for s in range(data.d):
        samples = [data.sample(i, s) for i in range(data.k)]
        for j, evaluated in enumerate(samples):
            for i, splitter in enumerate(samples):
                entries[j, i, s] = pairwise_overlap(splitter, evaluated)
    return PairwiseOverlap(entries, data.group_labels, data.component_labels)


def linear_reference_overlap(data: GroupedDataset, weights: WeightScheme) -> OverlapMatrix:
    """Reference overlap assembled as the convex combination `sum_j lambda_j I(F_j, F_i)` of pairwise overlaps."""
    _check_weights(data, weights)
    pairwise = pairwise_overlap_matrix(data).entries
    entries = np.tensordot(weights.array, pairwise, axes=(0, 0))
    return OverlapMatrix(entries, weights, data.group_labels, data.component_labels)


def leave_one_out_decomposition(data: GroupedDataset, weights: WeightScheme) -> t.Tuple[np.ndarray, np.ndarray]:
    """
    Split every entry into `lambda_i * I(F_i, F_i)` and `(1 - lambda_i) * I(H_-i, F_i)`.

    `H_-i` is the mixture of all other groups, renormalized. Both parts are `k x d`, their sum is the reference overlap.
    """
    _check_weights(data, weights)
    lam = weights.array
    pairwise = pairwise_overlap_matrix(data).entries
    own = np.empty((data.k, data.d))
    rest = np.zeros((data.k, data.d))
    for i in range(data.k):
        own[i] = lam[i] * pairwise[i, i]
        for j in range(data.k):
            if j != i:
                rest[i] += lam[j] * pairwise[j, i]
    return own, rest


def _is_proportional(data: GroupedDataset, weights: WeightScheme) -> bool:
    if weights.mode is WeightMode.proportional:
        return True
    expected = np.asarray(data.sizes, dtype=float) / data.N
    return bool(np.allclose(weights.array, expected, rtol=0, atol=1e-12))


def rank_reference_overlap(data: GroupedDataset, weights: WeightScheme) -> OverlapMatrix:
    """
    Rank fast path of `reference_overlap` for proportional weights.

    With `lambda_j = n_j / N` the reference distribution at `x` is the pooled count of observations `<= x`
    divided by `N`, that is the maximum rank of `x` in the combined sample. Every entry becomes
    `2/(n_i N) * (sum of upper combined ranks - sum of lower combined ranks)`.
    """
    _check_weights(data, weights)
    if not _is_proportional(data, weights):
        raise UnsupportedWeightsError("The rank formula requires proportional weights", expected="n_i / N", actual=weights.weights)

    entries = np.empty((data.k, data.d))
    bounds = np.cumsum((0,) + data.sizes)
    for s in range(data.d):
        pooled = np.concatenate([group[:, s] for group in data.groups])
        combined = rankdata(pooled, method="max")
        for i in range(data.k):
            ranks = np.sort(combined[bounds[i]:bounds[i + 1]])
            n_i = ranks.size
            lower_end, upper_start = split_bounds(n_i)
            entries[i, s] = 2 * (ranks[upper_start:].sum() - ranks[:lower_end].sum()) / (n_i * data.N)

    return OverlapMatrix(entries, weights, data.group_labels, data.component_labels)


def printed_rank_overlap(data: GroupedDataset) -> OverlapMatrix:
    """
    Rank formula with within-sample ranks subtracted from combined ranks.

    This variant drops the contribution of group `i` to its own reference distribution,
    so for even `n_i` it equals the plug-in estimate minus `lambda_i / 2`.
    """
    weights = WeightScheme.proportional(data.sizes)
    entries = np.empty((data.k, data.d))
    bounds = np.cumsum((0,) + data.sizes)
    for s in range(data.d):
        pooled = np.concatenate([group[:, s] for group in data.groups])
        combined = rankdata(pooled, method="max")
        for i in range(data.k):
            values = pooled[bounds[i]:bounds[i + 1]]
            order = np.argsort(values, kind="stable")
            excess = combined[bounds[i]:bounds[i + 1]][order] - rankdata(values, method="max")[order]
            n_i = values.size
            lower_end, upper_start = split_bounds(n_i)
            entries[i, s] = 2 * (excess[upper_start:].sum() - excess[:lower_end].sum()) / (n_i * data.N)

    return OverlapMatrix(entries, weights, data.group_labels, data.component_labels)


def overlap_sum(first: Sample, second: Sample) -> float:
    """`I(first, second) + I(second, first)`, which always lies in `[0, 1]`."""
    return pairwise_overlap(second, first) + pairwise_overlap(first, second)


def two_sample_matrix(data: GroupedDataset) -> OverlapMatrix:
    """Two-sample estimand on the first two groups, as a one-row `OverlapMatrix`."""
    if data.k != 2:
        raise InputError(f"The two-sample estimand needs exactly 2 groups, got {data.k}")
    x = [data.sample(0, s) for s in range(data.d)]
    y = [data.sample(1, s) for s in range(data.d)]
    label = f"{data.group_labels[0]}|{data.group_labels[1]}"
    return OverlapMatrix(two_sample_overlap(x, y)[None, :], None, (label,), data.component_labels)


def estimate(data: GroupedDataset, weights: WeightScheme, estimand: Estimand = Estimand.reference) -> OverlapMatrix:
    """Point estimate of the chosen estimand, proportional weights take the rank fast path."""
    if estimand is Estimand.two_sample:
        return two_sample_matrix(data)
    _check_weights(data, weights)
    if _is_proportional(data, weights):
        return rank_reference_overlap(data, weights)
    return reference_overlap(data, weights)


# region: Batched estimators used by the bootstrap

def _chunk_size(batch: int, sizes: t.Sequence[int]) -> int:
    per_replicate = max(sizes) * sum(sizes)
    return max(1, min(batch, BATCH_ELEMENT_LIMIT // max(per_replicate, 1)))


def _ecdf_batched(sorted_evaluated: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Row-wise `#{x <= t} / n`, `sorted_evaluated` is `B x n`, `points` is `B x m`."""
    counts = (sorted_evaluated[:, None, :] <= points[:, :, None]).sum(axis=-1)
    return counts / sorted_evaluated.shape[1]


def batched_reference_overlap(tables: t.Sequence[np.ndarray], weights: WeightScheme) -> np.ndarray:
    """
    Reference overlap for a stack of datasets at once.

    `tables[i]` is `B x n_i x d`; the result is `B x k x d`, row `b` equal to `reference_overlap` of dataset `b`.
    """
    lam = weights.array
    batch, d = tables[0].shape[0], tables[0].shape[2]
    sizes = [table.shape[1] for table in tables]
    result = np.empty((batch, len(tables), d))
    step = _chunk_size(batch, sizes)

    for start in range(0, batch, step):
        stop = min(start + step, batch)
        for s in range(d):
            sorted_groups = [np.sort(table[start:stop, :, s], axis=1) for table in tables]
            for i, splitter in enumerate(sorted_groups):
                reference = np.zeros(splitter.shape)
                for j, evaluated in enumerate(sorted_groups):
                    reference = reference + lam[j] * _ecdf_batched(evaluated, splitter)
                result[start:stop, i, s] = split_difference(reference)
    return result


def batched_two_sample_overlap(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Two-sample index for stacks `x` (`B x n x d`) and `y` (`B x m x d`), result `B x 1 x d`."""
    batch, d = x.shape[0], x.shape[2]
    result = np.empty((batch, 1, d))
    step = _chunk_size(batch, [x.shape[1], y.shape[1]])

    for start in range(0, batch, step):
        stop = min(start + step, batch)
        for s in range(d):
            splitter = np.sort(y[start:stop, :, s], axis=1)
            evaluated = np.sort(x[start:stop, :, s], axis=1)
            result[start:stop, 0, s] = split_difference(_ecdf_batched(evaluated, splitter))
    return result


def batched_estimate(tables: t.Sequence[np.ndarray], weights: WeightScheme, estimand: Estimand = Estimand.reference) -> np.ndarray:
    """Flattened estimates of a stack of datasets, `B x (rows * d)` in group-major order."""
    if estimand is Estimand.two_sample:
        stacked = batched_two_sample_overlap(tables[0], tables[1])
    else:
        stacked = batched_reference_overlap(tables, weights)
    return stacked.reshape(stacked.shape[0], -1)

# endregion
