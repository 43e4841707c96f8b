import numpy as np
import pytest

from overlapkit.config import Estimand
from overlapkit.core.bootstrap import (
    CovarianceEstimate, ReplicateMatrix, bootstrap_covariance, bootstrap_quantiles, bootstrap_replicates,
    canonical_order, replicate_rng, resample_group
)
from overlapkit.core.empirical import GroupedDataset, WeightScheme
from overlapkit.core.errors import DomainError, InputError
from overlapkit.core.overlap import reference_overlap


@pytest.fixture
def small_dataset(rng) -> GroupedDataset:
    return GroupedDataset.from_arrays([rng.normal(size=(9, 2)), rng.normal(0.5, 1.0, size=(12, 2))])


def test_resampling_copies_whole_rows(rng):
    group = np.arange(12, dtype=float).reshape(6, 2)
    resampled = resample_group(group, replicate_rng(5, 0, 0))
    assert resampled.shape == group.shape
    rows = {tuple(row) for row in group}
    assert all(tuple(row) in rows for row in resampled)


def test_resampling_a_constant_group_is_the_identity():
    group = np.tile([1.0, 2.0], (5, 1))
    np.testing.assert_array_equal(resample_group(group, replicate_rng(1, 3, 0)), group)


def test_resampling_is_reproducible():
    group = np.arange(3, dtype=float)[:, None]
    first = resample_group(group, replicate_rng(11, 0, 0))
    second = resample_group(group, replicate_rng(11, 0, 0))
    np.testing.assert_array_equal(first, second)


def test_canonical_order_sorts_rows_lexicographically():
    group = np.array([[2.0, 1.0], [1.0, 5.0], [1.0, 3.0]])
    np.testing.assert_array_equal(canonical_order(group), [[1.0, 3.0], [1.0, 5.0], [2.0, 1.0]])


def test_replicates_are_deterministic(small_dataset):
    weights = WeightScheme.proportional(small_dataset.sizes)
    first = bootstrap_replicates(small_dataset, weights, B=3, seed=42)
    second = bootstrap_replicates(small_dataset, weights, B=3, seed=42)
    assert first.replicates.shape == (3, 4)
    np.testing.assert_array_equal(first.replicates, second.replicates)
    assert not first.replicates.flags.writeable


def test_replicates_do_not_depend_on_workers_or_row_order(small_dataset, rng):
    weights = WeightScheme.equal(2)
    serial = bootstrap_replicates(small_dataset, weights, B=150, seed=3)
    parallel = bootstrap_replicates(small_dataset, weights, B=150, seed=3, workers=3)
    np.testing.assert_array_equal(serial.replicates, parallel.replicates)

    shuffled = GroupedDataset.from_arrays([rng.permutation(group) for group in small_dataset.groups])
    np.testing.assert_array_equal(bootstrap_replicates(shuffled, weights, B=150, seed=3).replicates, serial.replicates)


def test_replicate_rows_are_estimates_of_the_resampled_data(small_dataset):
    weights = WeightScheme.custom([0.4, 0.6])
    rep = bootstrap_replicates(small_dataset, weights, B=5, seed=8)
    tables = [canonical_order(group) for group in small_dataset.groups]
    for b in range(rep.B):
        resampled = GroupedDataset.from_arrays([resample_group(table, replicate_rng(8, b, i)) for i, table in enumerate(tables)])
        np.testing.assert_allclose(rep.replicates[b], reference_overlap(resampled, weights).flatten(), rtol=0, atol=1e-12)


def test_single_valued_groups_give_identical_rows():
    data = GroupedDataset.from_arrays([np.ones((4, 2)), np.full((5, 2), 2.0)])
    rep = bootstrap_replicates(data, WeightScheme.proportional(data.sizes), B=10, seed=0)
    np.testing.assert_array_equal(rep.replicates, np.tile(rep.replicates[0], (10, 1)))


def test_two_sample_replicates(small_dataset):
    rep = bootstrap_replicates(small_dataset, WeightScheme.equal(2), B=4, seed=1, estimand=Estimand.two_sample)
    assert rep.dimension == 2
    assert rep.estimand is Estimand.two_sample


def test_replicate_count_must_be_positive(small_dataset):
    with pytest.raises(DomainError):
        bootstrap_replicates(small_dataset, WeightScheme.equal(2), B=0, seed=1)


def test_covariance_example():
    rep = ReplicateMatrix(np.array([[0.0, 0.0], [1.0, 1.0]]), seed=0)
    cov = bootstrap_covariance(rep, N=2)
    np.testing.assert_allclose(cov.sigma_star, [[1.0, 1.0], [1.0, 1.0]])
    np.testing.assert_allclose(cov.correlation.entries, [[1.0, 1.0], [1.0, 1.0]])
    np.testing.assert_allclose(cov.component_sd, [np.sqrt(0.5)] * 2)
    assert not cov.degenerate.any()


def test_constant_replicates_are_flagged_degenerate():
    rep = ReplicateMatrix(np.full((6, 3), 0.5), seed=0)
    cov = bootstrap_covariance(rep, N=20)
    np.testing.assert_array_equal(cov.sigma_star, np.zeros((3, 3)))
    assert cov.degenerate.all()
    np.testing.assert_array_equal(cov.correlation.entries, np.eye(3))
    assert "3 component(s)" in cov.notes[0]
    assert rep.degenerate.all()


def test_covariance_is_symmetric_and_positive_semidefinite(small_dataset):
    rep = bootstrap_replicates(small_dataset, WeightScheme.equal(2), B=60, seed=9)
    cov = bootstrap_covariance(rep, small_dataset.N)
    np.testing.assert_array_equal(cov.sigma_star, cov.sigma_star.T)
    assert np.linalg.eigvalsh(cov.sigma_star).min() > -1e-12


def test_covariance_needs_two_replicates():
    with pytest.raises(InputError):
        bootstrap_covariance(ReplicateMatrix(np.zeros((1, 2)), seed=0), N=10)


def test_submatrix_keeps_the_selected_block():
    cov = CovarianceEstimate.from_sigma_star(np.array([[1.0, 0.2, 0.0], [0.2, 2.0, 0.5], [0.0, 0.5, 3.0]]), N=50)
    sub = cov.submatrix([0, 2])
    np.testing.assert_array_equal(sub.sigma_star, [[1.0, 0.0], [0.0, 3.0]])
    assert sub.N == 50


def test_quantiles_use_the_infimum_convention():
    rep = ReplicateMatrix(np.array([[-2.0], [-1.0], [1.0], [2.0]]), seed=0)
    np.testing.assert_array_equal(bootstrap_quantiles(rep, np.zeros(1), N=1, probs=[0.5]), [[-1.0]])


def test_quantiles_of_constant_replicates_are_zero():
    rep = ReplicateMatrix(np.full((5, 2), 0.3), seed=0)
    np.testing.assert_array_equal(bootstrap_quantiles(rep, np.full(2, 0.3), N=10, probs=[0.05, 0.95]), np.zeros((2, 2)))


def test_quantiles_of_symmetric_clouds_are_symmetric(rng):
    rep = ReplicateMatrix(rng.normal(size=(4000, 2)), seed=0)
    low, high = bootstrap_quantiles(rep, np.zeros(2), N=1, probs=[0.05, 0.95])
    np.testing.assert_allclose(low, -high, atol=0.15)


@pytest.mark.parametrize("probs", [[], [0.0], [1.0]])
def test_quantile_levels_are_validated(probs):
    rep = ReplicateMatrix(np.zeros((3, 1)), seed=0)
    with pytest.raises((InputError, DomainError)):
        bootstrap_quantiles(rep, np.zeros(1), N=1, probs=probs)
