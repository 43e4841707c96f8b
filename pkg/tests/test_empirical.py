import numpy as np
import pytest

from overlapkit.config import WeightMode
from overlapkit.core.empirical import (
    GroupedDataset, Sample, WeightScheme, ecdf_eval, empirical_quantile, midranks
)
from overlapkit.core.errors import ContractError, DomainError, InputError


@pytest.mark.parametrize(
    ("values", "point", "expected"),
    [
        ([1, 2, 3], 2, 2 / 3),
        ([1, 2, 3], 0.5, 0.0),
        ([1, 3], 1, 0.5),
        ([1, 2, 2, 3], 2, 0.75),
        ([1, 2, 2, 3], 1.999, 0.25),
        ([1, 2, 2, 3], 3, 1.0),
    ],
)
def test_ecdf_is_right_continuous(values, point, expected):
    assert ecdf_eval(Sample.from_values(values), point) == pytest.approx(expected, abs=1e-15)


def test_ecdf_rejects_non_finite_points():
    with pytest.raises(DomainError):
        ecdf_eval(Sample.from_values([1, 2]), float("nan"))


@pytest.mark.parametrize(
    ("values", "level", "expected"),
    [
        ([1, 2, 3], 0.5, 2),
        ([1, 2, 3, 4], 0.5, 2),
        ([5], 1.0, 5),
        ([4, 1, 3, 2], 0.26, 2),
        ([4, 1, 3, 2], 1.0, 4),
    ],
)
def test_empirical_quantile_uses_generalized_inverse(values, level, expected):
    assert empirical_quantile(Sample.from_values(values), level) == expected


@pytest.mark.parametrize("level", [0.0, -0.1, 1.01])
def test_empirical_quantile_domain(level):
    with pytest.raises(DomainError):
        empirical_quantile(Sample.from_values([1, 2, 3]), level)


def test_quantile_and_ecdf_are_galois_connected(rng):
    sample = Sample.from_values(rng.integers(0, 5, size=17))
    for level in np.linspace(0.01, 1.0, 100):
        assert ecdf_eval(sample, empirical_quantile(sample, level)) >= level


@pytest.mark.parametrize(
    ("values", "expected"),
    [
        ([10, 20, 30], [1, 2, 3]),
        ([10, 10, 30], [1.5, 1.5, 3]),
        ([7, 7, 7], [2, 2, 2]),
        ([3, 1, 3], [2.5, 1, 2.5]),
    ],
)
def test_midranks(values, expected):
    np.testing.assert_array_equal(midranks(values), expected)


def test_sample_keeps_sorted_values_and_original_order():
    sample = Sample.from_values([3.0, 1.0, 2.0])
    np.testing.assert_array_equal(sample.values, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(sample.order, [1, 2, 0])
    assert not sample.has_ties
    assert Sample.from_values([1, 1, 2]).has_ties


@pytest.mark.parametrize("values", [[], [1.0, float("inf")]])
def test_sample_rejects_empty_or_non_finite(values):
    with pytest.raises(InputError):
        Sample.from_values(values)


def test_grouped_dataset_shape_and_labels():
    data = GroupedDataset.from_arrays([[[1, 2], [3, 4]], [[5, 6], [7, 8], [9, 10]]], ["A", "B"], ["x", "y"])
    assert (data.k, data.d, data.N) == (2, 2, 5)
    assert data.sizes == (2, 3)
    assert data.variable_labels() == ["A x", "A y", "B x", "B y"]
    np.testing.assert_array_equal(data.sample(1, 0).values, [5, 7, 9])


def test_grouped_dataset_defaults_labels_and_accepts_vectors():
    data = GroupedDataset.from_arrays([[1, 2, 3], [4, 5]])
    assert data.group_labels == ("G1", "G2")
    assert data.component_labels == ("C1",)
    assert data.d == 1


def test_grouped_dataset_validation():
    with pytest.raises(ContractError):
        GroupedDataset.from_arrays([np.zeros((3, 2)), np.zeros((3, 3))])
    with pytest.raises(InputError):
        GroupedDataset.from_arrays([np.zeros((3, 2)), np.zeros((1, 2))])
    with pytest.raises(ContractError):
        GroupedDataset.from_arrays([np.zeros((3, 2))], ["A", "B"])


def test_tied_components_looks_at_pooled_values():
    data = GroupedDataset.from_arrays([[[1, 1], [2, 2]], [[3, 2], [4, 5]]], component_labels=["x", "y"])
    assert data.tied_components() == ["y"]


def test_weight_schemes():
    assert WeightScheme.proportional((2, 6)).weights == (0.25, 0.75)
    assert WeightScheme.equal(4).weights == (0.25,) * 4
    assert WeightScheme.custom([0.2, 0.8]).mode is WeightMode.custom

    with pytest.raises(DomainError):
        WeightScheme.custom([0.2, 0.7])
    with pytest.raises(DomainError):
        WeightScheme.custom([-0.5, 1.5])


def test_weights_for_dataset():
    data = GroupedDataset.from_arrays([[1, 2], [3, 4, 5, 6]])
    assert WeightScheme.for_dataset(data, WeightMode.proportional).weights == pytest.approx((1 / 3, 2 / 3))
    assert WeightScheme.for_dataset(data, WeightMode.equal).weights == (0.5, 0.5)
    with pytest.raises(InputError):
        WeightScheme.for_dataset(data, WeightMode.custom)
    with pytest.raises(ContractError):
        WeightScheme.for_dataset(data, WeightMode.custom, [1.0])
