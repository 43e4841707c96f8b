import math

import numpy as np
import pytest
from scipy import stats

from overlapkit.config import LognormalScale
from overlapkit.core.errors import DomainError
from overlapkit.simulation.samplers import (
    lognormal_moments, lognormal_transform, natural_scale_log_variance, sample_mvnormal, sample_mvt, substitute_lognormal
)


def test_zero_covariance_gives_the_mean(rng):
    rows = sample_mvnormal([1.0, 2.0], np.zeros((2, 2)), 5, rng)
    np.testing.assert_array_equal(rows, [[1.0, 2.0]] * 5)


def test_mvnormal_moments(rng):
    cov = np.array([[2.0, 0.5], [0.5, 1.0]])
    rows = sample_mvnormal([1.0, -1.0], cov, 200_000, rng)
    np.testing.assert_allclose(rows.mean(axis=0), [1.0, -1.0], atol=0.02)
    np.testing.assert_allclose(np.cov(rows, rowvar=False), cov, atol=0.03)


def test_mvnormal_shape_mismatch(rng):
    with pytest.raises(DomainError):
        sample_mvnormal([0.0, 0.0], np.eye(3), 4, rng)


def test_mvt_moments(rng):
    rows = sample_mvt([0.0, 0.0], np.eye(2), 10.0, 200_000, rng)
    np.testing.assert_allclose(rows.var(axis=0), [10 / 8] * 2, atol=0.05)
    # The shared chi-square draw makes the components dependent even under an identity scale
    assert stats.spearmanr(np.abs(rows[:, 0]), np.abs(rows[:, 1])).correlation > 0.01


@pytest.mark.parametrize("df", [0.0, -1.0])
def test_mvt_needs_positive_degrees_of_freedom(rng, df):
    with pytest.raises(DomainError):
        sample_mvt([0.0], [[1.0]], df, 3, rng)


def test_natural_scale_log_variance_solves_the_moment_equation():
    for variance in (0.1, 0.7, 3.0):
        log_variance = natural_scale_log_variance(variance)
        assert (math.exp(log_variance) - 1) * math.exp(log_variance) == pytest.approx(variance)
    with pytest.raises(DomainError):
        natural_scale_log_variance(0.0)


def test_natural_scale_lognormal_has_the_requested_moments(rng):
    values = lognormal_transform(rng.standard_normal(400_000), 1.0, 0.7, LognormalScale.natural)
    assert values.mean() == pytest.approx(1.0, abs=0.01)
    assert values.var() == pytest.approx(0.7, abs=0.03)


def test_log_scale_lognormal_moments(rng):
    mean, variance = lognormal_moments(-0.35, 0.7, LognormalScale.log)
    assert mean == pytest.approx(1.0)
    assert variance == pytest.approx(math.exp(0.7) - 1)

    values = lognormal_transform(rng.standard_normal(400_000), -0.35, 0.7, LognormalScale.log)
    assert values.min() > 0
    assert values.mean() == pytest.approx(mean, abs=0.01)
    assert lognormal_moments(-0.35, 0.7, LognormalScale.natural) == (-0.35, 0.7)


def test_substituted_component_keeps_the_ranks(rng):
    table = sample_mvnormal([1.0, 1.0, 1.0], [[1.0, 0.25, 0.25], [0.25, 1.0, 0.25], [0.25, 0.25, 1.0]], 500, rng)
    result = substitute_lognormal(table, 2, location=1.0, spread=1.0, mean=-0.35, variance=0.7)

    np.testing.assert_array_equal(result[:, :2], table[:, :2])
    np.testing.assert_array_equal(np.argsort(result[:, 2]), np.argsort(table[:, 2]))
    assert (result[:, 2] > 0).all()
    assert not np.shares_memory(result, table)


def test_substitution_validates_the_component(rng):
    with pytest.raises(DomainError):
        substitute_lognormal(np.zeros((3, 2)), 2, 0.0, 1.0, 0.0, 1.0)
