import math

import numpy as np
import pytest
from scipy import stats
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from overlapkit.core.errors import DomainError, LinearAlgebraError
from overlapkit.core.numerics import (
    CorrelationMatrix, McParams, chi_square_quantile, chi_square_sf, cholesky_psd, equicoordinate_quantile,
    f_nu_inf_quantile, f_nu_inf_sf, mvn_rectangle_prob, quadratic_form_matrix, std_normal_quantile, sym_pseudoinverse
)

MC = McParams(sample_count=20_000, seed=7)


def bisect(cdf, p, low=0.0, high=200.0):
    return brentq(lambda x: cdf(x) - p, low, high, xtol=1e-14, rtol=1e-14)


@pytest.mark.parametrize(("p", "expected"), [(0.5, 0.0), (0.975, 1.959964), (0.025, -1.959964)])
def test_std_normal_quantile(p, expected):
    assert std_normal_quantile(p) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize(
    ("df", "p", "expected"),
    [(2, 1 - math.exp(-1), 2.0), (1, 0.95, 3.841459), (6, 0.95, 12.5916)],
)
def test_chi_square_quantile(df, p, expected):
    assert chi_square_quantile(df, p) == pytest.approx(expected, rel=1e-5)


@pytest.mark.parametrize("df", [0.5, 1, 1.6, 3, 12.25, 40])
@pytest.mark.parametrize("p", [0.01, 0.5, 0.95, 0.999])
def test_chi_square_quantile_matches_bisection(df, p):
    oracle = bisect(lambda x: stats.chi2.cdf(x, df), p)
    assert chi_square_quantile(df, p) == pytest.approx(oracle, rel=1e-6)


@pytest.mark.parametrize(
    ("nu", "p", "expected"),
    [(1, 0.95, 3.841459), (2, 1 - math.exp(-1), 1.0), (10, 0.95, 1.83071)],
)
def test_f_nu_inf_quantile(nu, p, expected):
    assert f_nu_inf_quantile(nu, p) == pytest.approx(expected, rel=1e-5)


def test_survival_functions_invert_quantiles():
    assert chi_square_sf(3, chi_square_quantile(3, 0.9)) == pytest.approx(0.1, rel=1e-9)
    assert f_nu_inf_sf(1.6, f_nu_inf_quantile(1.6, 0.8)) == pytest.approx(0.2, rel=1e-9)


@pytest.mark.parametrize("call", [
    lambda: std_normal_quantile(0.0),
    lambda: std_normal_quantile(1.0),
    lambda: chi_square_quantile(0, 0.5),
    lambda: chi_square_sf(-1, 1.0),
    lambda: McParams(sample_count=10),
])
def test_domain_errors(call):
    with pytest.raises(DomainError):
        call()


def assert_penrose(matrix, pseudo, tolerance=1e-8):
    np.testing.assert_allclose(matrix @ pseudo @ matrix, matrix, atol=tolerance)
    np.testing.assert_allclose(pseudo @ matrix @ pseudo, pseudo, atol=tolerance)
    np.testing.assert_allclose((matrix @ pseudo).T, matrix @ pseudo, atol=tolerance)
    np.testing.assert_allclose((pseudo @ matrix).T, pseudo @ matrix, atol=tolerance)


def test_pseudoinverse_examples():
    pseudo, rank = sym_pseudoinverse(np.eye(3))
    np.testing.assert_allclose(pseudo, np.eye(3))
    assert rank == 3

    pseudo, rank = sym_pseudoinverse(np.diag([2.0, 0.0]))
    np.testing.assert_allclose(pseudo, np.diag([0.5, 0.0]), atol=1e-15)
    assert rank == 1

    v = np.array([0.6, 0.8])
    pseudo, rank = sym_pseudoinverse(np.outer(v, v))
    np.testing.assert_allclose(pseudo, np.outer(v, v), atol=1e-12)
    assert rank == 1


def test_pseudoinverse_satisfies_penrose_conditions(rng):
    for rank in (1, 2, 4):
        factor = rng.normal(size=(5, rank))
        matrix = factor @ factor.T
        pseudo, effective_rank = sym_pseudoinverse(matrix)
        assert effective_rank == rank
        assert_penrose(matrix, pseudo)


def test_asymmetric_matrices_are_rejected():
    with pytest.raises(LinearAlgebraError):
        sym_pseudoinverse(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_cholesky_examples():
    np.testing.assert_allclose(cholesky_psd(np.eye(3)), np.eye(3))

    factor = cholesky_psd(np.array([[4.0, 2.0], [2.0, 2.0]]))
    np.testing.assert_allclose(factor, [[2.0, 0.0], [1.0, 1.0]], atol=1e-12)
    np.testing.assert_allclose(factor @ factor.T, [[4.0, 2.0], [2.0, 2.0]], atol=1e-12)


def test_cholesky_of_semidefinite_matrices_needs_jitter():
    factor = cholesky_psd(np.diag([1.0, 0.0]))
    assert factor[0, 0] == pytest.approx(1.0, abs=1e-6)
    assert 0 < factor[1, 1] < 1e-3

    factor = cholesky_psd(np.ones((2, 2)))
    np.testing.assert_allclose(factor @ factor.T, np.ones((2, 2)), atol=1e-6)


def test_cholesky_of_indefinite_matrix_fails():
    with pytest.raises(LinearAlgebraError):
        cholesky_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_quadratic_form_matrix_inverts_well_conditioned_covariances():
    covariance = np.array([[2.0, 0.5], [0.5, 1.0]])
    middle = quadratic_form_matrix(covariance)
    assert not middle.pseudo
    assert middle.rank == 2
    assert middle.note is None
    np.testing.assert_allclose(middle.matrix, np.linalg.inv(covariance), atol=1e-12)


def test_quadratic_form_matrix_falls_back_to_pseudoinverse():
    middle = quadratic_form_matrix(np.ones((3, 3)))
    assert middle.pseudo
    assert middle.rank == 1
    assert "effective rank 1" in middle.note

    zero = quadratic_form_matrix(np.zeros((2, 2)))
    assert zero.rank == 0
    np.testing.assert_array_equal(zero.matrix, np.zeros((2, 2)))


def test_correlation_matrix_validation():
    with pytest.raises(LinearAlgebraError):
        CorrelationMatrix.from_array(np.array([[2.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(LinearAlgebraError):
        CorrelationMatrix.from_array(np.array([[1.0, 0.9, -0.9], [0.9, 1.0, 0.9], [-0.9, 0.9, 1.0]]))
    assert CorrelationMatrix.identity(4).p == 4


def test_rectangle_probability_univariate_is_exact():
    probability, se = mvn_rectangle_prob(CorrelationMatrix.identity(1), [-1.959964], [1.959964], MC)
    assert probability == pytest.approx(0.95, abs=1e-6)
    assert se == 0.0


@pytest.mark.parametrize("p", [2, 3, 5])
def test_rectangle_probability_factorizes_under_independence(p):
    limit = 1.959964
    probability, se = mvn_rectangle_prob(CorrelationMatrix.identity(p), [-limit] * p, [limit] * p, MC)
    assert probability == pytest.approx((2 * ndtr(limit) - 1) ** p, abs=1e-3 + 3 * se)


def test_rectangle_probability_of_perfectly_correlated_components():
    limit = 1.5
    probability, se = mvn_rectangle_prob(CorrelationMatrix.from_array(np.ones((2, 2))), [-limit] * 2, [limit] * 2, MC)
    assert probability == pytest.approx(2 * ndtr(limit) - 1, abs=2e-3 + 3 * se)


def test_rectangle_probability_matches_scipy_on_correlated_boxes():
    corr = np.array([[1.0, 0.5, 0.3], [0.5, 1.0, 0.4], [0.3, 0.4, 1.0]])
    lower, upper = np.array([-1.0, -2.0, -0.5]), np.array([1.5, 1.0, 2.0])
    probability, se = mvn_rectangle_prob(CorrelationMatrix.from_array(corr), lower, upper, MC)

    distribution = stats.multivariate_normal(mean=np.zeros(3), cov=corr)
    oracle = 0.0
    # Inclusion-exclusion over the corners of the box
    for corner in np.ndindex(2, 2, 2):
        point = np.where(np.array(corner) == 1, upper, lower)
        oracle += (-1) ** (3 - sum(corner)) * distribution.cdf(point)
    assert probability == pytest.approx(oracle, abs=2e-3 + 3 * se)


def test_rectangle_probability_is_monotone_in_the_box():
    corr = CorrelationMatrix.from_array(np.array([[1.0, 0.6], [0.6, 1.0]]))
    previous = 0.0
    for q in np.linspace(0.5, 3.0, 11):
        probability, _ = mvn_rectangle_prob(corr, [-q, -q], [q, q], MC)
        assert probability >= previous
        previous = probability


def test_rectangle_probability_grows_along_nested_boxes():
    corr = CorrelationMatrix.from_array(np.array([[1.0, 0.5, 0.3], [0.5, 1.0, 0.4], [0.3, 0.4, 1.0]]))
    boxes = [
        ([-1.5, -2.0, -1.5], [1.5, 2.0, 1.5 + 1e-12]),
        ([-1.5, -2.0, -1.5], [1.5 + 1e-9, 2.0, 1.5 + 1e-12]),
        ([-1.5, -2.0, -1.5], [1.8, 2.0, 1.5 + 1e-12]),
        ([-1.5, -2.0, -1.5], [1.8, 2.6, 1.5 + 1e-12]),
        ([-2.2, -2.0, -1.9], [1.8, 2.6, 2.2]),
    ]
    previous = 0.0
    for lower, upper in boxes:
        probability, _ = mvn_rectangle_prob(corr, lower, upper, MC)
        assert probability >= previous
        previous = probability


def test_rectangle_probability_needs_a_proper_box():
    with pytest.raises(DomainError):
        mvn_rectangle_prob(CorrelationMatrix.identity(2), [0.0, 1.0], [1.0, 1.0], MC)
    with pytest.raises(DomainError):
        mvn_rectangle_prob(CorrelationMatrix.identity(2), [0.0], [1.0], MC)


@pytest.mark.parametrize("p", [1, 2, 3, 5])
def test_equicoordinate_quantile_under_independence(p):
    conf = 0.95
    oracle = ndtri((1 + conf ** (1 / p)) / 2)
    assert equicoordinate_quantile(CorrelationMatrix.identity(p), conf, MC) == pytest.approx(oracle, abs=1e-3)


def test_equicoordinate_quantile_examples():
    assert equicoordinate_quantile(CorrelationMatrix.identity(1), 0.95, MC) == pytest.approx(1.959964, abs=1e-6)
    assert equicoordinate_quantile(CorrelationMatrix.identity(2), 0.95, MC) == pytest.approx(2.2365, abs=5e-3)


def test_equicoordinate_quantile_of_correlated_components():
    corr = CorrelationMatrix.from_array(np.array([[1.0, 0.5, 0.5], [0.5, 1.0, 0.5], [0.5, 0.5, 1.0]]))
    q = equicoordinate_quantile(corr, 0.95, MC)
    assert std_normal_quantile(0.975) < q < std_normal_quantile(1 - 0.05 / 6)

    coverage, se = mvn_rectangle_prob(corr, [-q] * 3, [q] * 3, MC)
    assert coverage == pytest.approx(0.95, abs=2e-3 + 3 * se)


def test_equicoordinate_quantile_is_deterministic_per_seed():
    corr = CorrelationMatrix.from_array(np.array([[1.0, 0.3], [0.3, 1.0]]))
    assert equicoordinate_quantile(corr, 0.9, MC) == equicoordinate_quantile(corr, 0.9, MC)


def test_equicoordinate_quantile_agrees_with_the_rectangle_probability():
    corr = CorrelationMatrix.from_array(np.array([[1.0, 0.5, 0.3], [0.5, 1.0, 0.4], [0.3, 0.4, 1.0]]))
    q = equicoordinate_quantile(corr, 0.95, MC)
    inside, _ = mvn_rectangle_prob(corr, [-q] * 3, [q] * 3, MC)
    below, _ = mvn_rectangle_prob(corr, [-q + 1e-6] * 3, [q - 1e-6] * 3, MC)
    assert below < 0.95 <= inside
