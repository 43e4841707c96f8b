"""
Distribution quantiles, multivariate normal rectangle probabilities and symmetric linear algebra.

Rectangle probabilities use the sequential conditioning transform of Genz on a Cholesky factor,
integrated with randomly shifted Richtmyer lattice rules. Every shift is drawn from a generator
seeded by `McParams.seed`, so results are deterministic and monotone in the box for a fixed seed.
"""
import typing as t
from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy import stats
from scipy.special import ndtr, ndtri

from overlapkit.config import (
    DEFAULT_MC_SAMPLES, DEFAULT_MC_TARGET_SE, MIN_MC_SAMPLES, PINV_REL_TOL, PSD_TOLERANCE, WALD_CONDITION_LIMIT
)
from overlapkit.core.errors import DomainError, LinearAlgebraError, NumericalError

# Number of independent random shifts of the lattice, their spread gives the standard error
LATTICE_SHIFTS = 16
JITTER_LEVELS = (0.0, 1e-12, 1e-10, 1e-8)
SYMMETRY_TOLERANCE = 1e-10
_PROBABILITY_FLOOR = 1e-16


@dataclass(frozen=True)
class McParams:
    """Monte Carlo budget for rectangle probabilities."""

    sample_count: int = DEFAULT_MC_SAMPLES
    seed: int = 0
    target_se: float = DEFAULT_MC_TARGET_SE

    def __post_init__(self) -> None:
        if self.sample_count < MIN_MC_SAMPLES:
            raise DomainError("sample_count", self.sample_count, f"integers >= {MIN_MC_SAMPLES}")
        if self.target_se <= 0:
            raise DomainError("target_se", self.target_se, "positive reals")


def _check_probability(name: str, p: float, closed_right: bool = False) -> float:
    p = float(p)
    if not (0 < p < 1 or (closed_right and p == 1)):
        raise DomainError(name, p, "(0, 1]" if closed_right else "(0, 1)")
    return p


def std_normal_quantile(p: float) -> float:
    return float(ndtri(_check_probability("p", p)))


def chi_square_quantile(df: float, p: float) -> float:
    if not df > 0:
        raise DomainError("df", df, "positive reals")
    return float(stats.chi2.ppf(_check_probability("p", p), df))


def chi_square_sf(df: float, x: float) -> float:
    if not df > 0:
        raise DomainError("df", df, "positive reals")
    return float(stats.chi2.sf(x, df))


def f_nu_inf_quantile(nu: float, p: float) -> float:
    """Quantile of `F(nu, infinity)`, which is `chi2(nu) / nu`."""
    return chi_square_quantile(nu, p) / nu


def f_nu_inf_sf(nu: float, x: float) -> float:
    return chi_square_sf(nu, x * nu)


# region: Symmetric linear algebra

def _check_symmetric(matrix: np.ndarray, tolerance: float = SYMMETRY_TOLERANCE) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise LinearAlgebraError(f"Expected a square matrix, got shape {matrix.shape}")
    scale = max(1.0, float(np.abs(matrix).max(initial=0.0)))
    if np.abs(matrix - matrix.T).max(initial=0.0) > tolerance * scale:
        raise LinearAlgebraError("Matrix isn't symmetric")
    return (matrix + matrix.T) / 2


def sym_pseudoinverse(matrix: np.ndarray, rel_tol: float = PINV_REL_TOL) -> t.Tuple[np.ndarray, int]:
    """
    Moore-Penrose inverse of a symmetric matrix through its eigendecomposition.

    Eigenvalues whose magnitude is below `rel_tol` times the largest one are treated as zero.
    Returns the inverse and the number of retained eigenvalues (effective rank).
    """
    matrix = _check_symmetric(matrix)
    eigenvalues, vectors = np.linalg.eigh(matrix)
    largest = np.abs(eigenvalues).max(initial=0.0)
    keep = np.abs(eigenvalues) > rel_tol * largest if largest > 0 else np.zeros(eigenvalues.size, dtype=bool)

    inverted = np.zeros_like(eigenvalues)
    inverted[keep] = 1 / eigenvalues[keep]
    pseudo = (vectors * inverted) @ vectors.T
    return (pseudo + pseudo.T) / 2, int(keep.sum())


def cholesky_psd(matrix: np.ndarray) -> np.ndarray:
    """
    Lower Cholesky factor of a positive semidefinite matrix.

    A jitter `eps * I` escalating through `JITTER_LEVELS * trace / p` is added until the factorization succeeds.
    """
    matrix = _check_symmetric(matrix)
    p = matrix.shape[0]
    scale = np.trace(matrix) / p if p else 0.0
    if scale <= 0:
        scale = 1.0

    for level in JITTER_LEVELS:
        try:
            factor = np.linalg.cholesky(matrix + level * scale * np.eye(p))
        except np.linalg.LinAlgError:
            continue
        if level:
            logger.debug(f"Cholesky needed a jitter of {level * scale:.3g}")
        return factor

    raise LinearAlgebraError("Matrix isn't positive semidefinite, Cholesky failed after maximal jitter")


@dataclass(frozen=True)
class MiddleMatrix:
    """Matrix of a quadratic form `v' M v` built from a covariance, with the rank used for its chi-square reference."""

    matrix: np.ndarray
    rank: int
    pseudo: bool

    @property
    def note(self) -> t.Optional[str]:
        if not self.pseudo:
            return None
        return f"Covariance is singular or ill-conditioned, used the pseudoinverse with effective rank {self.rank}"


def quadratic_form_matrix(covariance: np.ndarray, condition_limit: float = WALD_CONDITION_LIMIT) -> MiddleMatrix:
    """
    Plain inverse of a well-conditioned covariance, pseudoinverse otherwise.

    Wald tests and elliptical regions both go through here, so they agree on every input.
    """
    covariance = _check_symmetric(covariance)
    p = covariance.shape[0]
    eigenvalues = np.linalg.eigvalsh(covariance)
    # eigvalsh returns ascending eigenvalues
    smallest, largest = eigenvalues[0], eigenvalues[-1]

    if largest > 0 and smallest > 0 and largest / smallest <= condition_limit:
        inverse = np.linalg.inv(covariance)
        return MiddleMatrix((inverse + inverse.T) / 2, p, pseudo=False)

    pseudo, rank = sym_pseudoinverse(covariance)
    return MiddleMatrix(pseudo, rank, pseudo=True)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric, unit diagonal, positive semidefinite matrix (tiny negative eigenvalues are clipped)."""

    entries: np.ndarray

    @classmethod
    def from_array(cls, matrix: np.ndarray) -> "CorrelationMatrix":
        matrix = _check_symmetric(matrix, tolerance=1e-12)
        if not np.allclose(np.diag(matrix), 1.0, rtol=0, atol=1e-12):
            raise LinearAlgebraError("Correlation matrix needs a unit diagonal")

        eigenvalues, vectors = np.linalg.eigh(matrix)
        if eigenvalues.min(initial=0.0) < -PSD_TOLERANCE:
            raise LinearAlgebraError(f"Correlation matrix isn't positive semidefinite (eigenvalue {eigenvalues.min():.3g})")
        if eigenvalues.min(initial=0.0) < 0:
            clipped = (vectors * np.clip(eigenvalues, 0, None)) @ vectors.T
            matrix = (clipped + clipped.T) / 2
            np.fill_diagonal(matrix, 1.0)

        matrix.setflags(write=False)
        return cls(matrix)

    @classmethod
    def identity(cls, p: int) -> "CorrelationMatrix":
        return cls.from_array(np.eye(p))

    @property
    def p(self) -> int:
        return self.entries.shape[0]

# endregion

# region: Multivariate normal rectangles


class _LatticeRule:
    """
    Randomly shifted Richtmyer lattice for the `p - 1` dimensional conditioning integral.

    Points `frac(i * sqrt(prime_j) + shift_j)`; the shifts come from the seeded generator and
    half of the evaluations use antithetic points.
    """

    def __init__(self, dimension: int, points_per_shift: int, seed: int):
        self.dimension = dimension
        self.points_per_shift = points_per_shift
        generators = np.sqrt(_first_primes(max(dimension, 1)))[:dimension]
        base = np.outer(np.arange(1, points_per_shift + 1), generators) % 1.0
        shifts = np.random.default_rng(seed).random((LATTICE_SHIFTS, dimension))
        self.shifted = [(base + shift) % 1.0 for shift in shifts]


def _first_primes(count: int) -> np.ndarray:
    primes: t.List[int] = []
    candidate = 2
    while len(primes) < count:
        if all(candidate % prime for prime in primes):
            primes.append(candidate)
        candidate += 1
    return np.asarray(primes, dtype=float)


def _conditioning_integrand(factor: np.ndarray, lower: np.ndarray, upper: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Sequential conditioning integrand for every row of `points` (`m x (p - 1)`)."""
    p = factor.shape[0]
    m = points.shape[0]
    values = np.ones(m)
    y = np.zeros((m, p))

    for i in range(p):
        shift = y[:, :i] @ factor[i, :i] if i else np.zeros(m)
        d = ndtr((lower[i] - shift) / factor[i, i])
        e = ndtr((upper[i] - shift) / factor[i, i])
        width = np.clip(e - d, 0.0, None)
        values = values * width
        if i < p - 1:
            u = d + points[:, i] * width
            y[:, i] = ndtri(np.clip(u, _PROBABILITY_FLOOR, 1 - _PROBABILITY_FLOOR))
    return values


def _reorder(corr: np.ndarray) -> np.ndarray:
    """Integrate the most strongly coupled variables first; the order depends on `corr` only."""
    coupling = np.abs(corr).sum(axis=1)
    return np.argsort(-coupling, kind="stable")


class _RectangleIntegrator:
    """Holds the factor and lattice, so repeated evaluations with the same seed share all random numbers."""

    def __init__(self, corr: CorrelationMatrix, order: np.ndarray, points_per_shift: int, seed: int):
        permuted = corr.entries[np.ix_(order, order)]
        self.order = order
        self.factor = cholesky_psd(permuted)
        self.lattice = _LatticeRule(corr.p - 1, points_per_shift, seed)

    @classmethod
    def for_params(cls, corr: CorrelationMatrix, mc: McParams) -> "_RectangleIntegrator":
        """The one rule used for `corr` and `mc`, whatever the box."""
        return cls(corr, _reorder(corr.entries), max(mc.sample_count // (2 * LATTICE_SHIFTS), 1), mc.seed)

    def evaluate(self, lower: np.ndarray, upper: np.ndarray) -> t.Tuple[float, float]:
        lower, upper = lower[self.order], upper[self.order]
        if self.factor.shape[0] == 1:
            return float(ndtr(upper[0] / self.factor[0, 0]) - ndtr(lower[0] / self.factor[0, 0])), 0.0

        estimates = []
        for points in self.lattice.shifted:
            direct = _conditioning_integrand(self.factor, lower, upper, points)
            antithetic = _conditioning_integrand(self.factor, lower, upper, 1.0 - points)
            estimates.append((direct.mean() + antithetic.mean()) / 2)

        estimates = np.asarray(estimates)
        se = float(estimates.std(ddof=1) / np.sqrt(estimates.size))
        return float(np.clip(estimates.mean(), 0.0, 1.0)), se


def _as_limits(values: t.Sequence[float], p: int, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=float).ravel()
    if array.size != p:
        raise DomainError(name, array.size, f"vectors of length {p}")
    return array


def mvn_rectangle_prob(
    corr: CorrelationMatrix,
    lower: t.Sequence[float],
    upper: t.Sequence[float],
    mc: McParams = McParams(),
) -> t.Tuple[float, float]:
    """
    Estimate `P(lower <= Z <= upper)` for `Z ~ N(0, corr)` with its standard error.

    Every box is integrated with the full `mc.sample_count` lattice in an order fixed by `corr`,
    so for one seed the estimate never decreases when the box grows. A standard error above
    `mc.target_se` is logged, raise `sample_count` to bring it down.
    """
    lower = _as_limits(lower, corr.p, "lower")
    upper = _as_limits(upper, corr.p, "upper")
    if np.any(lower >= upper):
        raise DomainError("lower", lower, "values strictly below `upper`")

    probability, se = _RectangleIntegrator.for_params(corr, mc).evaluate(lower, upper)
    if se > mc.target_se:
        logger.debug(f"Rectangle probability standard error {se:.2e} above the target {mc.target_se:.2e} after {mc.sample_count} evaluations")
    return probability, se


def equicoordinate_quantile(corr: CorrelationMatrix, conf: float, mc: McParams = McParams(), tolerance: float = 1e-3) -> float:
    """
    The smallest `q` (to 1e-6) with `P(|Z_j| <= q for all j) >= conf`.

    Bisection between the univariate and the Bonferroni quantile; every step uses the same rule as
    `mvn_rectangle_prob` with `mc`, so the objective is monotone in `q` and agrees with it exactly.
    """
    conf = _check_probability("conf", conf)
    p = corr.p
    low = std_normal_quantile((1 + conf) / 2)
    if p == 1:
        return low
    high = std_normal_quantile(1 - (1 - conf) / (2 * p))

    integrator = _RectangleIntegrator.for_params(corr, mc)

    def coverage(q: float) -> float:
        return integrator.evaluate(np.full(p, -q), np.full(p, q))[0]

    if coverage(high) < conf - tolerance or coverage(low) > conf + tolerance:
        raise NumericalError("Equicoordinate bisection failed to bracket the quantile")

    for step in range(60):
        middle = (low + high) / 2
        probability = coverage(middle)
        if probability < conf:
            low = middle
        else:
            high = middle
        if high - low < 1e-6:
            break
    logger.trace(f"Equicoordinate quantile {high:.6f} for p={p} after {step + 1} bisection steps")
    return float(high)

# endregion
