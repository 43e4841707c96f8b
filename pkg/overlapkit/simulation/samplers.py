"""Random draws from the distribution families used by the simulation scenarios."""
import math
import typing as t

import numpy as np

from overlapkit.config import LognormalScale
from overlapkit.core.errors import DomainError
from overlapkit.core.numerics import cholesky_psd


def _location_and_factor(mean: t.Sequence[float], cov: t.Sequence[t.Sequence[float]]) -> t.Tuple[np.ndarray, t.Optional[np.ndarray]]:
    mean = np.asarray(mean, dtype=float).ravel()
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape != (mean.size, mean.size):
        raise DomainError("cov", cov.shape, f"{mean.size} x {mean.size} matrices")
    # A zero matrix means a point mass, jitter would add spurious noise
    if not np.any(cov):
        return mean, None
    return mean, cholesky_psd(cov)


def sample_mvnormal(mean: t.Sequence[float], cov: t.Sequence[t.Sequence[float]], n: int, rng: np.random.Generator) -> np.ndarray:
    """`n` rows `mean + L z` with `L` the Cholesky factor of `cov` and `z` standard normal."""
    mean, factor = _location_and_factor(mean, cov)
    if factor is None:
        return np.tile(mean, (n, 1))
    z = rng.standard_normal((n, mean.size))
    return mean + z @ factor.T


def sample_mvt(
    mean: t.Sequence[float],
    scale: t.Sequence[t.Sequence[float]],
    df: float,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Multivariate t rows `mean + L z / sqrt(g / df)`, one chi-square draw `g` shared by all components of a row."""
    if not df > 0:
        raise DomainError("df", df, "positive reals")
    mean, factor = _location_and_factor(mean, scale)
    if factor is None:
        return np.tile(mean, (n, 1))
    z = rng.standard_normal((n, mean.size))
    g = rng.chisquare(df, size=n)
    return mean + (z @ factor.T) / np.sqrt(g / df)[:, None]


def natural_scale_log_variance(variance: float) -> float:
    """
    Log-scale variance `s2` of a lognormal with log-mean 0 and natural variance `variance`.

    Solves `(exp(s2) - 1) * exp(s2) = variance` for `exp(s2)`.
    """
    if not variance > 0:
        raise DomainError("variance", variance, "positive reals")
    growth = (1 + math.sqrt(1 + 4 * variance)) / 2
    return math.log(growth)


def lognormal_transform(
    standard: np.ndarray,
    mean: float,
    variance: float,
    scale: LognormalScale = LognormalScale.log,
) -> np.ndarray:
    """
    Turn standard normal draws into a lognormal variable.

    With `LognormalScale.log`, `mean` and `variance` parameterize the underlying normal. With
    `LognormalScale.natural` they are the moments of the result, a lognormal shifted to the requested mean.
    """
    if not variance > 0:
        raise DomainError("variance", variance, "positive reals")
    if scale is LognormalScale.log:
        return np.exp(mean + math.sqrt(variance) * standard)

    log_variance = natural_scale_log_variance(variance)
    return np.exp(math.sqrt(log_variance) * standard) - math.exp(log_variance / 2) + mean


def lognormal_moments(mean: float, variance: float, scale: LognormalScale) -> t.Tuple[float, float]:
    """Mean and variance on the natural scale of the variable `lognormal_transform` produces."""
    if scale is LognormalScale.natural:
        return mean, variance
    return math.exp(mean + variance / 2), (math.exp(variance) - 1) * math.exp(2 * mean + variance)


def substitute_lognormal(
    table: np.ndarray,
    component: int,
    location: float,
    spread: float,
    mean: float,
    variance: float,
    scale: LognormalScale = LognormalScale.log,
) -> np.ndarray:
    """
    Replace one normal component with a lognormal one.

    The component is standardized with its own `location`/`spread` and exponentiated, so the rank
    dependence with the other components is kept.
    """
    if not 0 <= component < table.shape[1]:
        raise DomainError("component", component, f"[0, {table.shape[1]})")
    result = np.array(table, dtype=float)
    standard = (result[:, component] - location) / spread if spread > 0 else np.zeros(result.shape[0])
    result[:, component] = lognormal_transform(standard, mean, variance, scale)
    return result
