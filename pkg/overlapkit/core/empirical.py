"""
Empirical distribution functions, empirical quantiles and midranks.

Everything here works on immutable arrays, so all of it is safe to call from any number of workers.
"""
import typing as t
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from overlapkit.config import WeightMode
from overlapkit.core.errors import ContractError, DomainError, InputError

WEIGHT_SUM_TOLERANCE = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Sample:
    """
    Observations of one group on one component.

    `values` are stored sorted ascending, `order` maps each sorted position
    back to the index of the observation in the original order.
    """

    values: np.ndarray
    order: np.ndarray

    @classmethod
    def from_values(cls, values: t.Iterable[float]) -> "Sample":
        raw = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float).ravel()
        if raw.size == 0:
            raise InputError("A sample needs at least one observation")
        if not np.all(np.isfinite(raw)):
            raise InputError("A sample may only contain finite values")

        order = np.argsort(raw, kind="stable")
        order.setflags(write=False)
        return cls(values=_frozen(raw[order]), order=order)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def has_ties(self) -> bool:
        return bool(np.any(np.diff(self.values) == 0))


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise DomainError(name, value, "the finite reals")
    return value


def ecdf_values(sorted_values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Vectorized `(1/n) * #{x <= t}` for every `t` in `points`, `sorted_values` has to be sorted."""
    return np.searchsorted(sorted_values, points, side="right") / sorted_values.size


def ecdf_eval(sample: Sample, t: float) -> float:
    """Right-continuous empirical distribution function of `sample` evaluated at `t`."""
    t = _check_finite("t", t)
    return float(ecdf_values(sample.values, np.array([t]))[0])


def empirical_quantile(sample: Sample, u: float) -> float:
    """
    Generalized inverse `inf{y: F(y) >= u}` of the empirical distribution function.

    The levels `r/n` are computed exactly the way `ecdf_eval` computes them,
    so `ecdf_eval(sample, empirical_quantile(sample, u)) >= u` holds without rounding surprises.
    """
    u = float(u)
    if not (0 < u <= 1):
        raise DomainError("u", u, "(0, 1]")

    levels = np.arange(1, sample.n + 1) / sample.n
    position = int(np.searchsorted(levels, u, side="left"))
    return float(sample.values[min(position, sample.n - 1)])


def midranks(values: t.Iterable[float]) -> np.ndarray:
    """Ranks `1..n` where tied observations share the average of the ranks they occupy."""
    array = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    if not np.all(np.isfinite(array)):
        raise DomainError("values", "non-finite entry", "the finite reals")
    return rankdata(array, method="average")


@dataclass(frozen=True)
class GroupedDataset:
    """
    `k` independent samples of complete `d`-dimensional observations.

    `groups[i]` is an `n_i x d` table, labels identify groups and components in reports.
    """

    groups: t.Tuple[np.ndarray, ...]
    group_labels: t.Tuple[str, ...]
    component_labels: t.Tuple[str, ...]

    @classmethod
    def from_arrays(
        cls,
        groups: t.Sequence[t.Any],
        group_labels: t.Optional[t.Sequence[str]] = None,
        component_labels: t.Optional[t.Sequence[str]] = None,
    ) -> "GroupedDataset":
        if len(groups) < 1:
            raise InputError("A dataset needs at least one group")

        tables = []
        for index, group in enumerate(groups):
            table = np.asarray(group, dtype=float)
            if table.ndim == 1:
                table = table[:, None]
            if table.ndim != 2:
                raise InputError(f"Group {index} must be a two dimensional table")
            tables.append(table)

        d = tables[0].shape[1]
        if d < 1:
            raise InputError("Observations need at least one component")
        for index, table in enumerate(tables):
            if table.shape[1] != d:
                raise ContractError(f"Group {index} has a different number of components", expected=d, actual=table.shape[1])
            if table.shape[0] < 2:
                raise InputError(f"Group {index} has {table.shape[0]} observation(s), at least 2 are required")
            if not np.all(np.isfinite(table)):
                raise InputError(f"Group {index} contains non-finite values")

        if group_labels is None:
            group_labels = [f"G{index + 1}" for index in range(len(tables))]
        if component_labels is None:
            component_labels = [f"C{index + 1}" for index in range(d)]
        if len(group_labels) != len(tables):
            raise ContractError("Wrong number of group labels", expected=len(tables), actual=len(group_labels))
        if len(component_labels) != d:
            raise ContractError("Wrong number of component labels", expected=d, actual=len(component_labels))

        return cls(
            groups=tuple(_frozen(table) for table in tables),
            group_labels=tuple(str(label) for label in group_labels),
            component_labels=tuple(str(label) for label in component_labels),
        )

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def d(self) -> int:
        return self.groups[0].shape[1]

    @property
    def sizes(self) -> t.Tuple[int, ...]:
        return tuple(group.shape[0] for group in self.groups)

    @property
    def N(self) -> int:
        return sum(self.sizes)

    def sample(self, group: int, component: int) -> Sample:
        return Sample.from_values(self.groups[group][:, component])

    def variable_labels(self) -> t.List[str]:
        """Labels of the flattened `kd` vector, group outer and component inner."""
        return [f"{group} {component}" for group in self.group_labels for component in self.component_labels]

    def tied_components(self) -> t.List[str]:
        """Components whose pooled observations contain ties."""
        tied = []
        for s, label in enumerate(self.component_labels):
            pooled = np.concatenate([group[:, s] for group in self.groups])
            if np.unique(pooled).size < pooled.size:
                tied.append(label)
        return tied


@dataclass(frozen=True)
class WeightScheme:
    """Weights `lambda_i` of the reference mixture `H = sum(lambda_i F_i)`."""

    mode: WeightMode
    weights: t.Tuple[float, ...]

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=float)
        if weights.size < 1 or np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise DomainError("weights", self.weights, "nonnegative finite reals")
        if abs(weights.sum() - 1) > WEIGHT_SUM_TOLERANCE:
            raise DomainError("weights", self.weights, "vectors summing to 1")

    @classmethod
    def proportional(cls, sizes: t.Sequence[int]) -> "WeightScheme":
        total = sum(sizes)
        return cls(WeightMode.proportional, tuple(size / total for size in sizes))

    @classmethod
    def equal(cls, k: int) -> "WeightScheme":
        return cls(WeightMode.equal, tuple(1 / k for _ in range(k)))

    @classmethod
    def custom(cls, weights: t.Sequence[float]) -> "WeightScheme":
        return cls(WeightMode.custom, tuple(float(weight) for weight in weights))

    @classmethod
    def for_dataset(cls, data: GroupedDataset, mode: WeightMode, custom: t.Optional[t.Sequence[float]] = None) -> "WeightScheme":
        if mode is WeightMode.proportional:
            return cls.proportional(data.sizes)
        if mode is WeightMode.equal:
            return cls.equal(data.k)
        if custom is None:
            raise InputError("Custom weighting requires explicit weights")
        scheme = cls.custom(custom)
        if len(scheme.weights) != data.k:
            raise ContractError("Weight count doesn't match group count", expected=data.k, actual=len(scheme.weights))
        return scheme

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)
