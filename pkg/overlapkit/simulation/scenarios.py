"""
Simulation scenarios: per-group distribution families, built-in presets and scenario files.

A scenario file is an INI file with a `[scenario]` section and, unless a preset is named,
one `[group N]` section per group:

    [scenario]
    preset = example8
    n = 50
    d = 2
    reps = 1000
    bootstrap = 500
    methods = wald, anova_type, percentile
    sweep = n:50,100,150
"""
import configparser
import math
import typing as t
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from overlapkit.config import (
    DEFAULT_ALPHA, DEFAULT_MC_SAMPLES, Estimand, Family, IntervalMethod, LognormalScale, SimulationMode,
    TestMethod, WeightMode, default_seed
)
from overlapkit.core.empirical import GroupedDataset, WeightScheme
from overlapkit.core.errors import DomainError, InputError
from overlapkit.simulation.samplers import sample_mvnormal, sample_mvt, substitute_lognormal
from overlapkit.utils import converters

SEED_MASK = (1 << 64) - 1
PSD_RELATIVE_TOLERANCE = 1e-8

# Desk scale defaults, raise them with `reps` and `bootstrap` for publication runs
DEFAULT_REPS = 1000
DEFAULT_SIMULATION_BOOTSTRAP = 500

Method = t.Union[TestMethod, IntervalMethod]


def _as_matrix(values: t.Sequence[t.Sequence[float]]) -> t.Tuple[t.Tuple[float, ...], ...]:
    return tuple(tuple(float(value) for value in row) for row in values)


@dataclass(frozen=True)
class GroupFamily:
    """
    Distribution of one simulated group.

    `cov` is the covariance of a normal family and the scale matrix of a t family. For
    `mvnormal_with_lognormal_component`, component `lognormal_component` of the normal draw is
    replaced by a lognormal variable with the given `lognormal_mean`/`lognormal_variance`.
    """

    family: Family
    mean: t.Tuple[float, ...]
    cov: t.Tuple[t.Tuple[float, ...], ...]
    df: t.Optional[float] = None
    lognormal_component: t.Optional[int] = None
    lognormal_mean: float = -0.35
    lognormal_variance: float = 0.7
    lognormal_scale: LognormalScale = LognormalScale.log

    def __post_init__(self) -> None:
        cov = np.asarray(self.cov, dtype=float)
        d = len(self.mean)
        if d < 1 or cov.shape != (d, d):
            raise DomainError("cov", cov.shape, f"{d} x {d} matrices")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise DomainError("cov", "asymmetric matrix", "symmetric matrices")
        eigenvalues = np.linalg.eigvalsh(cov)
        if eigenvalues.min() < -PSD_RELATIVE_TOLERANCE * max(eigenvalues.max(), 1.0):
            raise DomainError("cov", f"minimal eigenvalue {eigenvalues.min():.3g}", "positive semidefinite matrices")

        if self.family is Family.mvt and not (self.df is not None and self.df > 0):
            raise DomainError("df", self.df, "positive reals")
        if self.family is Family.mvnormal_with_lognormal_component:
            if self.lognormal_component is None or not 0 <= self.lognormal_component < d:
                raise DomainError("lognormal_component", self.lognormal_component, f"[0, {d})")
            if not self.lognormal_variance > 0:
                raise DomainError("lognormal_variance", self.lognormal_variance, "positive reals")

    @classmethod
    def normal(cls, mean: t.Sequence[float], cov: t.Sequence[t.Sequence[float]]) -> "GroupFamily":
        return cls(Family.mvnormal, tuple(float(value) for value in mean), _as_matrix(cov))

    @property
    def d(self) -> int:
        return len(self.mean)

    @property
    def marginal_sd(self) -> np.ndarray:
        return np.sqrt(np.diag(np.asarray(self.cov, dtype=float)))

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.family is Family.mvt:
            return sample_mvt(self.mean, self.cov, self.df, n, rng)

        table = sample_mvnormal(self.mean, self.cov, n, rng)
        if self.family is Family.mvnormal_with_lognormal_component:
            s = self.lognormal_component
            table = substitute_lognormal(
                table, s, self.mean[s], float(self.marginal_sd[s]),
                self.lognormal_mean, self.lognormal_variance, self.lognormal_scale,
            )
        return table

    def with_sd(self, sd: float) -> "GroupFamily":
        """Same family with every marginal standard deviation set to `sd`, off-diagonal entries kept."""
        cov = np.array(self.cov, dtype=float)
        np.fill_diagonal(cov, sd ** 2)
        return replace(self, cov=_as_matrix(cov))


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything needed to simulate one setting: groups, sizes, estimand and the inference budget."""

    name: str
    groups: t.Tuple[GroupFamily, ...]
    n: t.Tuple[int, ...]
    estimand: Estimand = Estimand.reference
    weight_mode: WeightMode = WeightMode.proportional
    custom_weights: t.Optional[t.Tuple[float, ...]] = None
    alpha: float = DEFAULT_ALPHA
    B: int = DEFAULT_SIMULATION_BOOTSTRAP
    reps: int = DEFAULT_REPS
    seed: int = field(default_factory=default_seed)
    mc_samples: int = DEFAULT_MC_SAMPLES
    truth: t.Optional[t.Tuple[float, ...]] = None
    group_labels: t.Tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.groups:
            raise InputError("A scenario needs at least one group")
        if len(self.n) != len(self.groups):
            raise DomainError("n", self.n, f"{len(self.groups)} group sizes")
        if any(size < 2 for size in self.n):
            raise DomainError("n", self.n, "group sizes of at least 2")
        if len({group.d for group in self.groups}) != 1:
            raise InputError("Every group of a scenario needs the same dimension")
        if self.estimand is Estimand.two_sample and len(self.groups) != 2:
            raise InputError("The two-sample estimand needs exactly 2 groups")
        if self.reps < 1:
            raise DomainError("reps", self.reps, "positive integers")
        if self.B < 2:
            raise DomainError("B", self.B, "integers >= 2")
        if not 0 < self.alpha < 1:
            raise DomainError("alpha", self.alpha, "(0, 1)")

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def d(self) -> int:
        return self.groups[0].d

    @property
    def N(self) -> int:
        return sum(self.n)

    @property
    def labels(self) -> t.Tuple[str, ...]:
        return self.group_labels or tuple(f"G{index + 1}" for index in range(self.k))

    def weight_scheme(self) -> WeightScheme:
        if self.weight_mode is WeightMode.proportional:
            return WeightScheme.proportional(self.n)
        if self.weight_mode is WeightMode.equal:
            return WeightScheme.equal(self.k)
        if self.custom_weights is None or len(self.custom_weights) != self.k:
            raise InputError(f"Custom weighting needs {self.k} weights")
        return WeightScheme.custom(self.custom_weights)

    def with_setting(self, key: str, value: float) -> "ScenarioSpec":
        """Copy with one swept parameter changed: `n` (every group size) or `sigma2` (standard deviation of group 2)."""
        if key == "n":
            return replace(self, n=tuple(int(value) for _ in self.n), truth=self.truth)
        if key == "sigma2":
            if self.k < 2:
                raise InputError("Sweeping `sigma2` needs at least 2 groups")
            groups = list(self.groups)
            groups[1] = groups[1].with_sd(value)
            return replace(self, groups=tuple(groups), truth=None)
        raise DomainError("sweep", key, "{n, sigma2}")


def scenario_rng(seed: int, replication: int) -> np.random.Generator:
    return np.random.default_rng([seed & SEED_MASK, replication])


def generate_scenario(spec: ScenarioSpec, replication: int) -> GroupedDataset:
    """One dataset, fully determined by `spec.seed` and `replication`."""
    rng = scenario_rng(spec.seed, replication)
    tables = [group.draw(size, rng) for group, size in zip(spec.groups, spec.n)]
    return GroupedDataset.from_arrays(tables, spec.labels)


# region: True overlap of normal scenarios

def normal_pair_overlap(evaluated_sd: float, splitter_sd: float) -> float:
    """`I(F, G)` of two normals with equal means, `F` evaluated and `G` split at its median."""
    if evaluated_sd == 0:
        return 1.0
    return 2 / math.pi * math.atan(splitter_sd / evaluated_sd)


def analytic_truth(spec: ScenarioSpec) -> t.Optional[np.ndarray]:
    """
    Closed form overlap vector where one exists, `None` otherwise.

    Identical groups always give 1/2. Normal groups with equal marginal means use the arctangent
    formula per component, combined linearly in the reference distribution.
    """
    rows = 1 if spec.estimand is Estimand.two_sample else spec.k
    if all(group == spec.groups[0] for group in spec.groups):
        return np.full(rows * spec.d, 0.5)

    if any(group.family is not Family.mvnormal for group in spec.groups):
        return None
    means = np.asarray([group.mean for group in spec.groups])
    if not np.allclose(means, means[0], rtol=0, atol=1e-12):
        return None

    sds = np.asarray([group.marginal_sd for group in spec.groups])
    if spec.estimand is Estimand.two_sample:
        return np.array([normal_pair_overlap(sds[0, s], sds[1, s]) for s in range(spec.d)])

    lam = spec.weight_scheme().array
    truth = np.empty((spec.k, spec.d))
    for i in range(spec.k):
        for s in range(spec.d):
            truth[i, s] = sum(lam[j] * normal_pair_overlap(sds[j, s], sds[i, s]) for j in range(spec.k))
    return truth.ravel()

# endregion

# region: Presets


def _equicorrelated(d: int, variance: float, covariance: float) -> t.List[t.List[float]]:
    return [[variance if row == column else covariance for column in range(d)] for row in range(d)]


def _example7(n: int = 50, d: int = 2, **_: t.Any) -> ScenarioSpec:
    group = GroupFamily.normal([1.0] * d, _equicorrelated(d, 1.0, 0.25))
    return ScenarioSpec("example7", (group, group, group), (n, n, n))


def _example8(n: int = 50, d: int = 2, **_: t.Any) -> ScenarioSpec:
    groups = tuple(GroupFamily.normal([1.0] * d, _equicorrelated(d, diagonal, 0.25)) for diagonal in (1.0, 1.5, 1.0))
    return ScenarioSpec("example8", groups, (n, n, n))


def _example9(n: int = 50, d: int = 2, lognormal_scale: LognormalScale = LognormalScale.log, **_: t.Any) -> ScenarioSpec:
    normal = GroupFamily.normal([1.0] * d, _equicorrelated(d, 1.0, 0.25))
    skewed = replace(
        normal,
        family=Family.mvnormal_with_lognormal_component,
        lognormal_component=min(2, d - 1),
        lognormal_scale=lognormal_scale,
    )
    return ScenarioSpec("example9", (normal, normal, skewed), (n, n, n))


def _two_sample(name: str, first: GroupFamily, second: GroupFamily, n: int) -> ScenarioSpec:
    return ScenarioSpec(name, (first, second), (n, n), estimand=Estimand.two_sample, group_labels=("F", "G"))


def _s1(n: int = 50, d: int = 2, **_: t.Any) -> ScenarioSpec:
    evaluated = GroupFamily.normal([0.0] * d, _equicorrelated(d, 1.0, 0.25))
    splitter = GroupFamily.normal([0.0] * d, _equicorrelated(d, 2.0, 0.25))
    return _two_sample("s1", evaluated, splitter, n)


def _s2(n: int = 50, d: int = 2, **_: t.Any) -> ScenarioSpec:
    group = GroupFamily.normal([0.0] * d, _equicorrelated(d, 3.0, 0.75))
    return _two_sample("s2", group, group, n)


def _s3(n: int = 50, d: int = 2, **_: t.Any) -> ScenarioSpec:
    group = GroupFamily(Family.mvt, (0.0,) * d, _as_matrix(_equicorrelated(d, 3.0, 0.75)), df=1.0)
    return _two_sample("s3", group, group, n)


def _s4(n: int = 50, d: int = 2, **_: t.Any) -> ScenarioSpec:
    group = GroupFamily.normal([1.0] * d, _equicorrelated(d, 1.0, 0.25))
    return _two_sample("s4", group, group, n)


def _s5(n: int = 100, d: int = 2, sigma2: float = 1.5, **_: t.Any) -> ScenarioSpec:
    first = GroupFamily.normal([1.0] * d, _equicorrelated(d, 1.0, 0.25))
    return _two_sample("s5", first, first.with_sd(sigma2), n)


def _s6(n: int = 50, d: int = 2, **_: t.Any) -> ScenarioSpec:
    first = GroupFamily.normal([1.0] * d, _equicorrelated(d, 1.0, 0.25))
    return _two_sample("s6", first, first.with_sd(2.0), n)


PRESETS: t.Dict[str, t.Callable[..., ScenarioSpec]] = {
    "example7": _example7,
    "example8": _example8,
    "example9": _example9,
    "s1": _s1,
    "s2": _s2,
    "s3": _s3,
    "s4": _s4,
    "s5": _s5,
    "s6": _s6,
}


def build_preset(name: str, **parameters: t.Any) -> ScenarioSpec:
    """
    Built-in scenario by name.

    `parameters` may hold the shape (`n`, `d`, `sigma2`, `lognormal_scale`) and any `ScenarioSpec` field
    (`alpha`, `B`, `reps`, `seed`, ...), which override the preset defaults.
    """
    try:
        builder = PRESETS[name.lower()]
    except KeyError:
        raise DomainError("preset", name, f"{{{', '.join(PRESETS)}}}")

    shape_keys = {"n", "d", "sigma2", "lognormal_scale"}
    spec = builder(**{key: value for key, value in parameters.items() if key in shape_keys})
    overrides = {key: value for key, value in parameters.items() if key not in shape_keys}
    return replace(spec, **overrides)

# endregion

# region: Scenario files


@dataclass(frozen=True)
class ScenarioPlan:
    """A scenario file: base spec, what to measure, and an optional one-parameter sweep."""

    base: ScenarioSpec
    mode: SimulationMode
    methods: t.Tuple[Method, ...]
    sweep_key: t.Optional[str] = None
    sweep_values: t.Tuple[float, ...] = field(default=())

    def settings(self) -> t.List[t.Tuple[str, ScenarioSpec]]:
        """`(setting label, spec)` for every swept value, or the base spec alone."""
        if self.sweep_key is None:
            return [("base", self.base)]
        return [(f"{self.sweep_key}={value:g}", self.base.with_setting(self.sweep_key, value)) for value in self.sweep_values]


def _converted(section: configparser.SectionProxy, key: str, converter: t.Callable[[str], t.Any], default: t.Any = None) -> t.Any:
    raw = section.get(key)
    if raw is None:
        return default
    return converter(raw)


def _default_methods(mode: SimulationMode) -> t.Tuple[Method, ...]:
    if mode is SimulationMode.coverage:
        return tuple(IntervalMethod)
    return (TestMethod.wald, TestMethod.anova_type, TestMethod.percentile)


def _group_from_section(section: configparser.SectionProxy) -> GroupFamily:
    family = _converted(section, "family", converters.enum_member(Family), Family.mvnormal)
    component = _converted(section, "lognormal_component", converters.positive_int)
    return GroupFamily(
        family=family,
        mean=tuple(_converted(section, "mean", converters.float_list)),
        cov=_as_matrix(_converted(section, "cov", converters.matrix)),
        df=_converted(section, "df", converters.real),
        lognormal_component=None if component is None else component - 1,
        lognormal_mean=_converted(section, "lognormal_mean", converters.real, -0.35),
        lognormal_variance=_converted(section, "lognormal_variance", converters.real, 0.7),
        lognormal_scale=_converted(section, "lognormal_scale", converters.enum_member(LognormalScale), LognormalScale.log),
    )


def parse_scenario(text: str, source: str = "<scenario>") -> ScenarioPlan:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=source)
    except configparser.Error as error:
        raise InputError(f"Malformed scenario file {source}: {error}")
    if not parser.has_section("scenario"):
        raise InputError(f"Scenario file {source} has no [scenario] section")

    section = parser["scenario"]
    mode = _converted(section, "mode", converters.enum_member(SimulationMode), SimulationMode.size_power)
    method_enum = IntervalMethod if mode is SimulationMode.coverage else TestMethod
    methods = tuple(_converted(section, "methods", converters.enum_list(method_enum), _default_methods(mode)))

    sizes = _converted(section, "n", converters.int_list)
    settings: t.Dict[str, t.Any] = {
        "alpha": _converted(section, "alpha", converters.probability),
        "B": _converted(section, "bootstrap", converters.positive_int),
        "reps": _converted(section, "reps", converters.positive_int),
        "seed": _converted(section, "seed", converters.seed),
        "mc_samples": _converted(section, "mc_samples", converters.positive_int),
        "estimand": _converted(section, "estimand", converters.enum_member(Estimand)),
        "truth": _converted(section, "truth", lambda raw: tuple(converters.float_list(raw))),
    }
    weights = _converted(section, "weights", converters.weight_spec)
    if weights is not None:
        settings["weight_mode"], settings["custom_weights"] = weights
    settings = {key: value for key, value in settings.items() if value is not None}

    preset = section.get("preset")
    if preset is not None:
        shape: t.Dict[str, t.Any] = {}
        if sizes:
            shape["n"] = sizes[0]
        for key, converter in (("d", converters.positive_int), ("sigma2", converters.real)):
            value = _converted(section, key, converter)
            if value is not None:
                shape[key] = value
        scale = _converted(section, "lognormal_scale", converters.enum_member(LognormalScale))
        if scale is not None:
            shape["lognormal_scale"] = scale
        base = build_preset(preset, **shape, **settings)
    else:
        group_sections = sorted(
            (name for name in parser.sections() if name.lower().startswith("group")),
            key=lambda name: int(name.split()[-1]) if name.split()[-1].isdigit() else 0,
        )
        if not group_sections:
            raise InputError(f"Scenario file {source} names neither a preset nor any [group N] section")
        groups = tuple(_group_from_section(parser[name]) for name in group_sections)
        if sizes is None:
            raise InputError(f"Scenario file {source} needs the group sizes `n`")
        if len(sizes) == 1:
            sizes = sizes * len(groups)
        base = ScenarioSpec(section.get("name", Path(source).stem), groups, tuple(sizes), **settings)

    sweep = _converted(section, "sweep", converters.sweep_spec)
    if sweep is None:
        return ScenarioPlan(base, mode, methods)
    key, values = sweep
    # Validates the key before any simulation starts
    base.with_setting(key, values[0])
    return ScenarioPlan(base, mode, methods, key, tuple(values))


def load_scenario_file(path: t.Union[str, Path]) -> ScenarioPlan:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        raise InputError(f"Can't read scenario file {path}: {error}")
    return parse_scenario(text, source=str(path))

# endregion
