import os
import typing as t
from enum import Enum

from overlapkit.core.errors import InputError

# Seed used when neither `--seed`, a scenario seed nor `OVERLAPKIT_SEED` is given
FALLBACK_SEED = 20240601
FALLBACK_WORKERS = 1


def _environment_setting(name: str, fallback: int, converter: t.Callable[[str], int]) -> int:
    value = os.getenv(name)
    if value is None:
        return fallback
    try:
        return converter(value)
    except InputError as error:
        raise InputError(f"{name}: {error}") from error


def default_seed() -> int:
    """`OVERLAPKIT_SEED`, validated like `--seed`, or the fallback seed."""
    # Converters import this module
    from overlapkit.utils.converters import seed
    return _environment_setting("OVERLAPKIT_SEED", FALLBACK_SEED, seed)


def default_workers() -> int:
    from overlapkit.utils.converters import positive_int
    return _environment_setting("OVERLAPKIT_WORKERS", FALLBACK_WORKERS, positive_int)


# Debug/Development mode
# If not defined or defined as false, set to False, otherwise, set to True
DEBUG = "DEBUG" in os.environ and os.environ["DEBUG"].lower() != "false"

LOG_FILE = os.getenv("OVERLAPKIT_LOG_FILE")
LOG_LEVEL = os.getenv("OVERLAPKIT_LOG_LEVEL", "TRACE" if DEBUG else "INFO")

# Inference defaults
BENCHMARK = 0.5
DEFAULT_ALPHA = 0.05
DEFAULT_BOOTSTRAP = 2000
BOOTSTRAP_WARN_THRESHOLD = 100
BOOTSTRAP_CHUNK = 64

# Numerics defaults
DEFAULT_MC_SAMPLES = 100_000
DEFAULT_MC_TARGET_SE = 5e-4
MIN_MC_SAMPLES = 1000
WALD_CONDITION_LIMIT = 1e12
PINV_REL_TOL = 1e-10
PSD_TOLERANCE = 1e-8

# Report output
REPORT_SIGNIFICANT_DIGITS = 12

# Exit codes of the command line interface
EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL_ERROR = 3
EXIT_INTERNAL_ERROR = 4


class WeightMode(Enum):
    """Lists all available ways of weighting groups in the reference distribution."""
    proportional = "proportional"
    equal = "equal"
    custom = "custom"


class Estimand(Enum):
    """
    Which overlap vector is estimated.

    `reference` compares every group with the weighted mixture of all groups,
    `two_sample` evaluates the first group against the median split of the second one.
    """
    reference = "reference"
    two_sample = "two_sample"


class TestMethod(Enum):
    """List all available global tests against the benchmark."""
    __test__ = False

    wald = "wald"
    anova_type = "anova_type"
    max_t = "max_t"
    percentile = "percentile"


class IntervalMethod(Enum):
    """List all available simultaneous confidence constructions."""
    bonferroni = "bonferroni"
    mvt = "mvt"
    ellipse_projection = "ellipse_projection"


class OutputFormat(Enum):
    json = "json"
    csv = "csv"
    table = "table"


class Family(Enum):
    """Used to identify the sampling distribution of a simulated group."""
    mvnormal = "mvnormal"
    mvt = "mvt"
    mvnormal_with_lognormal_component = "mvnormal_with_lognormal_component"


class LognormalScale(Enum):
    """
    How the `mean`/`variance` of a lognormal component are read.

    `log` takes them as the parameters of the underlying normal,
    `natural` takes them as moments of a location-shifted lognormal.
    """
    log = "log"
    natural = "natural"


class PostHocFamily(Enum):
    """Predefined families of sub-hypotheses tested after a global rejection."""
    component = "component"
    group = "group"


class SimulationMode(Enum):
    """What a simulation run measures."""
    size_power = "size_power"
    coverage = "coverage"
