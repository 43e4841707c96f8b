"""
Converters from command line and scenario file strings into validated values.

Every converter raises `ConversionError`, which argparse reports as a usage error
and the error handler maps to the input error exit code.
"""
import typing as t
from argparse import ArgumentTypeError
from enum import Enum

from overlapkit.config import WeightMode
from overlapkit.core.errors import InputError

E = t.TypeVar("E", bound=Enum)


class ConversionError(InputError, ArgumentTypeError):
    """String couldn't be converted into the requested value."""

    def __init__(self, argument: str, expected: str):
        super().__init__(f"{argument!r} is not {expected}")
        self.argument = argument
        self.expected = expected


def comma_list(argument: str) -> t.List[str]:
    """Split `a, b,c` into `["a", "b", "c"]`, empty entries are dropped."""
    return [part.strip() for part in argument.split(",") if part.strip()]


def _number(argument: str, kind: t.Callable[[str], t.Any], expected: str) -> t.Any:
    try:
        return kind(argument.strip())
    except ValueError:
        raise ConversionError(argument, expected)


def real(argument: str) -> float:
    return _number(argument, float, "a number")


def probability(argument: str) -> float:
    """Number strictly between 0 and 1 (significance levels)."""
    value = _number(argument, float, "a number")
    if not 0 < value < 1:
        raise ConversionError(argument, "a probability in (0, 1)")
    return value


def positive_int(argument: str) -> int:
    value = _number(argument, int, "an integer")
    if value < 1:
        raise ConversionError(argument, "a positive integer")
    return value


def seed(argument: str) -> int:
    value = _number(argument, int, "an integer")
    if value < 0:
        raise ConversionError(argument, "a nonnegative integer seed")
    return value


def float_list(argument: str) -> t.List[float]:
    return [_number(part, float, "a number") for part in comma_list(argument)]


def int_list(argument: str) -> t.List[int]:
    return [positive_int(part) for part in comma_list(argument)]


def matrix(argument: str) -> t.List[t.List[float]]:
    """Rows separated by `;`, entries by `,`: `1, 0.25; 0.25, 1`."""
    rows = [float_list(row) for row in argument.split(";") if row.strip()]
    if not rows or any(len(row) != len(rows[0]) for row in rows):
        raise ConversionError(argument, "a matrix with rows of equal length")
    return rows


def enum_member(enum: t.Type[E]) -> t.Callable[[str], E]:
    """Converter for a single member of `enum`, by value, with `-` accepted for `_`."""
    def convert(argument: str) -> E:
        value = argument.strip().lower().replace("-", "_")
        try:
            return enum(value)
        except ValueError:
            raise ConversionError(argument, f"one of {', '.join(member.value for member in enum)}")

    convert.__name__ = enum.__name__
    return convert


def enum_list(enum: t.Type[E], allow_none: bool = False) -> t.Callable[[str], t.List[E]]:
    """Converter for comma separated members of `enum`, `all` selects every member and, if allowed, `none` no member."""
    single = enum_member(enum)

    def convert(argument: str) -> t.List[E]:
        keyword = argument.strip().lower()
        if keyword == "all":
            return list(enum)
        if allow_none and keyword == "none":
            return []
        members = [single(part) for part in comma_list(argument)]
        if not members:
            raise ConversionError(argument, f"a list of {enum.__name__} values")
        return list(dict.fromkeys(members))

    convert.__name__ = f"{enum.__name__} list"
    return convert


def weight_spec(argument: str) -> t.Tuple[WeightMode, t.Optional[t.Tuple[float, ...]]]:
    """`proportional`, `equal`, or explicit weights `w1,w2,...`."""
    value = argument.strip().lower()
    if value in (WeightMode.proportional.value, WeightMode.equal.value):
        return WeightMode(value), None

    weights = tuple(float_list(argument))
    if not weights or any(weight < 0 for weight in weights):
        raise ConversionError(argument, "`proportional`, `equal` or nonnegative weights `w1,w2,...`")
    return WeightMode.custom, weights


def sweep_spec(argument: str) -> t.Tuple[str, t.List[float]]:
    """`key:v1,v2,...`, e.g. `n:50,100,150`."""
    key, separator, values = argument.partition(":")
    if not separator or not key.strip():
        raise ConversionError(argument, "a sweep `key:v1,v2,...`")
    parsed = float_list(values)
    if not parsed:
        raise ConversionError(argument, "a sweep with at least one value")
    return key.strip().lower(), parsed
