import typing as t

from dateutil.relativedelta import relativedelta

UNITS = ("days", "hours", "minutes", "seconds", "microseconds")


def stringify_reldelta(rel_delta: relativedelta, min_unit: str = "seconds", max_units: int = 3) -> str:
    """
    Convert `dateutil.relativedelta.relativedelta` into a readable string

    `min_unit` is the last unit printed, one of `days`, `hours`, `minutes`, `seconds`, `microseconds`.
    With `min_unit="minutes"`, `2 hours 5 minutes and 3 seconds` becomes `2 hours and 5 minutes`.

    `max_units` caps the number of printed units, smaller units are cut first.
    """
    if min_unit not in UNITS:
        raise ValueError(f"Unknown unit {min_unit!r}, expected one of {', '.join(UNITS)}")

    rel_delta = rel_delta.normalized()
    parts = []
    for unit in UNITS:
        if len(parts) == max_units:
            break

        value = getattr(rel_delta, unit)
        if value:
            parts.append(f"{int(value)} {unit if value != 1 else unit[:-1]}")

        if unit == min_unit:
            break

    if not parts:
        return f"less than a {min_unit[:-1]}"
    if len(parts) == 1:
        return parts[0]
    return " ".join(parts[:-1]) + f" and {parts[-1]}"


def stringify_duration(duration: t.Union[int, float], min_unit: str = "seconds", max_units: int = 3) -> str:
    """
    Readable form of a wall-clock `duration` in seconds, e.g. `1 hour 4 minutes and 12 seconds`.

    Precision arguments behave as in `stringify_reldelta`.
    """
    if duration == float("inf"):
        return "infinity"
    if duration < 0:
        raise ValueError("Durations can't be negative")

    whole = int(duration)
    rel_delta = relativedelta(seconds=whole, microseconds=int(round((duration - whole) * 1_000_000)))
    return stringify_reldelta(rel_delta, min_unit=min_unit, max_units=max_units)
