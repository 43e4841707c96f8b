import typing as t
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd
from loguru import logger

from overlapkit.core.empirical import GroupedDataset
from overlapkit.core.errors import InputError


@dataclass(frozen=True)
class ParsedDataset:
    """Dataset read from a file, with the warnings raised while reading it."""

    data: GroupedDataset
    dropped_rows: int = 0
    warnings: t.Tuple[str, ...] = field(default=())


def parse_dataset(
    path: t.Union[str, Path],
    group_column: str,
    components: t.Optional[t.Sequence[str]] = None,
    min_groups: int = 1,
) -> ParsedDataset:
    """
    Read a comma separated file with one group label column and numeric component columns.

    When `components` isn't given, every column except `group_column` is used. Rows with a missing
    component value are dropped (complete observations are needed), groups are ordered by first appearance.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"Input file {path} doesn't exist")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as error:
        raise InputError(f"Can't read {path} as CSV: {error}")

    frame.columns = [str(column).strip() for column in frame.columns]
    if group_column not in frame.columns:
        raise InputError(f"Group column {group_column!r} not found, available columns: {', '.join(frame.columns)}")

    if components is None:
        components = [column for column in frame.columns if column != group_column]
    missing = [column for column in components if column not in frame.columns]
    if missing:
        raise InputError(f"Component column(s) not found: {', '.join(missing)}")
    if not components:
        raise InputError("At least one component column is required")

    frame = frame[[group_column, *components]].apply(lambda column: column.str.strip())
    blank = frame[list(components)].eq("").any(axis=1) | frame[group_column].eq("")
    dropped = int(blank.sum())
    frame = frame.loc[~blank]

    values = frame[list(components)].apply(pd.to_numeric, errors="coerce")
    bad_cells = values.isna() & frame[list(components)].ne("")
    if bad_cells.any().any():
        row, column = next(zip(*bad_cells.to_numpy().nonzero()))
        cell = frame[list(components)].iloc[row, column]
        raise InputError(f"Non-numeric cell {cell!r} in column {components[column]!r} (data row {frame.index[row] + 1})")

    labels = list(dict.fromkeys(frame[group_column]))
    if len(labels) < min_groups:
        raise InputError(f"Found {len(labels)} group(s), at least {min_groups} are required")

    groups = []
    for label in labels:
        table = values.loc[frame[group_column] == label].to_numpy(dtype=float)
        if table.shape[0] < 2:
            raise InputError(f"Group {label!r} has {table.shape[0]} complete observation(s), at least 2 are required")
        groups.append(table)

    warnings = []
    if dropped:
        warnings.append(f"Dropped {dropped} row(s) with missing values")
        logger.warning(warnings[-1])

    data = GroupedDataset.from_arrays(groups, labels, components)
    logger.debug(f"Read {data.N} observations of {data.k} group(s) on {data.d} component(s) from {path}")
    return ParsedDataset(data, dropped, tuple(warnings))
