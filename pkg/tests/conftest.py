import typing as t
from pathlib import Path

import numpy as np
import pytest

from overlapkit.core.empirical import GroupedDataset


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def four_group_dataset(rng: np.random.Generator) -> GroupedDataset:
    """Four groups on three components, shaped like the stable isotope case study."""
    shifts = (0.0, 0.3, -0.2, 0.6)
    groups = [rng.normal(shift, 1.0, size=(size, 3)) for shift, size in zip(shifts, (69, 71, 67, 70))]
    return GroupedDataset.from_arrays(groups, ["ARCS", "BDWF", "LKWF", "LSCS"], ["d13C", "d15N", "d34S"])


def write_grouped_csv(path: Path, data: GroupedDataset, group_column: str = "group") -> Path:
    lines = [",".join([group_column, *data.component_labels])]
    for label, table in zip(data.group_labels, data.groups):
        for row in table:
            lines.append(",".join([label, *(repr(float(value)) for value in row)]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def csv_writer(tmp_path: Path) -> t.Callable[..., Path]:
    """Write a dataset into `tmp_path` and return the file path."""
    def write(data: GroupedDataset, name: str = "data.csv", group_column: str = "group") -> Path:
        return write_grouped_csv(tmp_path / name, data, group_column)

    return write
