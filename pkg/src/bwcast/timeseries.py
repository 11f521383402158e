"""Series / dataset containers, CSV ingestion and gap filling.

Missing samples are carried as ``NaN`` until :func:`interpolate_missing`
removes them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DataError

MISSING_MARKERS = ("", "na")


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Series:
    """A named univariate sequence, optionally time-stamped (seconds)."""

    name: str
    values: np.ndarray
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1:
            raise DataError(f"series {self.name!r}: values must be 1-D, got shape {values.shape}")
        object.__setattr__(self, "values", values)
        if self.timestamps is not None:
            ts = _frozen(self.timestamps)
            if ts.shape != values.shape:
                raise DataError(f"series {self.name!r}: timestamps length {ts.size} != values length {values.size}")
            if ts.size > 1 and not np.all(np.diff(ts) > 0):
                raise DataError(f"series {self.name!r}: timestamps must be strictly increasing")
            object.__setattr__(self, "timestamps", ts)

    def __len__(self) -> int:
        return self.values.size

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.values).any())

    def with_values(self, values) -> Series:
        return Series(self.name, values, self.timestamps if len(values) == len(self) else None)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Multi-feature table; feature 0 is the forecasting target."""

    features: tuple[Series, ...]

    def __post_init__(self):
        feats = tuple(self.features)
        if not feats:
            raise DataError("dataset needs at least one feature")
        names = [s.name for s in feats]
        if len(set(names)) != len(names):
            raise DataError(f"feature names must be unique, got {names}")
        lengths = {len(s) for s in feats}
        if len(lengths) != 1:
            raise DataError(f"all features must have the same length, got {sorted(lengths)}")
        object.__setattr__(self, "features", feats)

    @classmethod
    def from_array(cls, array, names: Sequence[str] | None = None) -> Dataset:
        array = np.asarray(array, dtype=float)
        if array.ndim == 1:
            array = array[:, None]
        if names is None:
            names = [f"col{j}" for j in range(array.shape[1])]
        return cls(tuple(Series(name, array[:, j]) for j, name in enumerate(names)))

    @property
    def n(self) -> int:
        return len(self.features[0])

    @property
    def m(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.features]

    @property
    def target(self) -> Series:
        return self.features[0]

    def to_array(self) -> np.ndarray:
        """``(n, m)`` matrix, target in column 0."""
        return np.column_stack([s.values for s in self.features])

    def select(self, nfeatures: int) -> Dataset:
        if not 1 <= nfeatures <= self.m:
            raise DataError(f"nfeatures={nfeatures} outside [1, {self.m}]")
        return Dataset(self.features[:nfeatures])

    def slice(self, start: int, stop: int) -> Dataset:
        return Dataset(tuple(
            Series(s.name, s.values[start:stop], None if s.timestamps is None else s.timestamps[start:stop])
            for s in self.features
        ))

    def interpolated(self) -> Dataset:
        return Dataset(tuple(interpolate_missing(s) if s.has_missing else s for s in self.features))


@dataclass(frozen=True, eq=False)
class ParallelDataset:
    """Equidimensional datasets forecast side by side (``z`` members)."""

    members: tuple[Dataset, ...] = field(default_factory=tuple)

    @property
    def z(self) -> int:
        return len(self.members)

    @property
    def n(self) -> int:
        return self.members[0].n

    @property
    def m(self) -> int:
        return self.members[0].m

    @property
    def targets(self) -> list[Series]:
        return [d.target for d in self.members]

    def to_panel(self) -> np.ndarray:
        """``(n, m*z)`` matrix, member-major: member 0 features, member 1 features, ..."""
        return np.concatenate([d.to_array() for d in self.members], axis=1)

    @property
    def target_columns(self) -> list[int]:
        return [j * self.m for j in range(self.z)]


def assemble_parallel(datasets: Iterable[Dataset]) -> ParallelDataset:
    """Group datasets for parallel forecasting after checking equal (n, m)."""
    members = tuple(datasets)
    if not members:
        raise DataError("need at least one dataset")
    n0, m0 = members[0].n, members[0].m
    for idx, d in enumerate(members[1:], start=1):
        if (d.n, d.m) != (n0, m0):
            raise DataError(
                f"dimension mismatch: member {idx} has (n={d.n}, m={d.m}), expected (n={n0}, m={m0})"
            )
    return ParallelDataset(members)


def _parse_cell(cell: str, row: int, col: int) -> float:
    text = cell.strip()
    if text.lower() in MISSING_MARKERS:
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise DataError(f"row {row}, column {col}: non-numeric cell {cell!r}") from None


def load_csv(path, has_header: bool = True) -> Dataset:
    """Read a comma-separated file into a :class:`Dataset`.

    Rows are samples and columns are features; column 0 is the target.
    Empty cells and ``NA`` (any case) become ``NaN``.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    header = None
    if has_header and rows:
        header = [h.strip() for h in rows[0]]
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: zero data rows")

    width = len(header) if header is not None else len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DataError(f"{path}: ragged rows (row {i} has {len(r)} cells, expected {width})")

    data = np.array([[_parse_cell(c, i, j) for j, c in enumerate(r)] for i, r in enumerate(rows)])
    names = header if header is not None else [f"col{j}" for j in range(width)]
    return Dataset.from_array(data, names)


def write_csv(dataset: Dataset, path, header: bool = True) -> None:
    """Write with ``repr`` formatting so :func:`load_csv` reads back the same doubles."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(dataset.names)
        for row in dataset.to_array():
            writer.writerow(["NA" if math.isnan(v) else repr(float(v)) for v in row])


def interpolate_missing(series: Series) -> Series:
    """Fill NaN gaps linearly; leading/trailing gaps copy the nearest known value."""
    values = series.values
    known = ~np.isnan(values)
    if known.sum() < 2:
        raise DataError(f"series {series.name!r}: need at least two known values to interpolate")
    idx = np.arange(values.size, dtype=float)
    # np.interp holds the end values flat outside the known range
    filled = np.interp(idx, idx[known], values[known])
    filled[known] = values[known]
    return Series(series.name, filled, series.timestamps)
