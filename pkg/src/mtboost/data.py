"""CSV ingestion, preprocessing and per-feature histogram binning.

Raw feature values are discretized into small integer bin indices once, up
front; all split finding later works on bins. Binning is quantile based
(equal frequency), which is robust to the heavy-tailed monetary features
this engine is typically pointed at. Intervals are right-closed: a value
equal to a boundary belongs to the bin that boundary tops. Missing values
(NaN) get a dedicated bin per feature, one past the last finite bin.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyFile,
    MissingLabelColumn,
    NegativeInput,
    NonNumericLabel,
)

DEFAULT_MAX_BINS = 255


@dataclass(frozen=True, eq=False)
class RawTable:
    """In-memory tabular dataset: float features (NaN = missing) and labels."""

    features: np.ndarray  # (m, d) float64
    labels: np.ndarray  # (m, n) float64, finite
    feature_names: tuple[str, ...]
    task_names: tuple[str, ...]

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.ndim != 2:
            raise ShapeError("features and labels must be 2-D")
        m, d = self.features.shape
        n = self.labels.shape[1]
        if m < 1 or d < 1 or n < 1:
            raise ShapeError("need at least one row, one feature and one task")
        if self.labels.shape[0] != m:
            raise ShapeError("features and labels disagree on row count")
        if len(self.feature_names) != d or len(self.task_names) != n:
            raise ShapeError("name lists disagree with matrix shapes")
        if not np.isfinite(self.labels).all():
            raise NonNumericLabel("labels must be finite")

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n(self) -> int:
        return self.labels.shape[1]


class ShapeError(ValueError):
    """Internal consistency violation while constructing a table."""


def load_csv(path, label_columns, missing_token: str = "") -> RawTable:
    """Read an RFC-4180 CSV with header into a RawTable.

    Columns named in ``label_columns`` become the label matrix (in the given
    order); every other column becomes a feature, in header order. Feature
    cells equal to ``missing_token`` or unparsable as numbers turn into NaN.
    Label cells must parse as finite numbers.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path}: no header row") from None
        rows = list(reader)
    if not rows:
        raise EmptyFile(f"{path}: no data rows")

    for name in label_columns:
        if name not in header:
            raise MissingLabelColumn(f"label column {name!r} not in header")
    label_idx = [header.index(name) for name in label_columns]
    feat_idx = [j for j in range(len(header)) if j not in set(label_idx)]
    if not feat_idx:
        raise ShapeError("every column is a label; no features left")

    m = len(rows)
    features = np.empty((m, len(feat_idx)), dtype=np.float64)
    labels = np.empty((m, len(label_idx)), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ShapeError(f"row {i + 2} has {len(row)} cells, header has {len(header)}")
        for out_j, j in enumerate(feat_idx):
            features[i, out_j] = _parse_feature(row[j], missing_token)
        for out_j, j in enumerate(label_idx):
            cell = row[j]
            try:
                value = float(cell)
            except ValueError:
                raise NonNumericLabel(
                    f"row {i + 2}, column {header[j]!r}: {cell!r} is not a number"
                ) from None
            if not math.isfinite(value):
                raise NonNumericLabel(f"row {i + 2}, column {header[j]!r}: non-finite label")
            labels[i, out_j] = value

    return RawTable(
        features=features,
        labels=labels,
        feature_names=tuple(header[j] for j in feat_idx),
        task_names=tuple(label_columns),
    )


def _parse_feature(cell: str, missing_token: str) -> float:
    if cell == missing_token:
        return math.nan
    try:
        return float(cell)
    except ValueError:
        return math.nan


def read_feature_matrix(path, missing_token: str = ""):
    """Read a whole CSV as a float feature matrix (no label columns).

    Returns (matrix, column_names). Unparsable cells become NaN; used for
    prediction inputs where extra columns are simply ignored downstream.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path}: no header row") from None
        rows = list(reader)
    if not rows:
        raise EmptyFile(f"{path}: no data rows")
    matrix = np.empty((len(rows), len(header)), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ShapeError(f"row {i + 2} has {len(row)} cells, header has {len(header)}")
        for j, cell in enumerate(row):
            matrix[i, j] = _parse_feature(cell, missing_token)
    return matrix, tuple(header)


def write_csv(table: RawTable, path) -> None:
    """Write a RawTable back to CSV (features first, then label columns).

    Floats are rendered with ``repr`` so the file is byte-deterministic and
    round-trips exactly.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(table.feature_names) + list(table.task_names))
        for i in range(table.m):
            row = [_format_value(v) for v in table.features[i]]
            row += [_format_value(v) for v in table.labels[i]]
            writer.writerow(row)


def _format_value(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def log_transform(table: RawTable, feature_indices) -> RawTable:
    """Replace selected feature values x with log10(x + 1); NaN passes through."""
    features = table.features.copy()
    for f in sorted(feature_indices):
        col = features[:, f]
        if np.any(col < 0):
            raise NegativeInput(f"feature {table.feature_names[f]!r} has negative values")
        mask = ~np.isnan(col)
        features[mask, f] = np.log10(col[mask] + 1.0)
    return RawTable(features, table.labels, table.feature_names, table.task_names)


@dataclass(frozen=True)
class BinMapper:
    """Per-feature bin boundaries fitted on a training table.

    ``boundaries[f]`` holds the strictly increasing upper boundaries of the
    finite bins (length = finite_bins - 1; the topmost finite bin has no upper
    boundary and catches everything above). The missing bin sits at index
    ``finite_bins``, so total bins per feature is ``finite_bins + 1``.
    """

    boundaries: tuple[np.ndarray, ...]
    max_bins: int

    @property
    def n_features(self) -> int:
        return len(self.boundaries)

    @property
    def finite_bin_counts(self) -> np.ndarray:
        return np.array([len(b) + 1 for b in self.boundaries], dtype=np.int64)

    @property
    def missing_bins(self) -> np.ndarray:
        return self.finite_bin_counts

    @property
    def bin_counts(self) -> np.ndarray:
        """Total bins per feature, missing bin included."""
        return self.finite_bin_counts + 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinMapper):
            return NotImplemented
        return self.max_bins == other.max_bins and len(self.boundaries) == len(
            other.boundaries
        ) and all(np.array_equal(a, b) for a, b in zip(self.boundaries, other.boundaries))


def fit_bins(table: RawTable, max_bins: int = DEFAULT_MAX_BINS) -> BinMapper:
    """Fit quantile bin boundaries per feature over the non-NaN values.

    A feature with k <= max_bins distinct values gets exactly k bins, one per
    value. Otherwise boundaries are the (j / max_bins)-quantiles for
    j = 1..max_bins-1, linearly interpolated, deduplicated, and trimmed below
    the feature maximum so the top bin is never empty on the fitting data.
    A constant (or all-missing) feature yields a single finite bin.
    """
    if max_bins < 2:
        raise ValueError("max_bins must be >= 2")
    boundaries = []
    for f in range(table.d):
        col = table.features[:, f]
        vals = col[~np.isnan(col)]
        if vals.size == 0:
            boundaries.append(np.empty(0, dtype=np.float64))
            continue
        distinct = np.unique(vals)
        if distinct.size <= max_bins:
            cuts = distinct[:-1]
        else:
            probs = np.arange(1, max_bins) / max_bins
            cuts = np.unique(np.quantile(vals, probs))
            cuts = cuts[cuts < distinct[-1]]
        boundaries.append(np.ascontiguousarray(cuts, dtype=np.float64))
    return BinMapper(boundaries=tuple(boundaries), max_bins=max_bins)


@dataclass(frozen=True, eq=False)
class Dataset:
    """A table after binning: integer bin matrix plus untouched labels."""

    binned: np.ndarray  # (m, d) unsigned int
    labels: np.ndarray  # (m, n) float64
    mapper: BinMapper
    raw_feature_minmax: np.ndarray  # (d, 2)
    feature_names: tuple[str, ...]
    task_names: tuple[str, ...]
    binned_by_feature: np.ndarray = field(repr=False, default=None)  # (d, m) view

    @property
    def m(self) -> int:
        return self.binned.shape[0]

    @property
    def d(self) -> int:
        return self.binned.shape[1]

    @property
    def n(self) -> int:
        return self.labels.shape[1]


def bin_column(values: np.ndarray, cuts: np.ndarray) -> np.ndarray:
    """Map raw values of one feature to bin indices (right-closed intervals).

    Finite values below every boundary clamp to bin 0, values above every
    boundary clamp to the top finite bin; NaN maps to the missing bin
    (= number of finite bins).
    """
    bins = np.searchsorted(cuts, values, side="left")
    missing = np.isnan(values)
    bins[missing] = len(cuts) + 1
    return bins


def apply_bins(table: RawTable, mapper: BinMapper) -> Dataset:
    """Bin every feature of ``table`` with a fitted mapper."""
    if table.d != mapper.n_features:
        raise DimensionMismatch(
            f"table has {table.d} features, mapper was fitted on {mapper.n_features}"
        )
    dtype = np.uint8 if int(mapper.bin_counts.max()) <= 256 else np.uint32
    binned = np.empty((table.m, table.d), dtype=dtype)
    minmax = np.empty((table.d, 2), dtype=np.float64)
    for f in range(table.d):
        col = table.features[:, f]
        binned[:, f] = bin_column(col, mapper.boundaries[f])
        finite = col[~np.isnan(col)]
        if finite.size:
            minmax[f] = (finite.min(), finite.max())
        else:
            minmax[f] = (math.nan, math.nan)
    return Dataset(
        binned=binned,
        labels=table.labels.copy(),
        mapper=mapper,
        raw_feature_minmax=minmax,
        feature_names=table.feature_names,
        task_names=table.task_names,
        binned_by_feature=np.ascontiguousarray(binned.T),
    )
