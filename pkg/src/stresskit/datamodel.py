"""Canonical dataset container, CSV I/O, stratified splitting, and synthetic data.

The on-disk format is a UTF-8 CSV with a header row: an optional ``subject_id``
column first, feature columns in schema order, and an integer label column
last. Floats are written with ``repr`` so a load/save/load cycle reproduces
every value exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ClassTooSmall,
    DataError,
    DuplicateFeatureName,
    EmptyDataset,
    InvalidDataset,
    InvalidSpec,
    MissingLabelColumn,
    NonFiniteValue,
)

SUBJECT_COLUMN = "subject_id"


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature names plus the label (and optional subject) column names."""

    feature_names: tuple[str, ...]
    label_name: str = "label"
    subject_column: str | None = None

    def __post_init__(self):
        names = tuple(self.feature_names)
        object.__setattr__(self, "feature_names", names)
        if not names:
            raise InvalidDataset("schema needs at least one feature")
        if any(not n for n in names):
            raise InvalidDataset("feature names must be non-empty")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DuplicateFeatureName(f"duplicate feature names: {dupes}")
        if self.label_name in names:
            raise InvalidDataset(f"label column {self.label_name!r} is also a feature")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def index_of(self, name: str) -> int:
        return self.feature_names.index(name)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix ``x``, integer labels ``y``, and its schema.

    ``n_classes`` is the declared class count; labels live in {0..n_classes-1}
    and the declared count survives row subsetting even when a class drops out
    of the subset.
    """

    schema: FeatureSchema
    x: np.ndarray
    y: np.ndarray
    subject_ids: tuple[str, ...] | None = None
    n_classes: int = 0  # 0 means "infer from labels"

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.x, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.int64)
        if x.ndim != 2:
            raise InvalidDataset("x must be a 2-D matrix")
        if x.shape[0] == 0:
            raise EmptyDataset("dataset has no rows")
        if x.shape[0] != y.shape[0]:
            raise InvalidDataset("row count of x differs from length of y")
        if x.shape[1] != self.schema.n_features:
            raise InvalidDataset(
                f"x has {x.shape[1]} columns but schema names {self.schema.n_features}"
            )
        if not np.all(np.isfinite(x)):
            r, c = np.argwhere(~np.isfinite(x))[0]
            raise NonFiniteValue(int(r), self.schema.feature_names[int(c)])
        if y.min() < 0:
            raise InvalidDataset("labels must be non-negative")
        declared = self.n_classes or int(y.max()) + 1
        if declared < 2:
            raise InvalidDataset("dataset must declare at least 2 classes")
        if y.max() >= declared:
            raise InvalidDataset(f"label {int(y.max())} >= n_classes {declared}")
        if self.subject_ids is not None:
            subs = tuple(str(s) for s in self.subject_ids)
            if len(subs) != x.shape[0]:
                raise InvalidDataset("subject_ids length differs from row count")
            object.__setattr__(self, "subject_ids", subs)
        object.__setattr__(self, "x", _readonly(x))
        object.__setattr__(self, "y", _readonly(y))
        object.__setattr__(self, "n_classes", declared)

    @property
    def n_rows(self) -> int:
        return self.x.shape[0]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    def select_rows(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        subs = None
        if self.subject_ids is not None:
            subs = tuple(self.subject_ids[i] for i in idx)
        return Dataset(self.schema, self.x[idx].copy(), self.y[idx].copy(), subs, self.n_classes)

    def select_features(self, names) -> "Dataset":
        names = list(names)
        cols = [self.schema.index_of(n) for n in names]
        schema = FeatureSchema(tuple(names), self.schema.label_name, self.schema.subject_column)
        return Dataset(schema, self.x[:, cols].copy(), self.y.copy(), self.subject_ids, self.n_classes)


@dataclass(frozen=True)
class SplitPair:
    """Row-disjoint train/test datasets produced by a stratified split."""

    train: Dataset
    test: Dataset
    ratio: float
    seed: int


def class_histogram(ds: Dataset) -> dict[int, int]:
    """Per-class row counts over all declared classes (absent classes count 0)."""
    counts = np.bincount(ds.y, minlength=ds.n_classes)
    return {c: int(counts[c]) for c in range(ds.n_classes)}


def stratified_split(ds: Dataset, train_fraction: float, seed: int) -> SplitPair:
    """Split rows per class, putting round(count * fraction) of each class in train.

    Per-class train counts are clamped to [1, count-1] so both sides keep every
    class that the source has. Deterministic for a fixed seed.
    """
    if not 0.0 < train_fraction < 1.0:
        raise InvalidSpec(f"train_fraction must be in (0,1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in range(ds.n_classes):
        idx = np.flatnonzero(ds.y == c)
        if idx.size == 0:
            continue
        if idx.size < 2:
            raise ClassTooSmall(f"class {c} has {idx.size} sample(s); need >= 2 to split")
        perm = rng.permutation(idx)
        n_train = int(round(idx.size * train_fraction))
        n_train = min(max(n_train, 1), idx.size - 1)
        train_idx.append(perm[:n_train])
        test_idx.append(perm[n_train:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return SplitPair(ds.select_rows(train_idx), ds.select_rows(test_idx), train_fraction, seed)


# --- synthetic data ----------------------------------------------------------

@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a Gaussian synthetic classification dataset.

    Informative columns get class-dependent means spaced ``class_separation``
    apart (unit noise). Redundant columns are fixed random linear combinations
    of the informative ones; noise columns are class-independent.
    """

    n_classes: int
    class_counts: tuple[int, ...]
    n_informative: int
    n_redundant: int = 0
    n_noise: int = 0
    class_separation: float = 1.0
    seed: int = 0


def generate_synthetic(spec: SynthSpec) -> Dataset:
    """Deterministically generate a Dataset from a SynthSpec."""
    if spec.n_classes < 2:
        raise InvalidSpec("n_classes must be >= 2")
    counts = tuple(int(c) for c in spec.class_counts)
    if len(counts) != spec.n_classes:
        raise InvalidSpec("class_counts length must equal n_classes")
    if any(c <= 0 for c in counts):
        raise InvalidSpec("class_counts must be positive")
    if spec.n_informative < 1:
        raise InvalidSpec("need at least one informative feature")
    if spec.n_redundant < 0 or spec.n_noise < 0:
        raise InvalidSpec("feature counts must be non-negative")
    if spec.class_separation < 0:
        raise InvalidSpec("class_separation must be non-negative")

    rng = np.random.default_rng(spec.seed)
    n = sum(counts)
    y = np.repeat(np.arange(spec.n_classes), counts)
    x_inf = rng.standard_normal((n, spec.n_informative))
    x_inf += y[:, None] * spec.class_separation
    blocks = [x_inf]
    names = [f"inf_{i}" for i in range(spec.n_informative)]
    if spec.n_redundant:
        mix = rng.standard_normal((spec.n_informative, spec.n_redundant))
        blocks.append(x_inf @ mix)
        names += [f"red_{i}" for i in range(spec.n_redundant)]
    if spec.n_noise:
        blocks.append(rng.standard_normal((n, spec.n_noise)))
        names += [f"noise_{i}" for i in range(spec.n_noise)]
    x = np.hstack(blocks)
    schema = FeatureSchema(tuple(names))
    return Dataset(schema, x, y, None, spec.n_classes)


# --- CSV I/O -----------------------------------------------------------------

def _parse_float(cell: str, row: int, col: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise NonFiniteValue(row, col) from None
    if not math.isfinite(v):
        raise NonFiniteValue(row, col)
    return v


def _parse_label(cell: str, row: int, col: str) -> int:
    v = _parse_float(cell, row, col)
    if v != int(v):
        raise NonFiniteValue(row, col)
    return int(v)


def load_dataset(path, label_column: str = "label") -> Dataset:
    """Load the canonical CSV into a Dataset.

    Any cell that does not parse as a finite number (integer for the label)
    raises NonFiniteValue naming the offending row and column.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDataset(f"{path}: file is empty") from None
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise DuplicateFeatureName(f"{path}: duplicate columns {dupes}")
        if label_column not in header:
            raise MissingLabelColumn(f"{path}: no column named {label_column!r}")
        subject_col = SUBJECT_COLUMN if SUBJECT_COLUMN in header else None
        feature_names = [h for h in header if h != label_column and h != subject_col]
        if not feature_names:
            raise InvalidDataset(f"{path}: no feature columns")
        col_pos = {h: i for i, h in enumerate(header)}

        rows, labels, subjects = [], [], []
        for r, record in enumerate(reader):
            if not record:
                continue
            if len(record) != len(header):
                raise NonFiniteValue(r, header[min(len(record), len(header) - 1)])
            rows.append([_parse_float(record[col_pos[n]], r, n) for n in feature_names])
            labels.append(_parse_label(record[col_pos[label_column]], r, label_column))
            if subject_col is not None:
                subjects.append(record[col_pos[subject_col]])

    if not rows:
        raise EmptyDataset(f"{path}: no data rows")
    schema = FeatureSchema(tuple(feature_names), label_column, subject_col)
    return Dataset(
        schema,
        np.asarray(rows, dtype=np.float64),
        np.asarray(labels, dtype=np.int64),
        tuple(subjects) if subject_col is not None else None,
    )


def save_dataset(ds: Dataset, path) -> None:
    """Write the canonical CSV: subject_id first (if any), features, label last."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = list(ds.schema.feature_names) + [ds.schema.label_name]
        if ds.subject_ids is not None:
            header = [SUBJECT_COLUMN] + header
        writer.writerow(header)
        for i in range(ds.n_rows):
            row = [repr(float(v)) for v in ds.x[i]] + [str(int(ds.y[i]))]
            if ds.subject_ids is not None:
                row = [ds.subject_ids[i]] + row
            writer.writerow(row)
