"""Confusion matrices, classification metrics, stratified k-fold, grid search."""

from __future__ import annotations

import itertools
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import models
from .datamodel import Dataset
from .errors import (
    AllCandidatesFailed,
    ClassSmallerThanK,
    ConfigError,
    EmptyMatrix,
    InvalidSpec,
    LabelOutOfRange,
    LengthMismatch,
    StressKitError,
)
from .models import ModelConfig, validate_param

log = logging.getLogger("stresskit.evaluation")

THREADS_ENV = "STRESSKIT_THREADS"


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
        return 1


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with true class on rows and predicted class on columns."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise InvalidSpec("confusion counts must be square")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(y_true, y_pred, n_classes: int) -> ConfusionMatrix:
    """Tally counts[i][j] = |{k : true=i, pred=j}|."""
    yt = np.asarray(y_true, dtype=np.int64)
    yp = np.asarray(y_pred, dtype=np.int64)
    if yt.shape != yp.shape:
        raise LengthMismatch(f"y_true has {yt.size} entries, y_pred has {yp.size}")
    for name, arr in (("y_true", yt), ("y_pred", yp)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise LabelOutOfRange(f"{name} contains labels outside 0..{n_classes - 1}")
    counts = np.bincount(yt * n_classes + yp, minlength=n_classes * n_classes)
    return ConfusionMatrix(counts.reshape(n_classes, n_classes))


@dataclass(frozen=True)
class EvaluationReport:
    """Accuracy plus per-class and averaged precision/recall/F1.

    Both macro and weighted averages are always present; ``averaging`` names
    which pair the headline precision/recall/f1 properties expose. Classes
    with a zero denominator score 0 and are listed in zero_division_classes.
    """

    accuracy: float
    per_class_precision: tuple[float, ...]
    per_class_recall: tuple[float, ...]
    per_class_f1: tuple[float, ...]
    support: tuple[int, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    averaging: str
    zero_division_classes: tuple[int, ...]

    @property
    def precision(self) -> float:
        return self.macro_precision if self.averaging == "macro" else self.weighted_precision

    @property
    def recall(self) -> float:
        return self.macro_recall if self.averaging == "macro" else self.weighted_recall

    @property
    def f1(self) -> float:
        return self.macro_f1 if self.averaging == "macro" else self.weighted_f1

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "averaging": self.averaging,
            "per_class": {
                "precision": list(self.per_class_precision),
                "recall": list(self.per_class_recall),
                "f1": list(self.per_class_f1),
                "support": list(self.support),
            },
            "macro": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "weighted": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
            "zero_division_classes": list(self.zero_division_classes),
        }


def metrics(cm: ConfusionMatrix, averaging: str = "macro") -> EvaluationReport:
    """Accuracy, per-class precision/recall/F1, and macro/weighted averages."""
    if averaging not in ("macro", "weighted"):
        raise InvalidSpec(f"averaging must be 'macro' or 'weighted', got {averaging!r}")
    counts = cm.counts
    total = counts.sum()
    if total == 0:
        raise EmptyMatrix("confusion matrix has no entries")
    diag = np.diag(counts).astype(np.float64)
    col = counts.sum(axis=0).astype(np.float64)
    row = counts.sum(axis=1).astype(np.float64)
    zero_division = []
    precision = np.zeros(cm.n_classes)
    recall = np.zeros(cm.n_classes)
    f1 = np.zeros(cm.n_classes)
    for c in range(cm.n_classes):
        if col[c] > 0:
            precision[c] = diag[c] / col[c]
        else:
            zero_division.append(c)
        if row[c] > 0:
            recall[c] = diag[c] / row[c]
        else:
            zero_division.append(c)
        if precision[c] + recall[c] > 0:
            f1[c] = 2 * precision[c] * recall[c] / (precision[c] + recall[c])
    weights = row / total
    return EvaluationReport(
        accuracy=float(diag.sum() / total),
        per_class_precision=tuple(precision),
        per_class_recall=tuple(recall),
        per_class_f1=tuple(f1),
        support=tuple(int(r) for r in row),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        weighted_precision=float((weights * precision).sum()),
        weighted_recall=float((weights * recall).sum()),
        weighted_f1=float((weights * f1).sum()),
        averaging=averaging,
        zero_division_classes=tuple(sorted(set(zero_division))),
    )


def evaluate_predictions(y_true, y_pred, n_classes: int,
                         averaging: str = "macro") -> EvaluationReport:
    return metrics(confusion(y_true, y_pred, n_classes), averaging)


def kfold_indices(labels, k: int, seed: int) -> list[np.ndarray]:
    """k disjoint stratified folds; per-class counts across folds differ by <= 1."""
    y = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise InvalidSpec("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        if idx.size < k:
            raise ClassSmallerThanK(f"class {int(c)} has {idx.size} samples; need >= {k}")
        perm = rng.permutation(idx)
        for fold, chunk in zip(folds, np.array_split(perm, k)):
            fold.append(chunk)
    return [np.sort(np.concatenate(parts)) for parts in folds]


@dataclass(frozen=True)
class HyperParamGrid:
    """Named axes of candidate values; the Cartesian product is the search space."""

    axes: dict[str, tuple]

    def __post_init__(self):
        if not self.axes:
            raise InvalidSpec("grid needs at least one axis")
        fixed = {}
        for name, values in self.axes.items():
            values = tuple(values)
            if not values:
                raise InvalidSpec(f"axis {name!r} has no candidate values")
            fixed[name] = values
        object.__setattr__(self, "axes", fixed)

    def candidates(self) -> list[dict]:
        names = list(self.axes)
        return [dict(zip(names, combo)) for combo in itertools.product(*self.axes.values())]

    @property
    def n_candidates(self) -> int:
        n = 1
        for values in self.axes.values():
            n *= len(values)
        return n


def default_grid(kind: str) -> HyperParamGrid:
    """The shipped per-model grid axes (resources/grids.json)."""
    payload = json.loads(
        resources.files("stresskit.resources").joinpath("grids.json").read_text("utf-8")
    )
    grids = payload["grids"]
    if kind not in grids:
        raise ConfigError(f"no built-in grid for model kind {kind!r}")
    return HyperParamGrid({name: tuple(vals) for name, vals in grids[kind].items()})


@dataclass(frozen=True)
class CandidateResult:
    params: dict
    fold_accuracies: tuple[float, ...]
    mean_accuracy: float
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "fold_accuracies": list(self.fold_accuracies),
            "mean_accuracy": self.mean_accuracy,
            "error": self.error,
        }


@dataclass(frozen=True)
class GridSearchResult:
    best_params: dict
    best_cv_accuracy: float
    table: tuple[CandidateResult, ...]

    def to_dict(self) -> dict:
        return {
            "best_params": self.best_params,
            "best_cv_accuracy": self.best_cv_accuracy,
            "table": [row.to_dict() for row in self.table],
        }


def grid_search(kind: str, grid: HyperParamGrid, train: Dataset,
                k: int, seed: int) -> GridSearchResult:
    """Mean k-fold CV accuracy for every candidate in product order.

    Candidates whose fit raises are recorded with the error and excluded from
    the argmax; ties go to the earliest candidate. STRESSKIT_THREADS > 1 runs
    candidates in a thread pool; results keep product order either way.
    """
    for name, values in grid.axes.items():
        for value in values:
            validate_param(kind, name, value)
    folds = kfold_indices(train.y, k, seed)
    fold_pairs = []
    for i, fold in enumerate(folds):
        rest = np.sort(np.concatenate([folds[j] for j in range(k) if j != i]))
        fold_pairs.append((train.select_rows(rest), train.select_rows(fold)))

    def evaluate(candidate: dict) -> CandidateResult:
        accs = []
        try:
            for fit_ds, val_ds in fold_pairs:
                model = models.fit(ModelConfig(kind, candidate, seed=seed), fit_ds)
                accs.append(float(np.mean(model.predict(val_ds.x) == val_ds.y)))
        except StressKitError as exc:
            return CandidateResult(candidate, tuple(), float("nan"), str(exc))
        return CandidateResult(candidate, tuple(accs), float(np.mean(accs)))

    candidates = grid.candidates()
    workers = min(_worker_count(), len(candidates))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            table = list(pool.map(evaluate, candidates))
    else:
        table = [evaluate(c) for c in candidates]

    best = None
    for row in table:
        if row.error is None and (best is None or row.mean_accuracy > best.mean_accuracy):
            best = row
    if best is None:
        raise AllCandidatesFailed(
            f"all {len(candidates)} candidates failed; first error: {table[0].error}"
        )
    return GridSearchResult(dict(best.params), best.mean_accuracy, tuple(table))
