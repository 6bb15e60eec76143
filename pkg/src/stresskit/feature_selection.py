"""Feature scoring and selection.

The hybrid selector filters out features weakly correlated with the target,
then recursively eliminates the least important survivors using a tree
ensemble's impurity-based importances. The four comparison selectors (ANOVA
F, mutual information, plain RFE, correlation) and the feature-count sweep
live here as well.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from . import models
from .datamodel import Dataset, stratified_split
from .errors import (
    AllFeaturesFiltered,
    ClassTooSmall,
    InvalidSpec,
    TooFewRows,
    UnsupportedModel,
)
from .models import DESK_ESTIMATOR_PARAMS, ModelConfig, TrainedModel
from .resampling import balance_all

log = logging.getLogger("stresskit.selection")

SELECTION_METHODS = (
    "anova_f",
    "mutual_info",
    "rfe",
    "correlation",
    "feature_importance",
    "coc_rfe",
)

FILTER_MODES = ("relevance", "redundancy")


def _desk_estimator(seed: int) -> ModelConfig:
    return ModelConfig("gb", dict(DESK_ESTIMATOR_PARAMS), seed=seed)


@dataclass(frozen=True)
class SelectionConfig:
    """Target size, correlation threshold, ranking estimator, and RFE step."""

    n_target: int
    correlation_threshold: float = 0.0
    estimator: ModelConfig | None = None
    step: int = 1
    seed: int = 0
    filter_mode: str = "relevance"

    def __post_init__(self):
        if self.n_target < 1:
            raise InvalidSpec("n_target must be >= 1")
        if not 0.0 <= self.correlation_threshold <= 1.0:
            raise InvalidSpec("correlation_threshold must be in [0,1]")
        if self.step < 1:
            raise InvalidSpec("step must be >= 1")
        if self.filter_mode not in FILTER_MODES:
            raise InvalidSpec(f"filter_mode must be one of {FILTER_MODES}")


@dataclass(frozen=True)
class SelectionResult:
    """Surviving features (schema order), elimination trail, and filter drops."""

    selected: tuple[str, ...]
    elimination_order: tuple[str, ...]
    filter_dropped: tuple[tuple[str, float], ...]
    method: str
    truncated: bool = False  # fewer survivors than n_target; all were returned

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "elimination_order": list(self.elimination_order),
            "filter_dropped": [[n, s] for n, s in self.filter_dropped],
            "method": self.method,
            "truncated": self.truncated,
        }


def correlation_matrix(ds: Dataset) -> np.ndarray:
    """Pearson correlations between features; zero-variance columns correlate 0."""
    if ds.n_rows < 2:
        raise TooFewRows(f"need >= 2 rows for correlations, got {ds.n_rows}")
    x = ds.x
    centered = x - x.mean(axis=0)
    std = x.std(axis=0)
    ok = std > 0
    scaled = np.zeros_like(centered)
    scaled[:, ok] = centered[:, ok] / std[ok]
    r = scaled.T @ scaled / ds.n_rows
    np.clip(r, -1.0, 1.0, out=r)
    np.fill_diagonal(r, 1.0)
    return r


def feature_target_scores(ds: Dataset) -> np.ndarray:
    """|Pearson correlation| between each feature and the integer-coded label."""
    if ds.n_rows < 2:
        raise TooFewRows(f"need >= 2 rows, got {ds.n_rows}")
    y = ds.y.astype(np.float64)
    y_std = y.std()
    if y_std == 0:
        raise ClassTooSmall("labels are constant; need >= 2 classes")
    yc = (y - y.mean()) / y_std
    x = ds.x
    std = x.std(axis=0)
    scores = np.zeros(ds.n_features)
    ok = std > 0
    centered = x[:, ok] - x[:, ok].mean(axis=0)
    scores[ok] = np.abs(centered.T @ yc / (ds.n_rows * std[ok]))
    np.clip(scores, 0.0, 1.0, out=scores)
    return scores


def anova_f_scores(ds: Dataset) -> np.ndarray:
    """One-way ANOVA F statistic per feature.

    Zero within-group variance with distinct group means yields an infinity
    sentinel so such features rank first.
    """
    present = [c for c in range(ds.n_classes) if np.any(ds.y == c)]
    if len(present) < 2:
        raise ClassTooSmall("need >= 2 classes for ANOVA")
    groups = []
    for c in present:
        rows = ds.x[ds.y == c]
        if rows.shape[0] < 2:
            raise ClassTooSmall(f"class {c} has {rows.shape[0]} sample(s); need >= 2")
        groups.append(rows)
    n = ds.n_rows
    k = len(groups)
    grand = ds.x.mean(axis=0)
    ss_between = np.zeros(ds.n_features)
    ss_within = np.zeros(ds.n_features)
    for rows in groups:
        mean_g = rows.mean(axis=0)
        ss_between += rows.shape[0] * (mean_g - grand) ** 2
        ss_within += ((rows - mean_g) ** 2).sum(axis=0)
    ms_between = ss_between / (k - 1)
    ms_within = ss_within / (n - k)
    scores = np.zeros(ds.n_features)
    zero_within = ms_within <= 0
    scores[~zero_within] = ms_between[~zero_within] / ms_within[~zero_within]
    scores[zero_within & (ms_between > 0)] = np.inf
    return scores


def mutual_info_scores(ds: Dataset, n_bins: int = 10) -> np.ndarray:
    """Mutual information (nats) between quantile-binned features and the label."""
    if n_bins < 2:
        raise InvalidSpec("n_bins must be >= 2")
    y = ds.y
    n = ds.n_rows
    p_y = np.bincount(y, minlength=ds.n_classes) / n
    scores = np.empty(ds.n_features)
    for j in range(ds.n_features):
        col = ds.x[:, j]
        edges = np.unique(np.quantile(col, np.linspace(0, 1, n_bins + 1)[1:-1]))
        bins = np.searchsorted(edges, col, side="right")
        n_b = edges.size + 1
        joint = np.bincount(bins * ds.n_classes + y, minlength=n_b * ds.n_classes)
        joint = joint.reshape(n_b, ds.n_classes) / n
        p_b = joint.sum(axis=1)
        mi = 0.0
        nz = joint > 0
        outer = p_b[:, None] * p_y[None, :]
        mi = float((joint[nz] * np.log(joint[nz] / outer[nz])).sum())
        scores[j] = max(mi, 0.0)
    return scores


def importance_scores(model: TrainedModel) -> np.ndarray:
    """Per-feature share of total impurity decrease across a tree ensemble."""
    importance = getattr(model, "feature_importance", None)
    if importance is None:
        raise UnsupportedModel(
            f"importance scores need a tree ensemble (gb/rf), not {model.kind!r}"
        )
    total = importance.sum()
    if total <= 0:
        return np.zeros_like(importance)
    return importance / total


def _eliminate(ds: Dataset, names: list[str], estimator: ModelConfig,
               n_target: int, step: int) -> tuple[list[str], list[str]]:
    """RFE core: repeatedly drop the least-important surviving features."""
    current = list(names)
    eliminated: list[str] = []
    while len(current) > n_target:
        fitted = models.fit(estimator, ds.select_features(current))
        ranks = importance_scores(fitted)
        n_remove = min(step, len(current) - n_target)
        drop_pos = np.argsort(ranks, kind="stable")[:n_remove]
        dropped = [current[p] for p in sorted(drop_pos, key=lambda p: (ranks[p], p))]
        eliminated.extend(dropped)
        current = [name for name in current if name not in dropped]
    return current, eliminated


def rfe(ds: Dataset, estimator: ModelConfig | None, n_target: int,
        step: int = 1, seed: int = 0) -> SelectionResult:
    """Recursive feature elimination with no correlation filter."""
    cfg = SelectionConfig(n_target=n_target, correlation_threshold=0.0,
                          estimator=estimator, step=step, seed=seed)
    result = coc_rfe(ds, cfg)
    return dataclasses.replace(result, method="rfe")


def coc_rfe(ds: Dataset, cfg: SelectionConfig) -> SelectionResult:
    """Correlation filter followed by recursive elimination.

    Stage 1 drops every feature whose target-correlation score falls below
    the threshold (or, in redundancy mode, features too correlated with an
    earlier survivor). Stage 2 runs RFE on the survivors down to n_target.
    If the filter leaves fewer than n_target features, all survivors are
    returned with the truncated flag set.
    """
    if cfg.n_target > ds.n_features:
        raise InvalidSpec(
            f"n_target {cfg.n_target} exceeds the {ds.n_features} available features"
        )
    names = list(ds.schema.feature_names)
    if cfg.filter_mode == "relevance":
        scores = feature_target_scores(ds)
        keep = scores >= cfg.correlation_threshold
    else:
        r = np.abs(correlation_matrix(ds))
        scores = feature_target_scores(ds)
        keep = np.ones(ds.n_features, dtype=bool)
        for j in range(ds.n_features):
            earlier = np.flatnonzero(keep[:j])
            if earlier.size and cfg.correlation_threshold < 1.0:
                if (r[j, earlier] > cfg.correlation_threshold).any():
                    keep[j] = False
    if not keep.any():
        raise AllFeaturesFiltered(
            f"correlation threshold {cfg.correlation_threshold} removed all features"
        )
    filter_dropped = tuple(
        (names[j], float(scores[j])) for j in range(ds.n_features) if not keep[j]
    )
    survivors = [names[j] for j in range(ds.n_features) if keep[j]]

    truncated = len(survivors) < cfg.n_target
    if truncated:
        log.warning(
            "filter left %d features but n_target is %d; returning all survivors",
            len(survivors), cfg.n_target,
        )
        selected, eliminated = survivors, []
    else:
        estimator = cfg.estimator or _desk_estimator(cfg.seed)
        estimator = dataclasses.replace(estimator, seed=cfg.seed)
        selected, eliminated = _eliminate(ds, survivors, estimator, cfg.n_target, cfg.step)

    return SelectionResult(
        selected=tuple(selected),
        elimination_order=tuple(eliminated),
        filter_dropped=filter_dropped,
        method="coc_rfe",
        truncated=truncated,
    )


def select_features(ds: Dataset, method: str, n_target: int, *,
                    estimator: ModelConfig | None = None, threshold: float = 0.0,
                    step: int = 1, seed: int = 0,
                    filter_mode: str = "relevance") -> SelectionResult:
    """Dispatch to one of the six selection methods; score methods take top-n."""
    if method not in SELECTION_METHODS:
        raise InvalidSpec(f"unknown selection method {method!r}; expected {SELECTION_METHODS}")
    if n_target > ds.n_features:
        raise InvalidSpec(f"n_target {n_target} exceeds {ds.n_features} features")
    if method == "coc_rfe":
        cfg = SelectionConfig(n_target, threshold, estimator, step, seed, filter_mode)
        return coc_rfe(ds, cfg)
    if method == "rfe":
        return rfe(ds, estimator, n_target, step, seed)
    if method == "anova_f":
        scores = anova_f_scores(ds)
    elif method == "mutual_info":
        scores = mutual_info_scores(ds)
    elif method == "correlation":
        scores = feature_target_scores(ds)
    else:  # feature_importance
        fitted = models.fit(estimator or _desk_estimator(seed), ds)
        scores = importance_scores(fitted)
    top = np.sort(np.argsort(-scores, kind="stable")[:n_target])
    names = ds.schema.feature_names
    return SelectionResult(
        selected=tuple(names[j] for j in top),
        elimination_order=tuple(),
        filter_dropped=tuple(),
        method=method,
    )


@dataclass(frozen=True)
class EvalProtocol:
    """How sweep rows are scored: split, optional balancing, final model."""

    model: ModelConfig
    train_fraction: float = 0.7
    seed: int = 0
    smote_k: int | None = None


@dataclass(frozen=True)
class SweepRow:
    count: int
    accuracy: float
    selected: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"count": self.count, "accuracy": self.accuracy, "selected": list(self.selected)}


def sweep(ds: Dataset, method: str, counts, estimator: ModelConfig | None,
          protocol: EvalProtocol, *, threshold: float = 0.0, step: int = 1,
          seed: int = 0) -> list[SweepRow]:
    """Accuracy of the protocol's model at each selection size, in input order.

    Selection runs on the training split only; the held-out split scores the
    final model.
    """
    counts = list(counts)
    if max(counts) > ds.n_features:
        raise InvalidSpec(f"max count {max(counts)} exceeds {ds.n_features} features")
    pair = stratified_split(ds, protocol.train_fraction, protocol.seed)
    train, test = pair.train, pair.test
    if protocol.smote_k is not None:
        train = balance_all(train, protocol.smote_k, protocol.seed)
    rows = []
    for count in counts:
        result = select_features(train, method, count, estimator=estimator,
                                 threshold=threshold, step=step, seed=seed)
        fitted = models.fit(protocol.model, train.select_features(result.selected))
        pred = fitted.predict(test.select_features(result.selected).x)
        accuracy = float(np.mean(pred == test.y))
        rows.append(SweepRow(count, accuracy, result.selected))
    return rows
