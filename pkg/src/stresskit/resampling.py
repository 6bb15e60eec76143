"""Synthetic minority oversampling and whole-dataset class balancing.

New points are drawn on the segment between a minority sample and one of its
k nearest same-class neighbours; labels never leak across classes because the
neighbour search is restricted to the class being oversampled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import Dataset, class_histogram
from .errors import ClassTooSmallForK, InvalidSpec, UnknownClass


@dataclass(frozen=True)
class SmoteConfig:
    """Oversampling amount (percent of the class size), neighbour count, seed."""

    percent: float
    k_neighbors: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.percent < 0:
            raise InvalidSpec("percent must be >= 0")
        if self.k_neighbors < 1:
            raise InvalidSpec("k_neighbors must be >= 1")


def _neighbor_table(xc: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest same-class rows per row, self excluded."""
    d2 = ((xc[:, None, :] - xc[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    return np.argsort(d2, axis=1, kind="stable")[:, :k]


def _synthesize(xc: np.ndarray, n_new: int, k: int, rng: np.random.Generator):
    """n_new points on segments from class rows toward their k-NN.

    Every row gets n_new // len(xc) points; the remainder comes from one extra
    point for a uniformly chosen set of distinct rows. Returns the points and
    the index of the base row each one started from.
    """
    t_m = xc.shape[0]
    if n_new == 0:
        return np.empty((0, xc.shape[1])), np.empty(0, dtype=np.int64)
    neighbors = _neighbor_table(xc, k)
    rounds = n_new // t_m
    remainder = n_new - rounds * t_m

    base_idx = np.repeat(np.arange(t_m), rounds)
    if remainder:
        extra = np.sort(rng.choice(t_m, size=remainder, replace=False))
        base_idx = np.concatenate([base_idx, extra])
    picks = rng.integers(0, k, size=base_idx.size)
    delta = rng.random(base_idx.size)
    xi = xc[base_idx]
    xn = xc[neighbors[base_idx, picks]]
    return xi + delta[:, None] * (xn - xi), base_idx


def smote_class(ds: Dataset, target_class: int, cfg: SmoteConfig) -> np.ndarray:
    """floor(percent/100 * class size) synthetic rows for one class."""
    idx = np.flatnonzero(ds.y == target_class)
    if idx.size == 0:
        raise UnknownClass(f"class {target_class} has no rows")
    if idx.size < cfg.k_neighbors + 1:
        raise ClassTooSmallForK(
            f"class {target_class} has {idx.size} rows; need >= {cfg.k_neighbors + 1} "
            f"for k={cfg.k_neighbors}"
        )
    n_new = int(np.floor(cfg.percent * idx.size / 100.0))
    rng = np.random.default_rng(cfg.seed)
    rows, _ = _synthesize(ds.x[idx], n_new, cfg.k_neighbors, rng)
    return rows


def balance_all(ds: Dataset, k: int, seed: int) -> Dataset:
    """Oversample every non-majority class up to the majority count exactly.

    Original rows stay first and untouched; synthetic rows follow, grouped by
    ascending class. Synthetic rows inherit the subject id of their base row.
    Per-class generators derive deterministically from the master seed.
    """
    hist = class_histogram(ds)
    present = {c: n for c, n in hist.items() if n > 0}
    majority = max(present.values())
    for c, n in present.items():
        if n < majority and n < k + 1:
            raise ClassTooSmallForK(f"class {c} has {n} rows; need >= {k + 1} for k={k}")

    new_x, new_y, new_subs = [ds.x], [ds.y], []
    if ds.subject_ids is not None:
        new_subs = [list(ds.subject_ids)]
    for c in sorted(present):
        deficit = majority - present[c]
        if deficit == 0:
            continue
        idx = np.flatnonzero(ds.y == c)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(c,)))
        rows, base = _synthesize(ds.x[idx], deficit, k, rng)
        new_x.append(rows)
        new_y.append(np.full(deficit, c, dtype=np.int64))
        if ds.subject_ids is not None:
            new_subs.append([ds.subject_ids[i] for i in idx[base]])

    subs = tuple(s for chunk in new_subs for s in chunk) if ds.subject_ids is not None else None
    return Dataset(ds.schema, np.vstack(new_x), np.concatenate(new_y), subs, ds.n_classes)
