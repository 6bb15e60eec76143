"""Shared oracles and builders for the test suite."""

from __future__ import annotations

import numpy as np

from stresskit.datamodel import Dataset, FeatureSchema


def make_dataset(x, y, n_classes=0, subject_ids=None, names=None):
    x = np.asarray(x, dtype=np.float64)
    if names is None:
        names = tuple(f"f{i}" for i in range(x.shape[1]))
    schema = FeatureSchema(
        tuple(names), subject_column="subject_id" if subject_ids is not None else None
    )
    return Dataset(schema, x, np.asarray(y), subject_ids, n_classes)


def segment_residual(point, x_class, k):
    """Smallest distance from `point` to any admissible SMOTE segment.

    Admissible segments run from a class row x_i to one of its k nearest
    same-class neighbours (self excluded, brute-force distances). Checks the
    closed segment: the projection parameter is clamped to [0, 1].
    """
    diffs = x_class[:, None, :] - x_class[None, :, :]
    d2 = (diffs**2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    neighbors = np.argsort(d2, axis=1, kind="stable")[:, :k]
    best = np.inf
    for i in range(x_class.shape[0]):
        xi = x_class[i]
        for j in neighbors[i]:
            seg = x_class[j] - xi
            seg_norm2 = float(seg @ seg)
            if seg_norm2 == 0.0:
                residual = float(np.linalg.norm(point - xi))
            else:
                t = float((point - xi) @ seg) / seg_norm2
                t = min(max(t, 0.0), 1.0)
                residual = float(np.linalg.norm(point - (xi + t * seg)))
            best = min(best, residual)
    return best


def pearson_oracle(a, b):
    """Direct-formula Pearson correlation, independent of the library path."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    am, bm = a.mean(), b.mean()
    num = ((a - am) * (b - bm)).sum()
    den = np.sqrt(((a - am) ** 2).sum() * ((b - bm) ** 2).sum())
    return num / den


def dft_power_oracle(values):
    """O(n^2) DFT periodogram of the mean-removed series (positive bins)."""
    v = np.asarray(values, dtype=np.float64)
    v = v - v.mean()
    n = v.size
    ks = np.arange(n // 2 + 1)
    power = np.empty(ks.size)
    t = np.arange(n)
    for k in ks:
        re = (v * np.cos(-2 * np.pi * k * t / n)).sum()
        im = (v * np.sin(-2 * np.pi * k * t / n)).sum()
        power[k] = (re**2 + im**2) / n
    return power
