"""Flat-array CART trees shared by the boosting and forest ensembles.

Splits maximize sum-of-squares gain over the target columns, which equals
variance reduction for a single regression target and Gini decrease for
one-hot class targets. Nodes reuse presorted per-feature row orderings, so a
split costs O(features x rows) instead of a fresh sort per node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_GAIN_EPS = 1e-12


@dataclass
class Tree:
    """Nodes as parallel arrays; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, q) leaf payloads

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def predict(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(x.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                break
            col = np.where(internal, feat, 0)
            go_left = x[np.arange(x.shape[0]), col] <= self.threshold[node]
            nxt = np.where(go_left, self.left[node], self.right[node])
            node = np.where(internal, nxt, node)
        return self.value[node]

    def node_depths(self) -> np.ndarray:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return depths

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=np.float64),
        )


def presort(x: np.ndarray) -> np.ndarray:
    """(d, n) table: row indices sorted by each feature, reusable across trees."""
    return np.argsort(x, axis=0, kind="stable").T.copy()


def feature_columns(x: np.ndarray) -> np.ndarray:
    """(d, n) contiguous copy of the features for fast per-column gathers."""
    return np.ascontiguousarray(x.T)


def filter_sorted(sorted_idx: np.ndarray, keep_mask: np.ndarray) -> np.ndarray:
    """Restrict a presorted table to the rows where keep_mask is True."""
    sel = keep_mask[sorted_idx]
    return sorted_idx[sel].reshape(sorted_idx.shape[0], int(keep_mask.sum()))


def _best_split(columns, targets, sorted_idx, feat_ids):
    """Best (feature, position, threshold, gain) over the candidate features.

    Gain ties break toward the lowest feature index, then the lowest
    threshold, via row-major argmax over ascending-ordered candidates.
    """
    m = sorted_idx.shape[1]
    if m < 2:
        return None
    if feat_ids is None:
        sub = sorted_idx
        feats = np.arange(sorted_idx.shape[0])
    else:
        sub = sorted_idx[feat_ids]
        feats = feat_ids
    n_left = np.arange(1, m, dtype=np.float64)
    n_right = np.arange(m - 1, 0, -1, dtype=np.float64)
    if targets.shape[1] == 1:
        csum = np.cumsum(targets[:, 0][sub], axis=1)
        total = csum[:, -1]
        lead = csum[:, :-1]
        gain = lead * lead / n_left + (total[:, None] - lead) ** 2 / n_right
        base = float(total[0] * total[0]) / m
    else:
        csum = np.cumsum(targets[sub], axis=1)
        total = csum[:, -1, :]
        lead = csum[:, :-1, :]
        gain = (lead**2).sum(axis=2) / n_left + ((total[:, None, :] - lead) ** 2).sum(
            axis=2
        ) / n_right
        base = float((total[0] ** 2).sum()) / m
    vals = columns[feats[:, None], sub]
    gain[vals[:, :-1] >= vals[:, 1:]] = -np.inf
    flat = int(np.argmax(gain))
    fi, pos = divmod(flat, m - 1)
    improvement = gain[fi, pos] - base
    if not improvement > _GAIN_EPS * max(1.0, abs(base)):
        return None
    lo, hi = vals[fi, pos], vals[fi, pos + 1]
    threshold = (lo + hi) / 2.0
    if threshold >= hi:  # midpoint rounded up to the upper value: fall back to the lower
        threshold = lo
    return int(feats[fi]), int(pos), float(threshold), float(improvement)


def grow_tree(
    columns: np.ndarray,
    targets: np.ndarray,
    sorted_idx: np.ndarray,
    *,
    max_depth: float,
    leaf_value,
    min_samples_split: int = 2,
    n_feature_sample: int | None = None,
    rng: np.random.Generator | None = None,
    importance_out: np.ndarray | None = None,
) -> Tree:
    """Grow one tree depth-first (left child first, deterministically).

    ``columns`` is the (d, n) feature_columns view of the training matrix.
    ``leaf_value(rows)`` supplies the payload vector for a leaf over the given
    row indices. ``n_feature_sample`` draws that many candidate features per
    split from ``rng`` (the forest's per-split subset); None searches all.
    """
    d = sorted_idx.shape[0]
    features, thresholds, lefts, rights, values = [], [], [], [], []
    side = np.zeros(columns.shape[1], dtype=bool)

    def new_node():
        features.append(-1)
        thresholds.append(0.0)
        lefts.append(-1)
        rights.append(-1)
        values.append(None)
        return len(features) - 1

    stack = [(new_node(), sorted_idx, 0)]
    while stack:
        node_id, node_sorted, depth = stack.pop()
        rows = node_sorted[0]
        split = None
        if depth < max_depth and rows.size >= min_samples_split:
            if n_feature_sample is not None and n_feature_sample < d:
                feat_ids = np.sort(rng.choice(d, size=n_feature_sample, replace=False))
            else:
                feat_ids = None
            split = _best_split(columns, targets, node_sorted, feat_ids)
        if split is None:
            values[node_id] = leaf_value(rows)
            continue
        feat, pos, threshold, improvement = split
        if importance_out is not None:
            importance_out[feat] += improvement
        features[node_id] = feat
        thresholds[node_id] = threshold
        left_ids = node_sorted[feat, : pos + 1]
        side[left_ids] = True
        sel = side[node_sorted]
        left_sorted = node_sorted[sel].reshape(d, pos + 1)
        right_sorted = node_sorted[~sel].reshape(d, rows.size - pos - 1)
        side[left_ids] = False
        left_id, right_id = new_node(), new_node()
        lefts[node_id] = left_id
        rights[node_id] = right_id
        # push right first so the left child is processed (and numbered) first
        stack.append((right_id, right_sorted, depth + 1))
        stack.append((left_id, left_sorted, depth + 1))

    q = len(next(v for v in values if v is not None))
    value_arr = np.zeros((len(values), q))
    for i, v in enumerate(values):
        if v is not None:
            value_arr[i] = v
    return Tree(
        np.asarray(features, dtype=np.int64),
        np.asarray(thresholds, dtype=np.float64),
        np.asarray(lefts, dtype=np.int64),
        np.asarray(rights, dtype=np.int64),
        value_arr,
    )
