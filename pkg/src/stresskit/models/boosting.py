"""Multiclass gradient boosting over depth-limited regression trees.

Each iteration fits one tree per class to the negative gradient of the
multinomial deviance (one-hot minus softmax probability), on a subsampled row
set shared by the iteration's trees. Leaf values take the standard one-step
Newton update for this loss; the learning rate scales every tree's
contribution. Initial scores are the log class priors.
"""

from __future__ import annotations

import numpy as np

from .base import TrainedModel
from .common import multinomial_deviance, one_hot, softmax
from .trees import Tree, feature_columns, filter_sorted, grow_tree, presort

_MIN_LEAF_DENOMINATOR = 1e-150


def _newton_leaf(residual, leaf_denominator, k_classes):
    scale = (k_classes - 1.0) / k_classes

    def leaf_value(rows):
        den = leaf_denominator[rows].sum()
        if abs(den) < _MIN_LEAF_DENOMINATOR:
            return np.zeros(1)
        return np.array([scale * residual[rows].sum() / den])

    return leaf_value


class GBModel(TrainedModel):
    kind = "gb"

    def __init__(self, params, seed, classes, n_features, schema_fingerprint,
                 log_priors, trees, feature_importance, train_deviance):
        super().__init__(params, seed, classes, n_features, schema_fingerprint)
        self.log_priors = np.asarray(log_priors, dtype=np.float64)
        self.trees = trees  # list per iteration of one Tree per class
        self.feature_importance = np.asarray(feature_importance, dtype=np.float64)
        self.train_deviance = tuple(float(v) for v in train_deviance)

    def decision_scores(self, x: np.ndarray) -> np.ndarray:
        lr = self.params["learning_rate"]
        scores = np.tile(self.log_priors, (x.shape[0], 1))
        for iteration in self.trees:
            for c, tree in enumerate(iteration):
                scores[:, c] += lr * tree.predict(x)[:, 0]
        return scores

    def _proba(self, x):
        return softmax(self.decision_scores(x))

    def to_dict(self):
        d = self._meta()
        d["log_priors"] = self.log_priors.tolist()
        d["trees"] = [[t.to_dict() for t in iteration] for iteration in self.trees]
        d["feature_importance"] = self.feature_importance.tolist()
        d["train_deviance"] = list(self.train_deviance)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["params"], d["seed"], d["classes"], d["n_features"], d["schema_fingerprint"],
            d["log_priors"],
            [[Tree.from_dict(t) for t in iteration] for iteration in d["trees"]],
            d["feature_importance"], d["train_deviance"],
        )


def fit_gb(x, y_enc, n_classes, params, seed, fingerprint, classes) -> GBModel:
    n, d = x.shape
    n_estimators = params["n_estimators"]
    learning_rate = params["learning_rate"]
    subsample = params["subsample"]
    max_depth = params["max_depth"]

    priors = np.bincount(y_enc, minlength=n_classes) / n
    log_priors = np.log(priors)
    scores = np.tile(log_priors, (n, 1))
    targets = one_hot(y_enc, n_classes)
    order = presort(x)
    columns = feature_columns(x)
    rng = np.random.default_rng(seed)
    importance = np.zeros(d)
    all_trees = []
    deviance = [multinomial_deviance(scores, y_enc)]

    mask = np.empty(n, dtype=bool)
    for _ in range(n_estimators):
        proba = softmax(scores)
        if subsample < 1.0:
            n_sub = max(1, int(round(subsample * n)))
            rows = rng.permutation(n)[:n_sub]
            mask[:] = False
            mask[rows] = True
            node_sorted = filter_sorted(order, mask)
        else:
            node_sorted = order
        iteration = []
        for c in range(n_classes):
            residual = targets[:, c] - proba[:, c]
            denominator = proba[:, c] * (1.0 - proba[:, c])
            tree = grow_tree(
                columns,
                residual[:, None],
                node_sorted,
                max_depth=max_depth,
                leaf_value=_newton_leaf(residual, denominator, n_classes),
                importance_out=importance,
            )
            scores[:, c] += learning_rate * tree.predict(x)[:, 0]
            iteration.append(tree)
        all_trees.append(iteration)
        deviance.append(multinomial_deviance(scores, y_enc))

    return GBModel(params, seed, classes, d, fingerprint,
                   log_priors, all_trees, importance, deviance)
