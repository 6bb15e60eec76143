"""Random forest: bagged Gini trees with per-split feature subsets.

Each tree votes its leaf's majority class; predict_proba reports vote shares,
so predict is the majority vote with ties resolved toward the lowest class id.
"""

from __future__ import annotations

import math

import numpy as np

from .base import TrainedModel
from .common import one_hot
from .trees import Tree, feature_columns, grow_tree, presort


class RFModel(TrainedModel):
    kind = "rf"

    def __init__(self, params, seed, classes, n_features, schema_fingerprint,
                 trees, feature_importance):
        super().__init__(params, seed, classes, n_features, schema_fingerprint)
        self.trees = trees
        self.feature_importance = np.asarray(feature_importance, dtype=np.float64)

    def _proba(self, x):
        votes = np.zeros((x.shape[0], self.n_classes))
        rows = np.arange(x.shape[0])
        for tree in self.trees:
            winner = np.argmax(tree.predict(x), axis=1)
            votes[rows, winner] += 1.0
        return votes / len(self.trees)

    def to_dict(self):
        d = self._meta()
        d["trees"] = [t.to_dict() for t in self.trees]
        d["feature_importance"] = self.feature_importance.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["params"], d["seed"], d["classes"], d["n_features"],
                   d["schema_fingerprint"], [Tree.from_dict(t) for t in d["trees"]],
                   d["feature_importance"])


def _features_per_split(rule: str, d: int) -> int:
    if rule == "log2":
        return max(1, int(math.log2(d))) if d > 1 else 1
    return max(1, int(math.sqrt(d)))


def fit_rf(x, y_enc, n_classes, params, seed, fingerprint, classes) -> RFModel:
    n, d = x.shape
    targets = one_hot(y_enc, n_classes)
    n_trees = params["estimators"]
    max_depth = params["max_depth"] if params["max_depth"] is not None else np.inf
    n_sample = _features_per_split(params["max_features"], d)
    importance = np.zeros(d)

    def leaf_value_for(boot_targets):
        def leaf_value(rows):
            counts = boot_targets[rows].sum(axis=0)
            return counts / counts.sum()
        return leaf_value

    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t,)))
        boot = rng.integers(0, n, size=n)
        xb = x[boot]
        tb = targets[boot]
        tree = grow_tree(
            feature_columns(xb),
            tb,
            presort(xb),
            max_depth=max_depth,
            leaf_value=leaf_value_for(tb),
            n_feature_sample=n_sample,
            rng=rng,
            importance_out=importance,
        )
        trees.append(tree)
    return RFModel(params, seed, classes, d, fingerprint, trees, importance)
