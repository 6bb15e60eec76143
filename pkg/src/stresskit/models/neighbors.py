"""k-nearest-neighbour classifier with uniform or inverse-distance weights.

Neighbour candidates sort by (distance, class id), which makes predictions
invariant to any permutation of the training rows; prediction ties resolve to
the smallest class id.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParamValue
from .base import TrainedModel

_CHUNK = 256


class KNNModel(TrainedModel):
    kind = "knn"

    def __init__(self, params, seed, classes, n_features, schema_fingerprint,
                 train_x, train_y_enc):
        super().__init__(params, seed, classes, n_features, schema_fingerprint)
        self.train_x = np.asarray(train_x, dtype=np.float64)
        self.train_y_enc = np.asarray(train_y_enc, dtype=np.int64)

    def _distances(self, chunk: np.ndarray) -> np.ndarray:
        metric = self.params["metric"]
        if metric == "euclidean":
            d2 = (
                (chunk**2).sum(axis=1)[:, None]
                + (self.train_x**2).sum(axis=1)[None, :]
                - 2.0 * chunk @ self.train_x.T
            )
            return np.sqrt(np.maximum(d2, 0.0))
        diff = np.abs(chunk[:, None, :] - self.train_x[None, :, :])
        if metric == "manhattan":
            return diff.sum(axis=2)
        p = float(self.params["p"])
        return (diff**p).sum(axis=2) ** (1.0 / p)

    def _proba(self, x):
        k = self.params["n_neighbors"]
        out = np.empty((x.shape[0], self.n_classes))
        for start in range(0, x.shape[0], _CHUNK):
            chunk = x[start:start + _CHUNK]
            dists = self._distances(chunk)
            for i in range(chunk.shape[0]):
                order = np.lexsort((self.train_y_enc, dists[i]))[:k]
                labels = self.train_y_enc[order]
                if self.params["weights"] == "uniform":
                    weights = np.ones(k)
                else:
                    dk = dists[i][order]
                    exact = dk == 0.0
                    weights = exact.astype(float) if exact.any() else 1.0 / dk
                row = np.bincount(labels, weights=weights, minlength=self.n_classes)
                out[start + i] = row / row.sum()
        return out

    def to_dict(self):
        d = self._meta()
        d["train_x"] = self.train_x.tolist()
        d["train_y_enc"] = self.train_y_enc.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["params"], d["seed"], d["classes"], d["n_features"],
                   d["schema_fingerprint"], d["train_x"], d["train_y_enc"])


def fit_knn(x, y_enc, n_classes, params, seed, fingerprint, classes) -> KNNModel:
    if params["n_neighbors"] > x.shape[0]:
        raise InvalidParamValue(
            f"n_neighbors={params['n_neighbors']} exceeds the {x.shape[0]} training rows"
        )
    return KNNModel(params, seed, classes, x.shape[1], fingerprint, x, y_enc)
