"""Common fitted-model interface: probability prediction plus width checks."""

from __future__ import annotations

import abc

import numpy as np

from ..errors import WidthMismatch


class TrainedModel(abc.ABC):
    """A fitted classifier over the classes seen in training."""

    kind: str = ""

    def __init__(self, params, seed, classes, n_features, schema_fingerprint):
        self.params = dict(params)
        self.seed = int(seed)
        self.classes = np.asarray(classes, dtype=np.int64)
        self.n_features = int(n_features)
        self.schema_fingerprint = str(schema_fingerprint)

    @property
    def n_classes(self) -> int:
        return self.classes.size

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            got = x.shape[1] if x.ndim == 2 else f"ndim={x.ndim}"
            raise WidthMismatch(f"model expects {self.n_features} features, got {got}")
        return x

    def predict_proba(self, x) -> np.ndarray:
        """Row-stochastic matrix over self.classes (columns in that order)."""
        return self._proba(self._check(x))

    def predict(self, x) -> np.ndarray:
        """argmax of predict_proba, mapped back to the original class ids."""
        proba = self.predict_proba(x)
        return self.classes[np.argmax(proba, axis=1)]

    @abc.abstractmethod
    def _proba(self, x: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def to_dict(self) -> dict: ...

    def _meta(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "seed": self.seed,
            "classes": self.classes.tolist(),
            "n_features": self.n_features,
            "schema_fingerprint": self.schema_fingerprint,
        }
