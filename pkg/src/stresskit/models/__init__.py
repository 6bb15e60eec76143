"""From-scratch classifiers behind one uniform fit/predict contract."""

from __future__ import annotations

import numpy as np

from ..datamodel import Dataset
from ..errors import SingleClassTraining, TooFewRows, UnsupportedModel
from .base import TrainedModel
from .boosting import GBModel, fit_gb
from .common import schema_fingerprint
from .config import (
    DEFAULT_PARAMS,
    DESK_ESTIMATOR_PARAMS,
    MODEL_KINDS,
    ModelConfig,
    validate_param,
)
from .forest import RFModel, fit_rf
from .io import load_model, save_model
from .linear import LDAModel, LRModel, fit_lda, fit_lr
from .neighbors import KNNModel, fit_knn
from .trees import Tree

_FITTERS = {"gb": fit_gb, "rf": fit_rf, "knn": fit_knn, "lr": fit_lr, "lda": fit_lda}


def fit(cfg: ModelConfig, train: Dataset) -> TrainedModel:
    """Fit the configured model on the training dataset; deterministic per seed."""
    if cfg.kind == "svc":
        raise UnsupportedModel(
            "kernel SVC is accepted in configuration for report parity only; "
            "training it is out of scope for this package"
        )
    if train.n_rows < 2:
        raise TooFewRows(f"need >= 2 training rows, got {train.n_rows}")
    classes, y_enc = np.unique(train.y, return_inverse=True)
    if classes.size < 2:
        raise SingleClassTraining(f"training data contains only class {int(classes[0])}")
    fingerprint = schema_fingerprint(train.schema.feature_names, train.schema.label_name)
    return _FITTERS[cfg.kind](
        train.x, y_enc, classes.size, cfg.effective_params(), cfg.seed, fingerprint, classes
    )


def predict(model: TrainedModel, x) -> np.ndarray:
    return model.predict(x)


def predict_proba(model: TrainedModel, x) -> np.ndarray:
    return model.predict_proba(x)


__all__ = [
    "DEFAULT_PARAMS",
    "DESK_ESTIMATOR_PARAMS",
    "MODEL_KINDS",
    "GBModel",
    "KNNModel",
    "LDAModel",
    "LRModel",
    "ModelConfig",
    "RFModel",
    "TrainedModel",
    "Tree",
    "fit",
    "load_model",
    "predict",
    "predict_proba",
    "save_model",
    "validate_param",
]
