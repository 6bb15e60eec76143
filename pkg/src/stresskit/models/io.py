"""Versioned JSON serialization of fitted models.

A reloaded model reproduces its predictions bit-identically: floats round-trip
through JSON's repr formatting.
"""

from __future__ import annotations

import json

from ..errors import ConfigError
from .base import TrainedModel
from .boosting import GBModel
from .forest import RFModel
from .linear import LDAModel, LRModel
from .neighbors import KNNModel

FORMAT_VERSION = 1

_REGISTRY = {m.kind: m for m in (GBModel, RFModel, KNNModel, LRModel, LDAModel)}


def save_model(model: TrainedModel, path) -> None:
    payload = {"format_version": FORMAT_VERSION, "model": model.to_dict()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported model file version {version!r}")
    body = payload["model"]
    kind = body.get("kind")
    if kind not in _REGISTRY:
        raise ConfigError(f"unknown model kind {kind!r} in file")
    return _REGISTRY[kind].from_dict(body)
