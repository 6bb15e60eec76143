"""Shared numerics for the classifiers."""

from __future__ import annotations

import hashlib

import numpy as np


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def one_hot(y: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((y.size, n_classes))
    out[np.arange(y.size), y] = 1.0
    return out


def multinomial_deviance(scores: np.ndarray, y: np.ndarray) -> float:
    """Mean negative log-likelihood of integer labels under softmax(scores)."""
    return float(-log_softmax(scores)[np.arange(y.size), y].mean())


def deviance_gradient(scores: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of sum negative log-likelihood w.r.t. the raw scores: p - onehot."""
    return softmax(scores) - one_hot(y, scores.shape[1])


def schema_fingerprint(feature_names, label_name: str) -> str:
    payload = "\x1f".join(feature_names) + "\x1e" + label_name
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
