"""Multinomial logistic regression and linear discriminant analysis.

The logistic model minimizes mean negative log-likelihood plus an L2 penalty
of 0.5/c_value on the weights (bias unpenalized) by full-batch gradient
descent with Armijo backtracking, stopping at gradient norm 1e-6 or 5000
iterations. LDA fits class means and a pooled covariance, inverted with a
pseudo-inverse; both expose probabilities through a softmax.
"""

from __future__ import annotations

import numpy as np

from .base import TrainedModel
from .common import log_softmax, one_hot, softmax
from .config import log_solver_alias

MAX_ITERATIONS = 5000
GRAD_TOL = 1e-6
ARMIJO_C1 = 1e-4


class LRModel(TrainedModel):
    kind = "lr"

    def __init__(self, params, seed, classes, n_features, schema_fingerprint,
                 weights, bias, n_iterations):
        super().__init__(params, seed, classes, n_features, schema_fingerprint)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.n_iterations = int(n_iterations)

    def _proba(self, x):
        return softmax(x @ self.weights + self.bias)

    def to_dict(self):
        d = self._meta()
        d["weights"] = self.weights.tolist()
        d["bias"] = self.bias.tolist()
        d["n_iterations"] = self.n_iterations
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["params"], d["seed"], d["classes"], d["n_features"],
                   d["schema_fingerprint"], d["weights"], d["bias"], d["n_iterations"])


def lr_objective(x, y_enc, weights, bias, penalty):
    """(loss, grad_weights, grad_bias) of the penalized mean deviance."""
    n = x.shape[0]
    z = x @ weights + bias
    loss = -log_softmax(z)[np.arange(n), y_enc].mean() + 0.5 * penalty * (weights**2).sum()
    g = (softmax(z) - one_hot(y_enc, weights.shape[1])) / n
    return loss, x.T @ g + penalty * weights, g.sum(axis=0)


def fit_lr(x, y_enc, n_classes, params, seed, fingerprint, classes) -> LRModel:
    log_solver_alias("lr", params["solver"])
    penalty = 1.0 / params["c_value"]
    weights = np.zeros((x.shape[1], n_classes))
    bias = np.zeros(n_classes)

    loss, gw, gb = lr_objective(x, y_enc, weights, bias, penalty)
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        gnorm2 = (gw**2).sum() + (gb**2).sum()
        if np.sqrt(gnorm2) < GRAD_TOL:
            iterations -= 1
            break
        step = 1.0
        while True:
            w_new = weights - step * gw
            b_new = bias - step * gb
            loss_new, gw_new, gb_new = lr_objective(x, y_enc, w_new, b_new, penalty)
            if loss_new <= loss - ARMIJO_C1 * step * gnorm2 or step < 1e-16:
                break
            step *= 0.5
        if step < 1e-16:
            break
        weights, bias, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
    return LRModel(params, seed, classes, x.shape[1], fingerprint, weights, bias, iterations)


class LDAModel(TrainedModel):
    kind = "lda"

    def __init__(self, params, seed, classes, n_features, schema_fingerprint,
                 coef, intercept):
        super().__init__(params, seed, classes, n_features, schema_fingerprint)
        self.coef = np.asarray(coef, dtype=np.float64)
        self.intercept = np.asarray(intercept, dtype=np.float64)

    def _proba(self, x):
        return softmax(x @ self.coef + self.intercept)

    def to_dict(self):
        d = self._meta()
        d["coef"] = self.coef.tolist()
        d["intercept"] = self.intercept.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["params"], d["seed"], d["classes"], d["n_features"],
                   d["schema_fingerprint"], d["coef"], d["intercept"])


def fit_lda(x, y_enc, n_classes, params, seed, fingerprint, classes) -> LDAModel:
    log_solver_alias("lda", params["solver"])
    n, d = x.shape
    means = np.vstack([x[y_enc == c].mean(axis=0) for c in range(n_classes)])
    pooled = np.zeros((d, d))
    for c in range(n_classes):
        centered = x[y_enc == c] - means[c]
        pooled += centered.T @ centered
    pooled /= max(n - n_classes, 1)
    precision = np.linalg.pinv(pooled)
    priors = np.bincount(y_enc, minlength=n_classes) / n
    coef = precision @ means.T
    intercept = -0.5 * np.einsum("cd,dc->c", means, coef) + np.log(priors)
    return LDAModel(params, seed, classes, d, fingerprint, coef, intercept)
