"""Model kinds, hyperparameter domains, and solver-alias handling.

The solver names accepted for lr/lda are toolkit aliases; every alias maps to
this package's single deterministic optimizer per model, and the mapping is
logged at fit time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Mapping

from ..errors import InvalidParamValue, UnknownParam, UnsupportedModel

log = logging.getLogger("stresskit.models")

MODEL_KINDS = ("gb", "rf", "knn", "lr", "lda", "svc")

LR_SOLVER_ALIASES = ("newton-cg", "lbfgs", "liblinear")
LDA_SOLVER_ALIASES = ("svd", "lsqr", "eigen")


def _positive_int(v):
    return isinstance(v, int) and not isinstance(v, bool) and v >= 1


def _non_negative_int(v):
    return isinstance(v, int) and not isinstance(v, bool) and v >= 0


def _positive_real(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0


def _non_negative_real(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0


def _choice(*options):
    return lambda v: v in options


def _subsample(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and 0 < v <= 1


PARAM_DOMAINS: dict[str, dict[str, Any]] = {
    "gb": {
        "n_estimators": _non_negative_int,
        "learning_rate": _non_negative_real,
        "subsample": _subsample,
        "max_depth": _positive_int,
    },
    "rf": {
        "estimators": _positive_int,
        "max_features": _choice("log2", "sqrt"),
        "max_depth": lambda v: v is None or _positive_int(v),
    },
    "knn": {
        "n_neighbors": _positive_int,
        "weights": _choice("uniform", "distance"),
        "metric": _choice("euclidean", "manhattan", "minkowski"),
        "p": _positive_real,
    },
    "lr": {
        "solver": _choice(*LR_SOLVER_ALIASES),
        "penalty": _choice("l2"),
        "c_value": _positive_real,
    },
    "lda": {
        "solver": _choice(*LDA_SOLVER_ALIASES),
    },
    # accepted in configuration for report parity, rejected at fit time
    "svc": {
        "kernel": _choice("poly", "rbf", "sigmoid"),
        "C": _positive_real,
        "gamma": _choice("scale"),
    },
}

DEFAULT_PARAMS: dict[str, dict[str, Any]] = {
    "gb": {"n_estimators": 100, "learning_rate": 0.1, "subsample": 1.0, "max_depth": 3},
    "rf": {"estimators": 100, "max_features": "sqrt", "max_depth": None},
    "knn": {"n_neighbors": 5, "weights": "uniform", "metric": "euclidean", "p": 3.0},
    "lr": {"solver": "lbfgs", "penalty": "l2", "c_value": 1.0},
    "lda": {"solver": "svd"},
    "svc": {"kernel": "rbf", "C": 1.0, "gamma": "scale"},
}

# small estimator used for feature ranking, far below the tuned sizes
DESK_ESTIMATOR_PARAMS = {"n_estimators": 100, "learning_rate": 0.1, "subsample": 1.0, "max_depth": 3}


def validate_param(kind: str, name: str, value) -> None:
    if kind not in PARAM_DOMAINS:
        raise UnsupportedModel(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    domain = PARAM_DOMAINS[kind]
    if name not in domain:
        raise UnknownParam(f"{kind}: unknown hyperparameter {name!r}; allowed: {sorted(domain)}")
    if not domain[name](value):
        raise InvalidParamValue(f"{kind}: value {value!r} outside the domain of {name!r}")


@dataclass(frozen=True)
class ModelConfig:
    """A model kind with validated hyperparameters and a seed.

    Unspecified parameters take the package defaults.
    """

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise UnsupportedModel(
                f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}"
            )
        for name, value in self.params.items():
            validate_param(self.kind, name, value)
        object.__setattr__(self, "params", dict(self.params))

    def effective_params(self) -> dict[str, Any]:
        merged = dict(DEFAULT_PARAMS[self.kind])
        merged.update(self.params)
        return merged


def log_solver_alias(kind: str, alias: str) -> None:
    log.info("%s: solver alias %r maps to the built-in deterministic optimizer", kind, alias)
