"""End-to-end pipeline: load/synth, split, balance, tune, select, fit, evaluate.

Produces a JSON report (validated against the shipped schema) plus sidecar
plot CSVs whose numbers are taken verbatim from the report.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import time
from dataclasses import dataclass, field
from importlib import resources as importlib_resources
from pathlib import Path

import numpy as np

from . import models
from .datamodel import (
    Dataset,
    SynthSpec,
    class_histogram,
    generate_synthetic,
    load_dataset,
    stratified_split,
)
from .errors import (
    ConfigError,
    InvalidSpec,
    PipelineStageError,
    StressKitError,
    SubjectTooSmall,
)
from .evaluation import (
    EvaluationReport,
    GridSearchResult,
    HyperParamGrid,
    evaluate_predictions,
    grid_search,
)
from .feature_selection import SELECTION_METHODS, select_features
from .models import ModelConfig
from .resampling import balance_all

log = logging.getLogger("stresskit.pipeline")

REPORT_FORMAT_VERSION = 1
STAGES_AFTER_SPLIT = ("tune", "select", "fit", "evaluate")
MIN_SUBJECT_ROWS = 10
METRIC_NAMES = ("accuracy", "precision", "recall", "f1")
COMPARE_CONDITIONS = ("imbalanced", "balanced", "tuned_balanced")


@dataclass(frozen=True)
class SmoteSettings:
    enabled: bool = True
    k: int = 5
    before_split: bool = False


@dataclass(frozen=True)
class SelectionSettings:
    method: str = "coc_rfe"
    n_target: int = 10
    threshold: float = 0.0
    step: int = 1
    filter_mode: str = "relevance"

    def __post_init__(self):
        if self.method not in SELECTION_METHODS:
            raise ConfigError(f"unknown selection method {self.method!r}")


@dataclass(frozen=True)
class ModelSettings:
    kind: str = "gb"
    params: dict = field(default_factory=dict)
    grid: dict | None = None


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a pipeline run needs; JSON-loadable via from_dict."""

    input_path: str | None = None
    synth: SynthSpec | None = None
    label_column: str = "label"
    seed: int = 0
    train_fraction: float = 0.7
    folds: int = 10
    smote: SmoteSettings = field(default_factory=SmoteSettings)
    selection: SelectionSettings | None = field(default_factory=SelectionSettings)
    model: ModelSettings = field(default_factory=ModelSettings)
    averaging: str = "macro"
    loso: bool = False

    def __post_init__(self):
        if (self.input_path is None) == (self.synth is None):
            raise ConfigError("config needs exactly one of input_path or synth")
        if self.averaging not in ("macro", "weighted"):
            raise ConfigError("averaging must be 'macro' or 'weighted'")

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        raw = dict(raw)
        try:
            synth = raw.pop("synth", None)
            if synth is not None:
                synth = SynthSpec(
                    n_classes=synth["n_classes"],
                    class_counts=tuple(synth["class_counts"]),
                    n_informative=synth["n_informative"],
                    n_redundant=synth.get("n_redundant", 0),
                    n_noise=synth.get("n_noise", 0),
                    class_separation=synth.get("class_separation", 1.0),
                    seed=synth.get("seed", raw.get("seed", 0)),
                )
            smote = SmoteSettings(**raw.pop("smote", {}))
            selection = raw.pop("selection", None)
            if selection is not None:
                selection = SelectionSettings(**selection)
            model = ModelSettings(**raw.pop("model", {}))
            return cls(synth=synth, smote=smote, selection=selection, model=model, **raw)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad pipeline config: {exc}") from exc

    def to_dict(self) -> dict:
        d = {
            "input_path": self.input_path,
            "synth": dataclasses.asdict(self.synth) if self.synth else None,
            "label_column": self.label_column,
            "seed": self.seed,
            "train_fraction": self.train_fraction,
            "folds": self.folds,
            "smote": dataclasses.asdict(self.smote),
            "selection": dataclasses.asdict(self.selection) if self.selection else None,
            "model": dataclasses.asdict(self.model),
            "averaging": self.averaging,
            "loso": self.loso,
        }
        if d["synth"] is not None:
            d["synth"]["class_counts"] = list(d["synth"]["class_counts"])
        return d


def _load_stage(cfg: PipelineConfig) -> Dataset:
    if cfg.input_path is not None:
        return load_dataset(cfg.input_path, cfg.label_column)
    return generate_synthetic(cfg.synth)


def _selection_estimator(cfg: PipelineConfig, tuned_params: dict) -> ModelConfig:
    if cfg.model.kind in ("gb", "rf"):
        return ModelConfig(cfg.model.kind, tuned_params, seed=cfg.seed)
    return ModelConfig("gb", dict(models.DESK_ESTIMATOR_PARAMS), seed=cfg.seed)


class _StageRunner:
    def __init__(self):
        self.stages: list[str] = []
        self.timings: dict[str, float] = {}

    def run(self, name: str, fn):
        if name in self.stages:
            raise PipelineStageError(name, "stage already executed")
        start = time.perf_counter()
        try:
            result = fn()
        except StressKitError as exc:
            raise PipelineStageError(name, exc) from exc
        self.stages.append(name)
        self.timings[name] = time.perf_counter() - start
        return result


def run_pipeline(cfg: PipelineConfig, out_dir=None) -> dict:
    """Execute every stage and return the (schema-valid) report dict.

    When out_dir is given, writes report.json and metrics.csv there; partial
    outputs are removed if a later stage fails.
    """
    runner = _StageRunner()
    ds = runner.run("load", lambda: _load_stage(cfg))

    if cfg.smote.enabled and cfg.smote.before_split:
        hist_before = class_histogram(ds)
        ds = runner.run("smote", lambda: balance_all(ds, cfg.smote.k, cfg.seed))
        hist_after = class_histogram(ds)
        pair = runner.run("split", lambda: stratified_split(ds, cfg.train_fraction, cfg.seed))
        train, test = pair.train, pair.test
    else:
        pair = runner.run("split", lambda: stratified_split(ds, cfg.train_fraction, cfg.seed))
        train, test = pair.train, pair.test
        hist_before = class_histogram(train)
        if cfg.smote.enabled:
            train = runner.run("smote", lambda: balance_all(train, cfg.smote.k, cfg.seed))
        else:
            runner.run("smote", lambda: None)
        hist_after = class_histogram(train)

    if cfg.model.grid is not None:
        def tune():
            grid = HyperParamGrid({k: tuple(v) for k, v in cfg.model.grid.items()})
            return grid_search(cfg.model.kind, grid, train, cfg.folds, cfg.seed)
        search: GridSearchResult | None = runner.run("tune", tune)
        best_params = dict(cfg.model.params)
        best_params.update(search.best_params)
    else:
        search = runner.run("tune", lambda: None)
        best_params = dict(cfg.model.params)

    if cfg.selection is not None:
        sel_cfg = cfg.selection

        def select():
            estimator = _selection_estimator(cfg, best_params)
            return select_features(
                train, sel_cfg.method, sel_cfg.n_target, estimator=estimator,
                threshold=sel_cfg.threshold, step=sel_cfg.step, seed=cfg.seed,
                filter_mode=sel_cfg.filter_mode,
            )
        selection = runner.run("select", select)
        train = train.select_features(selection.selected)
        test = test.select_features(selection.selected)
    else:
        selection = runner.run("select", lambda: None)

    model = runner.run(
        "fit", lambda: models.fit(ModelConfig(cfg.model.kind, best_params, cfg.seed), train)
    )

    def evaluate():
        report = evaluate_predictions(
            test.y, model.predict(test.x), test.n_classes, cfg.averaging
        )
        per_subject = None
        if ds.subject_ids is not None:
            per_subject = _per_subject(ds, cfg, best_params)
        return report, per_subject

    final_report, per_subject = runner.run("evaluate", evaluate)

    report = {
        "format_version": REPORT_FORMAT_VERSION,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "stages": list(runner.stages),
        "dataset": {
            "n_rows": ds.n_rows,
            "n_features": ds.n_features,
            "n_classes": ds.n_classes,
            "histogram_before": {str(k): v for k, v in hist_before.items()},
            "histogram_after": {str(k): v for k, v in hist_after.items()},
        },
        "selection": selection.to_dict() if selection is not None else None,
        "grid_search": search.to_dict() if search is not None else None,
        # grid-search numbers are CV means; the final evaluation is the holdout
        "final_evaluation": {**final_report.to_dict(), "provenance": "holdout"},
        "per_subject": per_subject,
        "timings": dict(runner.timings),
    }
    validate_report(report)
    if out_dir is not None:
        _write_outputs(report, out_dir)
    return report


# --- model comparison (imbalanced / balanced / tuned-balanced) ----------------

def compare_models(cfg: PipelineConfig, kinds, *, params_by_kind: dict | None = None,
                   grids_by_kind: dict | None = None) -> dict:
    """Evaluate each model kind under three training conditions.

    Conditions: the raw training split, the SMOTE-balanced split, and the
    balanced split with grid-searched hyperparameters. All three score on the
    untouched test split. Without a grid for a kind, the tuned condition
    degenerates to the fixed parameters (a single-candidate search).
    """
    params_by_kind = params_by_kind or {}
    grids_by_kind = grids_by_kind or {}
    ds = _load_stage(cfg)
    pair = stratified_split(ds, cfg.train_fraction, cfg.seed)
    train, test = pair.train, pair.test
    balanced = balance_all(train, cfg.smote.k, cfg.seed)

    out: dict = {"conditions": list(COMPARE_CONDITIONS), "models": {}, "table": []}
    for kind in kinds:
        fixed = params_by_kind.get(kind, {})
        reports = {}
        imb = models.fit(ModelConfig(kind, fixed, cfg.seed), train)
        reports["imbalanced"] = evaluate_predictions(
            test.y, imb.predict(test.x), test.n_classes, cfg.averaging
        )
        bal = models.fit(ModelConfig(kind, fixed, cfg.seed), balanced)
        reports["balanced"] = evaluate_predictions(
            test.y, bal.predict(test.x), test.n_classes, cfg.averaging
        )
        if kind in grids_by_kind:
            grid = HyperParamGrid({k: tuple(v) for k, v in grids_by_kind[kind].items()})
        else:
            merged = ModelConfig(kind, fixed, cfg.seed).effective_params()
            grid = HyperParamGrid({k: (v,) for k, v in merged.items()})
        search = grid_search(kind, grid, balanced, cfg.folds, cfg.seed)
        tuned = models.fit(ModelConfig(kind, search.best_params, cfg.seed), balanced)
        reports["tuned_balanced"] = evaluate_predictions(
            test.y, tuned.predict(test.x), test.n_classes, cfg.averaging
        )

        out["models"][kind] = {
            cond: rep.to_dict() for cond, rep in reports.items()
        }
        out["models"][kind]["best_params"] = search.best_params
        for cond in COMPARE_CONDITIONS:
            for metric in METRIC_NAMES:
                out["table"].append(
                    {
                        "model": kind,
                        "condition": cond,
                        "metric": metric,
                        "value": out["models"][kind][cond][metric],
                    }
                )
    return out


# --- per-subject evaluation ----------------------------------------------------

def _per_subject(ds: Dataset, cfg: PipelineConfig, params: dict) -> list:
    rows = []
    order = sorted(set(ds.subject_ids))
    all_idx = np.arange(ds.n_rows)
    subject_arr = np.asarray(ds.subject_ids)
    for subject in order:
        idx = all_idx[subject_arr == subject]
        if idx.size < MIN_SUBJECT_ROWS:
            raise SubjectTooSmall(subject, int(idx.size))
        if cfg.loso:
            train = ds.select_rows(all_idx[subject_arr != subject])
            test = ds.select_rows(idx)
        else:
            pair = stratified_split(ds.select_rows(idx), cfg.train_fraction, cfg.seed)
            train, test = pair.train, pair.test
        model = models.fit(ModelConfig(cfg.model.kind, params, cfg.seed), train)
        report = evaluate_predictions(
            test.y, model.predict(test.x), test.n_classes, cfg.averaging
        )
        rows.append({"subject_id": subject, "evaluation": report.to_dict()})
    return rows


def per_subject_report(cfg: PipelineConfig) -> dict:
    """One within-subject (or leave-one-subject-out) evaluation per subject."""
    ds = _load_stage(cfg)
    if ds.subject_ids is None:
        raise InvalidSpec("per-subject evaluation needs a subject_id column")
    rows = _per_subject(ds, cfg, dict(cfg.model.params))
    accuracies = [r["evaluation"]["accuracy"] for r in rows]
    return {
        "mode": "loso" if cfg.loso else "within_subject",
        "subjects": rows,
        "mean_accuracy": float(np.mean(accuracies)),
    }


# --- report validation and output files ---------------------------------------

def _check_schema(schema: dict, obj, path: str):
    expected = schema.get("type")
    if expected is not None:
        allowed = expected if isinstance(expected, list) else [expected]
        matched = False
        for t in allowed:
            if (
                (t == "object" and isinstance(obj, dict))
                or (t == "array" and isinstance(obj, list))
                or (t == "string" and isinstance(obj, str))
                or (t == "integer" and isinstance(obj, int) and not isinstance(obj, bool))
                or (t == "number" and isinstance(obj, (int, float)) and not isinstance(obj, bool))
                or (t == "boolean" and isinstance(obj, bool))
                or (t == "null" and obj is None)
            ):
                matched = True
                break
        if not matched:
            raise InvalidSpec(f"report schema violation at {path}: expected {expected}")
    if "enum" in schema and obj is not None and obj not in schema["enum"]:
        raise InvalidSpec(f"report schema violation at {path}: {obj!r} not in {schema['enum']}")
    if isinstance(obj, dict):
        for key in schema.get("required", []):
            if key not in obj:
                raise InvalidSpec(f"report schema violation at {path}: missing {key!r}")
        for key, sub in schema.get("properties", {}).items():
            if key in obj:
                _check_schema(sub, obj[key], f"{path}.{key}")
    if isinstance(obj, list) and "items" in schema:
        for i, item in enumerate(obj):
            _check_schema(schema["items"], item, f"{path}[{i}]")


def validate_report(report: dict) -> None:
    """Raise unless the report matches the shipped JSON schema."""
    schema = json.loads(
        importlib_resources.files("stresskit.resources")
        .joinpath("report_schema.json")
        .read_text("utf-8")
    )
    _check_schema(schema, report, "$")


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def strip_timings(report: dict) -> dict:
    """Copy of the report without the wall-clock fields (determinism compares)."""
    out = dict(report)
    out.pop("timings", None)
    return out


def _write_outputs(report: dict, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    created = []
    try:
        report_path = out / "report.json"
        created.append(report_path)
        report_path.write_text(report_to_json(report), encoding="utf-8")
        metrics_path = out / "metrics.csv"
        created.append(metrics_path)
        with open(metrics_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["metric", "value"])
            for metric in METRIC_NAMES:
                writer.writerow([metric, repr(float(report["final_evaluation"][metric]))])
    except Exception:
        for path in created:
            path.unlink(missing_ok=True)
        raise


def write_compare_csv(result: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "condition", "metric", "value"])
        for row in result["table"]:
            writer.writerow(
                [row["model"], row["condition"], row["metric"], repr(float(row["value"]))]
            )


def write_sweep_csv(rows_by_method: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "count", "accuracy"])
        for method, rows in rows_by_method.items():
            for row in rows:
                writer.writerow([method, row.count, repr(float(row.accuracy))])
