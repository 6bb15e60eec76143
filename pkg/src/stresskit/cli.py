"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 stage failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import models
from .datamodel import (
    Dataset,
    SynthSpec,
    class_histogram,
    generate_synthetic,
    load_dataset,
    save_dataset,
)
from .errors import ConfigError, DataError, StageError, StressKitError
from .evaluation import HyperParamGrid, default_grid, evaluate_predictions, grid_search
from .feature_selection import EvalProtocol, select_features, sweep
from .models import ModelConfig
from .pipeline import (
    PipelineConfig,
    compare_models,
    per_subject_report,
    report_to_json,
    run_pipeline,
    write_compare_csv,
    write_sweep_csv,
)
from .resampling import SmoteConfig, balance_all, smote_class
from .signal_features import SignalSeries, WindowConfig, extract_features

log = logging.getLogger("stresskit")


def _parse_params(raw: str | None) -> dict:
    if not raw:
        return {}
    try:
        params = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--params is not valid JSON: {exc}") from exc
    if not isinstance(params, dict):
        raise ConfigError("--params must be a JSON object")
    return params


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _cmd_synth(args) -> None:
    spec = SynthSpec(
        n_classes=args.classes,
        class_counts=tuple(int(c) for c in args.counts.split(",")),
        n_informative=args.informative,
        n_redundant=args.redundant,
        n_noise=args.noise,
        class_separation=args.sep,
        seed=args.seed,
    )
    save_dataset(generate_synthetic(spec), args.out)
    log.info("wrote %s", args.out)


def _read_channel(spec: str, rates: dict) -> SignalSeries:
    if "=" not in spec:
        raise ConfigError(f"--channel must look like name=path, got {spec!r}")
    name, path = spec.split("=", 1)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    if len(header) == 2:
        t = np.array([float(r[0]) for r in rows])
        values = np.array([float(r[1]) for r in rows])
        if t.size < 2:
            raise DataError(f"{path}: need >= 2 samples to infer the rate")
        rate = (t.size - 1) / (t[-1] - t[0])
    elif len(header) == 1:
        values = np.array([float(r[0]) for r in rows])
        if name not in rates:
            raise ConfigError(f"single-column channel {name!r} needs --rate {name}=HZ")
        rate = rates[name]
    else:
        raise DataError(f"{path}: expected 1 (value) or 2 (t_seconds,value) columns")
    return SignalSeries(values, rate, name)


def _cmd_features(args) -> None:
    rates = {}
    for spec in args.rate or []:
        name, hz = spec.split("=", 1)
        rates[name] = float(hz)
    channels = [_read_channel(spec, rates) for spec in args.channel]
    result = extract_features(
        channels,
        WindowConfig(args.window, args.overlap),
        age=args.age,
        weight=args.weight,
        median_window_seconds=args.median_window,
    )
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(result.schema.feature_names)
        for row in result.x:
            writer.writerow([repr(float(v)) for v in row])
    log.info("wrote %s (%d windows, %d dropped)", args.out, result.x.shape[0],
             result.dropped_windows)


def _cmd_balance(args) -> None:
    ds = load_dataset(args.inp, args.label_column)
    if args.percent is not None or args.cls is not None:
        if args.percent is None or args.cls is None:
            raise ConfigError("--percent and --class must be given together")
        rows = smote_class(ds, args.cls, SmoteConfig(args.percent, args.k, args.seed))
        subs = None
        if ds.subject_ids is not None:
            subs = ds.subject_ids + tuple("synthetic" for _ in range(rows.shape[0]))
        out = Dataset(
            ds.schema,
            np.vstack([ds.x, rows]),
            np.concatenate([ds.y, np.full(rows.shape[0], args.cls, dtype=np.int64)]),
            subs,
            ds.n_classes,
        )
    else:
        out = balance_all(ds, args.k, args.seed)
    save_dataset(out, args.out)
    log.info("wrote %s with histogram %s", args.out, class_histogram(out))


def _cmd_select(args) -> None:
    ds = load_dataset(args.inp, args.label_column)
    estimator = None
    if args.estimator_params:
        estimator = ModelConfig("gb", _parse_params(args.estimator_params), seed=args.seed)
    result = select_features(
        ds, args.method.replace("-", "_"), args.n, estimator=estimator,
        threshold=args.threshold, step=args.step, seed=args.seed,
        filter_mode=args.filter,
    )
    _emit(result.to_dict(), args.out)


def _cmd_tune(args) -> None:
    ds = load_dataset(args.inp, args.label_column)
    if args.grid:
        axes = json.loads(Path(args.grid).read_text(encoding="utf-8"))
        grid = HyperParamGrid({k: tuple(v) for k, v in axes.items()})
    else:
        grid = default_grid(args.model)
    result = grid_search(args.model, grid, ds, args.folds, args.seed)
    _emit(result.to_dict(), args.out)


def _cmd_train(args) -> None:
    ds = load_dataset(args.inp, args.label_column)
    model = models.fit(ModelConfig(args.model, _parse_params(args.params), args.seed), ds)
    models.save_model(model, args.out)
    log.info("wrote %s", args.out)


def _cmd_evaluate(args) -> None:
    ds = load_dataset(args.inp, args.label_column)
    model = models.load_model(args.model_file)
    report = evaluate_predictions(ds.y, model.predict(ds.x), ds.n_classes, args.averaging)
    _emit(report.to_dict(), args.out)


def _pipeline_config(args) -> PipelineConfig:
    raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if args.seed is not None:
        raw["seed"] = args.seed
    return PipelineConfig.from_dict(raw)


def _cmd_pipeline(args) -> None:
    cfg = _pipeline_config(args)
    report = run_pipeline(cfg, out_dir=args.out)
    if args.out:
        log.info("wrote %s", Path(args.out) / "report.json")
    else:
        print(report_to_json(report))


def _cmd_compare(args) -> None:
    cfg = _pipeline_config(args)
    kinds = args.models.split(",")
    grids_by_kind = {}
    if args.grids:
        grids_by_kind = json.loads(Path(args.grids).read_text(encoding="utf-8"))
    result = compare_models(cfg, kinds, grids_by_kind=grids_by_kind)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.json").write_text(
            json.dumps(result, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        write_compare_csv(result, out / "compare_metrics.csv")
        log.info("wrote %s", out / "compare.json")
    else:
        print(json.dumps(result, indent=2, sort_keys=True))


def _cmd_sweep(args) -> None:
    ds = load_dataset(args.inp, args.label_column)
    counts = [int(c) for c in args.counts.split(",")]
    protocol = EvalProtocol(
        model=ModelConfig(args.model, _parse_params(args.params), args.seed),
        train_fraction=args.train_fraction,
        seed=args.seed,
        smote_k=args.smote_k,
    )
    rows_by_method = {}
    for method in args.methods.split(","):
        method = method.replace("-", "_")
        rows_by_method[method] = sweep(
            ds, method, counts, None, protocol,
            threshold=args.threshold, step=args.step, seed=args.seed,
        )
    payload = {
        m: [row.to_dict() for row in rows] for m, rows in rows_by_method.items()
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        write_sweep_csv(rows_by_method, out / "sweep_curve.csv")
        log.info("wrote %s", out / "sweep.json")
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))


def _cmd_per_subject(args) -> None:
    cfg = _pipeline_config(args)
    if args.loso:
        cfg = PipelineConfig.from_dict({**cfg.to_dict(), "loso": True})
    _emit(per_subject_report(cfg), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stresskit", description="Stress-classification pipeline toolkit."
    )
    parser.add_argument("--quiet", action="store_true", help="suppress progress logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--counts", default="200,200,200", help="comma-separated per-class counts")
    p.add_argument("--informative", type=int, default=10)
    p.add_argument("--redundant", type=int, default=0)
    p.add_argument("--noise", type=int, default=40)
    p.add_argument("--sep", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("features", help="extract window features from raw channel CSVs")
    p.add_argument("--channel", action="append", required=True, metavar="NAME=PATH")
    p.add_argument("--rate", action="append", metavar="NAME=HZ",
                   help="sampling rate for single-column channel files")
    p.add_argument("--window", type=float, default=30.0)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--age", type=float, required=True)
    p.add_argument("--weight", type=float, required=True)
    p.add_argument("--median-window", type=float, default=4.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("balance", help="SMOTE-balance a dataset CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--percent", type=float, help="oversample one class by this percent")
    p.add_argument("--class", dest="cls", type=int, help="class id for --percent")
    p.set_defaults(func=_cmd_balance)

    p = sub.add_parser("select", help="run a feature-selection method")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--method", default="coc-rfe")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--filter", choices=("relevance", "redundancy"), default="relevance")
    p.add_argument("--estimator-params", help="JSON params for the ranking estimator")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("tune", help="grid-search hyperparameters by k-fold CV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--model", required=True)
    p.add_argument("--grid", help="JSON file of axes; defaults to the built-in grid")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("train", help="fit a model and save it as JSON")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--model", required=True)
    p.add_argument("--params", help="JSON hyperparameters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model on a dataset CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--model-file", required=True)
    p.add_argument("--averaging", choices=("macro", "weighted"), default="macro")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("compare", help="models x {imbalanced,balanced,tuned} table")
    p.add_argument("--config", required=True)
    p.add_argument("--models", required=True, help="comma-separated kinds")
    p.add_argument("--grids", help="JSON file: kind -> grid axes")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("sweep", help="selection-size sweep per method")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--methods", default="coc-rfe")
    p.add_argument("--counts", default="10,20,30,40,50")
    p.add_argument("--model", default="gb")
    p.add_argument("--params", help="JSON params of the scoring model")
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--smote-k", type=int)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("per-subject", help="within-subject (or LOSO) evaluations")
    p.add_argument("--config", required=True)
    p.add_argument("--loso", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_per_subject)

    p = sub.add_parser("pipeline", help="run the full pipeline from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="directory for report.json and metrics.csv")
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except StageError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return 4
    except StressKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
