"""Command-line surface: train, evaluate, predict, bench.

Exit codes: 0 success, 2 invalid configuration, 3 data problem, 4 numerical
failure. All randomness flows from the seeds in the config file, so a rerun
with the same config writes byte-identical model files and metric traces.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time

import numpy as np

from . import __version__
from .baselines import lssvm_dual_train, mlp_baseline_train
from .config import RunConfig, load_config
from .data_io import Dataset, load_csv, load_libsvm, load_paired, standardize_split
from .errors import ConfigError, DataError, InvalidInputError, NumericalFailureError
from .inference import (
    evaluate_accuracy,
    fit_model,
    per_class_accuracy,
    predict_batch,
    resolve_sigma_tilde,
)
from .kernels import KernelSpec
from .model_io import deserialize_model, serialize_model

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _peak_memory_bytes() -> int | None:
    """Best-effort peak resident set size; None where unavailable."""
    try:
        import resource

        rss = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        # Linux reports kilobytes, macOS bytes
        return int(rss) * (1 if sys.platform == "darwin" else 1024)
    except Exception:
        return None


def _load_dataset(cfg: RunConfig) -> Dataset:
    if cfg.dataset_format == "csv":
        return load_csv(cfg.dataset_paths[0], has_header=cfg.has_header)
    if cfg.dataset_format == "libsvm":
        return load_libsvm(cfg.dataset_paths[0], d=cfg.dimension)
    return load_paired(cfg.dataset_paths[0], cfg.dataset_paths[1])


def _split(cfg: RunConfig, full: Dataset) -> tuple[Dataset, Dataset]:
    if cfg.test_fraction is None and cfg.n_train is None:
        raise ConfigError("dataset.split: required for training", key="dataset.split")
    return standardize_split(full, test_fraction=cfg.test_fraction,
                             seed=cfg.data_seed, n_train=cfg.n_train,
                             n_test=cfg.n_test)


def _train_from_config(cfg: RunConfig):
    """Shared by train and bench: load, split, fit; returns run artifacts."""
    full = _load_dataset(cfg)
    train, test = _split(cfg, full)
    levels = cfg.build_levels(train.X)
    model, traces = fit_model(
        train.X, train.labels, levels, cfg.head_kind, cfg.train,
        lam=cfg.lam, eta=cfg.head_eta, sigma_tilde=cfg.sigma_tilde,
        label_names=list(train.label_names),
        scaler_mean=train.scaler_mean, scaler_std=train.scaler_std,
    )
    raw_train_X = full.X[train.source_indices]
    raw_test_X = full.X[test.source_indices]
    return full, train, test, model, traces, raw_train_X, raw_test_X


def _metrics_report(cfg: RunConfig, model, traces, raw_train_X, train_labels,
                    raw_test_X, test_labels, wall_time: float) -> dict:
    trace_field = [t.objective for t in traces]
    if len(trace_field) == 1:
        trace_field = trace_field[0]
    return {
        "accuracy": evaluate_accuracy(model, raw_test_X, test_labels),
        "train_accuracy": evaluate_accuracy(model, raw_train_X, train_labels),
        "per_class_accuracy": per_class_accuracy(model, raw_test_X, test_labels),
        "objective_trace": trace_field,
        "wall_time_seconds": wall_time,
        "peak_memory_bytes": _peak_memory_bytes(),
        "config": cfg.raw,
        "seed": cfg.train.seed,
        "version": __version__,
    }


def _write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    t0 = time.perf_counter()
    full, train, test, model, traces, raw_train_X, raw_test_X = _train_from_config(cfg)
    wall = time.perf_counter() - t0
    serialize_model(model, cfg.model_path)
    report = _metrics_report(cfg, model, traces, raw_train_X, train.labels,
                             raw_test_X, test.labels, wall)
    _write_json(cfg.metrics_path, report)
    print(json.dumps({"model": cfg.model_path, "metrics": cfg.metrics_path,
                      "accuracy": report["accuracy"]}))
    return EXIT_OK


def _load_eval_dataset(args) -> Dataset:
    if args.format == "csv":
        return load_csv(args.data, has_header=args.has_header)
    if args.format == "libsvm":
        return load_libsvm(args.data, d=args.dimension)
    if not args.labels:
        raise DataError("paired format needs --labels")
    return load_paired(args.data, args.labels)


def _align_labels(model, ds: Dataset) -> np.ndarray:
    """Map file-local label indices onto the model's class order by token."""
    names = model.label_names
    if not names:
        return ds.labels
    lookup = {tok: i for i, tok in enumerate(names)}
    out = np.empty(ds.n_samples, dtype=np.int64)
    for i, c in enumerate(ds.labels):
        tok = ds.label_names[int(c)]
        if tok not in lookup:
            raise DataError(f"label {tok!r} is not among the model classes {names}")
        out[i] = lookup[tok]
    return out


def cmd_evaluate(args) -> int:
    model = deserialize_model(args.model)
    ds = _load_eval_dataset(args)
    if ds.n_features != model.n_features:
        raise DataError(
            f"dataset has {ds.n_features} features, model expects {model.n_features}"
        )
    labels = _align_labels(model, ds)
    t0 = time.perf_counter()
    acc = evaluate_accuracy(model, ds.X, labels)
    report = {
        "accuracy": acc,
        "per_class_accuracy": per_class_accuracy(model, ds.X, labels),
        "n_samples": ds.n_samples,
        "wall_time_seconds": time.perf_counter() - t0,
        "peak_memory_bytes": _peak_memory_bytes(),
        "version": __version__,
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def _read_feature_csv(path, d: int) -> np.ndarray:
    """Features-only CSV for predict; label-free rows of width d."""
    rows = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            row = [float(c) for c in line.split(",")]
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric cell") from None
        if len(row) != d:
            raise DataError(f"{path}:{lineno}: {len(row)} values, model expects {d}")
        rows.append(row)
    if not rows:
        raise DataError(f"{path} has no rows")
    return np.array(rows)


def cmd_predict(args) -> int:
    model = deserialize_model(args.model)
    X = _read_feature_csv(args.input, model.n_features)
    preds = predict_batch(model, X)
    names = model.label_names or [str(c) for c in range(model.n_classes)]
    out = {"predictions": [names[int(c)] for c in preds]}
    print(json.dumps(out))
    return EXIT_OK


def _bench_lssvm(cfg: RunConfig, train: Dataset, test: Dataset) -> dict:
    """Dual LSSVM competitor; one-vs-all over decision values when p > 2."""
    sigma = resolve_sigma_tilde(cfg.bench_sigma, train.X)
    kernel = KernelSpec("rbf", sigma)
    t0 = time.perf_counter()
    p = train.n_classes
    if p == 2:
        y_pm = np.where(train.labels == 1, 1.0, -1.0)
        m = lssvm_dual_train(train.X, y_pm, cfg.bench_gamma, kernel)
        preds = (m.decision_batch(test.X) >= 0.0).astype(int)
        train_preds = (m.decision_batch(train.X) >= 0.0).astype(int)
    else:
        vals = []
        train_vals = []
        for c in range(p):
            y_pm = np.where(train.labels == c, 1.0, -1.0)
            m = lssvm_dual_train(train.X, y_pm, cfg.bench_gamma, kernel)
            vals.append(m.decision_batch(test.X))
            train_vals.append(m.decision_batch(train.X))
        preds = np.argmax(np.stack(vals, axis=1), axis=1)
        train_preds = np.argmax(np.stack(train_vals, axis=1), axis=1)
    return {
        "accuracy": float(np.mean(preds == test.labels)),
        "train_accuracy": float(np.mean(train_preds == train.labels)),
        "gamma": cfg.bench_gamma,
        "sigma": sigma,
        "wall_time_seconds": time.perf_counter() - t0,
    }


def cmd_bench(args) -> int:
    """Compare DRKM under all init schemes against MLP and LSSVM baselines."""
    cfg = load_config(args.config)
    full = _load_dataset(cfg)
    train, test = _split(cfg, full)
    raw_train_X = full.X[train.source_indices]
    raw_test_X = full.X[test.source_indices]
    levels = cfg.build_levels(train.X)
    table: dict = {"dataset": cfg.dataset_paths, "drkm": {}, "version": __version__}
    for scheme in ("random", "dkpca", "dkpca_finetune"):
        t0 = time.perf_counter()
        tcfg = dataclasses.replace(cfg.train, init=scheme)
        model, traces = fit_model(
            train.X, train.labels, levels, cfg.head_kind, tcfg,
            lam=cfg.lam, eta=cfg.head_eta, sigma_tilde=cfg.sigma_tilde,
            label_names=list(train.label_names),
            scaler_mean=train.scaler_mean, scaler_std=train.scaler_std,
        )
        table["drkm"][scheme] = {
            "accuracy": evaluate_accuracy(model, raw_test_X, test.labels),
            "train_accuracy": evaluate_accuracy(model, raw_train_X, train.labels),
            "final_objective": traces[-1].objective[-1],
            "wall_time_seconds": time.perf_counter() - t0,
        }
    t0 = time.perf_counter()
    mlp = mlp_baseline_train(train.X, train.labels, n_steps=cfg.bench_mlp_steps,
                             lr=cfg.bench_mlp_lr, seed=cfg.train.seed,
                             lam=cfg.lam, eta=cfg.head_eta)
    test_std = (raw_test_X - train.scaler_mean) / train.scaler_std
    table["mlp_baseline"] = {
        "accuracy": float(np.mean(mlp.predict(test_std) == test.labels)),
        "train_accuracy": float(np.mean(mlp.predict(train.X) == train.labels)),
        "steps": cfg.bench_mlp_steps,
        "wall_time_seconds": time.perf_counter() - t0,
    }
    table["lssvm_baseline"] = _bench_lssvm(cfg, train, test)
    table["peak_memory_bytes"] = _peak_memory_bytes()
    out = json.dumps(table, indent=2, sort_keys=True)
    print(out)
    if "output" in cfg.raw and "metrics_path" in cfg.raw.get("output", {}):
        with open(cfg.metrics_path, "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drkm",
        description="Deep restricted kernel machine classifiers",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from a JSON config")
    p_train.add_argument("--config", required=True)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="evaluate a saved model on a dataset")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--format", choices=["csv", "libsvm", "paired"], default="csv")
    p_eval.add_argument("--has-header", action="store_true")
    p_eval.add_argument("--labels", help="labels file for the paired format")
    p_eval.add_argument("--dimension", type=int, help="feature count for libsvm data")
    p_eval.set_defaults(func=cmd_evaluate)

    p_pred = sub.add_parser("predict", help="predict labels for feature rows")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--input", required=True, help="CSV of feature rows, no labels")
    p_pred.set_defaults(func=cmd_predict)

    p_bench = sub.add_parser("bench", help="compare DRKM init schemes and baselines")
    p_bench.add_argument("--config", required=True)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidInputError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
