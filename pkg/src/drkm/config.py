"""Run configuration: JSON schema validation and object construction.

Validation is strict: unknown keys anywhere are rejected, and every error
names the offending key by its path ("levels[0].eta"). Defaults mirror the
training protocol used throughout: lambda 0.5, every eta 1, 100 iterations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from .errors import ConfigError
from .kernels import KernelSpec
from .model import LevelConfig
from .optimizer import INIT_SCHEMES, AdamConfig, TrainConfig

DATASET_FORMATS = ("csv", "libsvm", "paired")


def _fail(path: str, why: str):
    raise ConfigError(f"{path}: {why}", key=path)


def _check_keys(obj: dict, path: str, allowed: set[str], required: set[str] = frozenset()):
    if not isinstance(obj, dict):
        _fail(path, "must be an object")
    for k in obj:
        if k not in allowed:
            _fail(f"{path}.{k}" if path else k, "unknown key")
    for k in required:
        if k not in obj:
            _fail(f"{path}.{k}" if path else k, "required key missing")


def _number(obj: dict, key: str, path: str, default=None, positive=False,
            integer=False, unit_open=False):
    """Fetch a numeric field with range checks; unit_open means (0, 1)."""
    if key not in obj:
        return default
    v = obj[key]
    full = f"{path}.{key}" if path else key
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(full, f"must be a number, got {v!r}")
    if integer and int(v) != v:
        _fail(full, f"must be an integer, got {v!r}")
    if positive and v <= 0:
        _fail(full, f"must be > 0, got {v!r}")
    if unit_open and not 0 < v < 1:
        _fail(full, f"must be in (0, 1), got {v!r}")
    return int(v) if integer else float(v)


def _sigma_field(obj: dict, key: str, path: str, default=None):
    """A bandwidth is a positive number or the string "median"."""
    if key not in obj:
        return default
    v = obj[key]
    full = f"{path}.{key}"
    if v == "median":
        return "median"
    if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
        _fail(full, f'must be a positive number or "median", got {v!r}')
    return float(v)


@dataclass
class LevelSpec:
    """A level before bandwidth resolution: sigma may still be "median"."""

    s: int
    kind: str
    sigma: float | str | None
    eta: float

    def resolve(self, X) -> LevelConfig:
        sigma = self.sigma
        if sigma == "median":
            from .kernels import median_pairwise_distance

            sigma = median_pairwise_distance(X)
        return LevelConfig(self.s, KernelSpec(self.kind, sigma), self.eta)


@dataclass
class RunConfig:
    """Validated run settings; raw holds the original document for echoing."""

    raw: dict
    dataset_format: str
    dataset_paths: list[str]
    has_header: bool
    dimension: int | None
    test_fraction: float | None
    n_train: int | None
    n_test: int | None
    data_seed: int
    level_specs: list[LevelSpec]
    head_kind: str
    lam: float
    head_eta: float
    train: TrainConfig
    sigma_tilde: float | str
    model_path: str
    metrics_path: str
    bench_gamma: float = 1.0
    bench_sigma: float | str = "median"
    bench_mlp_steps: int = 2000
    bench_mlp_lr: float = 1e-3

    def build_levels(self, X) -> tuple[LevelConfig, ...]:
        return tuple(spec.resolve(X) for spec in self.level_specs)


def parse_config(doc: Any) -> RunConfig:
    """Validate a decoded JSON document and build the run configuration."""
    _check_keys(doc, "", {"dataset", "levels", "head", "train", "smoother",
                          "output", "bench"}, {"dataset", "levels"})

    ds = doc["dataset"]
    _check_keys(ds, "dataset", {"format", "paths", "has_header", "dimension",
                                "split", "seed"}, {"format", "paths"})
    fmt = ds["format"]
    if fmt not in DATASET_FORMATS:
        _fail("dataset.format", f"must be one of {DATASET_FORMATS}, got {fmt!r}")
    paths = ds["paths"]
    if not isinstance(paths, list) or not paths or not all(isinstance(p, str) for p in paths):
        _fail("dataset.paths", "must be a non-empty list of strings")
    if fmt == "paired" and len(paths) != 2:
        _fail("dataset.paths", "paired format needs [features_path, labels_path]")
    if fmt != "paired" and len(paths) != 1:
        _fail("dataset.paths", f"{fmt} format takes exactly one path")
    has_header = ds.get("has_header", False)
    if not isinstance(has_header, bool):
        _fail("dataset.has_header", "must be a boolean")
    dimension = _number(ds, "dimension", "dataset", positive=True, integer=True)
    data_seed = _number(ds, "seed", "dataset", default=0, integer=True)
    if data_seed < 0:
        _fail("dataset.seed", "must be >= 0")
    test_fraction = n_train = n_test = None
    if "split" in ds:
        split = ds["split"]
        _check_keys(split, "dataset.split", {"test_fraction", "n_train", "n_test"})
        test_fraction = _number(split, "test_fraction", "dataset.split", unit_open=True)
        n_train = _number(split, "n_train", "dataset.split", positive=True, integer=True)
        n_test = _number(split, "n_test", "dataset.split", positive=True, integer=True)
        if test_fraction is None and n_train is None:
            _fail("dataset.split", "give test_fraction or n_train")
        if test_fraction is not None and n_train is not None:
            _fail("dataset.split", "test_fraction and n_train are mutually exclusive")

    levels = doc["levels"]
    if not isinstance(levels, list) or not levels:
        _fail("levels", "must be a non-empty list")
    level_specs = []
    for i, lv in enumerate(levels):
        path = f"levels[{i}]"
        _check_keys(lv, path, {"s", "kernel", "eta"}, {"s", "kernel"})
        s = _number(lv, "s", path, positive=True, integer=True)
        eta = _number(lv, "eta", path, default=1.0, positive=True)
        kern = lv["kernel"]
        _check_keys(kern, f"{path}.kernel", {"kind", "sigma"}, {"kind"})
        kind = kern["kind"]
        if kind not in ("linear", "rbf", "cosine"):
            _fail(f"{path}.kernel.kind", f"unknown kernel {kind!r}")
        sigma = _sigma_field(kern, "sigma", f"{path}.kernel")
        if kind == "rbf" and sigma is None:
            _fail(f"{path}.kernel.sigma", "rbf kernel requires sigma")
        if i > 0 and sigma == "median":
            _fail(f"{path}.kernel.sigma",
                  '"median" is data-based and allowed at the first level only')
        if i > 0 and kind == "cosine":
            _fail(f"{path}.kernel.kind",
                  "cosine has no input gradient and is allowed at the first level only")
        level_specs.append(LevelSpec(s, kind, sigma, eta))

    head = doc.get("head", {})
    _check_keys(head, "head", {"kind", "lambda", "eta"})
    head_kind = head.get("kind", "lssvm")
    if head_kind not in ("lssvm", "mlp"):
        _fail("head.kind", f"must be 'lssvm' or 'mlp', got {head_kind!r}")
    lam = _number(head, "lambda", "head", default=0.5, positive=True)
    head_eta = _number(head, "eta", "head", default=1.0, positive=True)

    tr = doc.get("train", {})
    _check_keys(tr, "train", {"max_iter", "init", "seed", "ls_alpha0", "ls_shrink",
                              "ls_c", "ls_max_halvings", "grad_tol", "adam"})
    init = tr.get("init", "random")
    if init not in INIT_SCHEMES:
        _fail("train.init", f"must be one of {INIT_SCHEMES}, got {init!r}")
    adam_doc = tr.get("adam", {})
    _check_keys(adam_doc, "train.adam", {"lr", "beta1", "beta2", "eps"})
    adam = AdamConfig(
        lr=_number(adam_doc, "lr", "train.adam", default=1e-3, positive=True),
        beta1=_number(adam_doc, "beta1", "train.adam", default=0.9, unit_open=True),
        beta2=_number(adam_doc, "beta2", "train.adam", default=0.999, unit_open=True),
        eps=_number(adam_doc, "eps", "train.adam", default=1e-8, positive=True),
    )
    train_seed = _number(tr, "seed", "train", default=0, integer=True)
    if train_seed < 0:
        _fail("train.seed", "must be >= 0")
    train_cfg = TrainConfig(
        max_iter=_number(tr, "max_iter", "train", default=100, integer=True, positive=True),
        init=init,
        seed=train_seed,
        ls_alpha0=_number(tr, "ls_alpha0", "train", default=1.0, positive=True),
        ls_shrink=_number(tr, "ls_shrink", "train", default=0.5, unit_open=True),
        ls_c=_number(tr, "ls_c", "train", default=1e-4, unit_open=True),
        ls_max_halvings=_number(tr, "ls_max_halvings", "train", default=30, integer=True,
                                positive=True),
        grad_tol=_number(tr, "grad_tol", "train", default=1e-6, positive=True),
        adam=adam,
    )

    sm = doc.get("smoother", {})
    _check_keys(sm, "smoother", {"sigma_tilde"})
    sigma_tilde = _sigma_field(sm, "sigma_tilde", "smoother", default="median")

    out = doc.get("output", {})
    _check_keys(out, "output", {"model_path", "metrics_path"})
    model_path = out.get("model_path", "drkm-model.json")
    metrics_path = out.get("metrics_path", "drkm-metrics.json")
    for key, val in (("model_path", model_path), ("metrics_path", metrics_path)):
        if not isinstance(val, str) or not val:
            _fail(f"output.{key}", "must be a non-empty string")

    bench = doc.get("bench", {})
    _check_keys(bench, "bench", {"gamma", "sigma", "mlp_steps", "mlp_lr"})
    bench_gamma = _number(bench, "gamma", "bench", default=1.0, positive=True)
    bench_sigma = _sigma_field(bench, "sigma", "bench", default="median")
    bench_mlp_steps = _number(bench, "mlp_steps", "bench", default=2000,
                              integer=True, positive=True)
    bench_mlp_lr = _number(bench, "mlp_lr", "bench", default=1e-3, positive=True)

    return RunConfig(
        raw=doc,
        dataset_format=fmt,
        dataset_paths=list(paths),
        has_header=has_header,
        dimension=dimension,
        test_fraction=test_fraction,
        n_train=n_train,
        n_test=n_test,
        data_seed=data_seed,
        level_specs=level_specs,
        head_kind=head_kind,
        lam=lam,
        head_eta=head_eta,
        train=train_cfg,
        sigma_tilde=sigma_tilde,
        model_path=model_path,
        metrics_path=metrics_path,
        bench_gamma=bench_gamma,
        bench_sigma=bench_sigma,
        bench_mlp_steps=bench_mlp_steps,
        bench_mlp_lr=bench_mlp_lr,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)
