"""Out-of-sample prediction: kernel-smoothed latents, labels, accuracy.

A trained model carries no explicit feature map, so the hidden vector of a
new point is interpolated from the training latents with Gaussian weights

    h* = sum_i w_i h_i^(n) / sum_i w_i,   w_i = exp(-||x_i - x*||^2 / (2 sigma~^2)),

then fed to the head. Multiclass with the margin head trains p independent
one-vs-rest binary models and takes the class with the largest raw decision
value.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError, UnderflowError
from .kernels import median_pairwise_distance
from .model import DrkmState, HeadLssvm, HeadMlp, LevelConfig, mlp_forward
from .optimizer import TrainConfig, TrainTrace, pgd_train
from .stiefel import FEASIBILITY_TOL, feasibility_error

# Environment variable capping one-vs-all training parallelism.
MAX_WORKERS_ENV = "DRKM_MAX_WORKERS"

_SMOOTHER_FLOOR = 1e-300


@dataclass
class DrkmModel:
    """Trained state plus everything prediction needs.

    ``X`` is the training matrix in the space the model was trained in
    (standardized when a scaler is present); ``scaler_mean``/``scaler_std``
    map raw query points into that space. For a binary margin head, class
    index 1 encodes the +1 side.
    """

    state: DrkmState
    X: np.ndarray
    sigma_tilde: float
    scaler_mean: np.ndarray | None = None
    scaler_std: np.ndarray | None = None
    label_names: list[str] | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2 or self.X.shape[0] != self.state.n_samples:
            raise InvalidInputError("retained X must be N x d for the trained state")
        self.sigma_tilde = float(self.sigma_tilde)
        if not (np.isfinite(self.sigma_tilde) and self.sigma_tilde > 0):
            raise InvalidInputError("sigma_tilde must be > 0")
        if (self.scaler_mean is None) != (self.scaler_std is None):
            raise InvalidInputError("scaler mean and std must be given together")
        if feasibility_error(self.state.hs[-1]) > FEASIBILITY_TOL:
            raise InvalidInputError("top-level hidden features are off the manifold")

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return self.state.head.n_classes if isinstance(self.state.head, HeadMlp) else 2


@dataclass
class OneVsAllModel:
    """One binary margin-head model per class; prediction takes the argmax."""

    models: list[DrkmModel]
    label_names: list[str] | None = None

    def __post_init__(self):
        if len(self.models) < 2:
            raise InvalidInputError("one-vs-all needs at least 2 class models")
        d = self.models[0].n_features
        if any(m.n_features != d for m in self.models):
            raise InvalidInputError("class models disagree on the feature dimension")

    @property
    def n_features(self) -> int:
        return self.models[0].n_features

    @property
    def n_classes(self) -> int:
        return len(self.models)


def _prepare_queries(model: DrkmModel, X_star) -> np.ndarray:
    X_star = np.atleast_2d(np.asarray(X_star, dtype=np.float64))
    if X_star.shape[1] != model.n_features:
        raise InvalidInputError(
            f"query dimension {X_star.shape[1]} does not match model dimension "
            f"{model.n_features}"
        )
    if model.scaler_mean is not None:
        X_star = (X_star - model.scaler_mean) / model.scaler_std
    return X_star


def smoother_latent_batch(model: DrkmModel, X_star) -> np.ndarray:
    """Smoothed top-level latent vectors for a batch of query rows."""
    Q = _prepare_queries(model, X_star)
    X = model.X
    d2 = (
        np.einsum("ij,ij->i", X, X)[:, None]
        + np.einsum("ij,ij->i", Q, Q)[None, :]
        - 2.0 * X @ Q.T
    )
    np.maximum(d2, 0.0, out=d2)
    W = np.exp(-d2 / (2.0 * model.sigma_tilde**2))  # (N, M)
    denom = W.sum(axis=0)
    if np.any(denom < _SMOOTHER_FLOOR):
        raise UnderflowError(
            "smoother weights underflow: query too far from all training points; "
            "increase sigma_tilde"
        )
    return (W.T @ model.state.hs[-1]) / denom[:, None]


def smoother_latent(model: DrkmModel, x_star) -> np.ndarray:
    """Smoothed latent vector of a single query point."""
    x_star = np.asarray(x_star, dtype=np.float64)
    if x_star.ndim != 1:
        raise InvalidInputError("x_star must be a single vector")
    return smoother_latent_batch(model, x_star[None, :])[0]


def decision_values(model: DrkmModel | OneVsAllModel, X_star) -> np.ndarray:
    """Raw head outputs: (M,) margins for binary, (M, p) otherwise."""
    if isinstance(model, OneVsAllModel):
        cols = [decision_values(m, X_star) for m in model.models]
        return np.stack(cols, axis=1)
    H = smoother_latent_batch(model, X_star)
    head = model.state.head
    if isinstance(head, HeadLssvm):
        return H @ head.w + head.b
    return mlp_forward(head, H)


def predict_batch(model: DrkmModel | OneVsAllModel, X_star) -> np.ndarray:
    """Class indices for a batch of query rows.

    Binary margin head: decision >= 0 predicts class 1 (the +1 side), so an
    exact tie lands on +1. Logit and one-vs-all heads: argmax, ties to the
    lowest class index.
    """
    vals = decision_values(model, X_star)
    if vals.ndim == 1:
        return (vals >= 0.0).astype(np.int64)
    return np.argmax(vals, axis=1)


def predict(model: DrkmModel | OneVsAllModel, x_star) -> int:
    x_star = np.asarray(x_star, dtype=np.float64)
    if x_star.ndim != 1:
        raise InvalidInputError("x_star must be a single vector")
    return int(predict_batch(model, x_star[None, :])[0])


def evaluate_accuracy(model: DrkmModel | OneVsAllModel, X, y) -> float:
    """Fraction of rows whose predicted class index matches y."""
    y = np.asarray(y)
    if y.size == 0:
        raise InvalidInputError("cannot evaluate on an empty dataset")
    preds = predict_batch(model, X)
    if preds.shape != y.shape:
        raise InvalidInputError("X and y disagree on the sample count")
    return float(np.mean(preds == y))


def per_class_accuracy(model: DrkmModel | OneVsAllModel, X, y) -> list[float | None]:
    """Accuracy restricted to each class; None for classes absent from y."""
    y = np.asarray(y)
    preds = predict_batch(model, X)
    p = max(model.n_classes, int(y.max()) + 1 if y.size else 0)
    out: list[float | None] = []
    for c in range(p):
        mask = y == c
        out.append(float(np.mean(preds[mask] == c)) if mask.any() else None)
    return out


def resolve_sigma_tilde(value, X) -> float:
    """Turn a sigma config value into a number ("median" uses the data)."""
    if value == "median":
        return median_pairwise_distance(X)
    value = float(value)
    if not (np.isfinite(value) and value > 0):
        raise InvalidInputError("sigma_tilde must be > 0")
    return value


def _child_seed(seed: int, c: int) -> int:
    return int(np.random.SeedSequence([seed, c]).generate_state(1)[0])


def train_one_vs_all(X, y, levels: tuple[LevelConfig, ...], cfg: TrainConfig,
                     lam: float = 0.5, eta: float = 1.0,
                     sigma_tilde: float | str = "median",
                     label_names: list[str] | None = None,
                     scaler_mean=None, scaler_std=None,
                     ) -> tuple[OneVsAllModel, list[TrainTrace]]:
    """Train p independent class-vs-rest binary models with margin heads.

    Class c's run reseeds deterministically from (cfg.seed, c), so results
    do not depend on the worker count (set via DRKM_MAX_WORKERS, default
    serial).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    p = int(y.max()) + 1
    if p < 2:
        raise InvalidInputError("one-vs-all needs at least 2 classes")
    counts = np.bincount(y, minlength=p)
    if np.any(counts == 0):
        missing = int(np.argmin(counts))
        raise InvalidInputError(f"class {missing} has no training samples")
    st = resolve_sigma_tilde(sigma_tilde, X)

    def train_class(c: int) -> tuple[DrkmModel, TrainTrace]:
        yc = np.where(y == c, 1.0, -1.0)
        ccfg = replace(cfg, seed=_child_seed(cfg.seed, c))
        state, trace, _ = pgd_train(X, yc, levels, "lssvm", ccfg, lam=lam, eta=eta)
        model = DrkmModel(state=state, X=X, sigma_tilde=st,
                          scaler_mean=scaler_mean, scaler_std=scaler_std,
                          label_names=label_names)
        return model, trace

    workers = int(os.environ.get(MAX_WORKERS_ENV, "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(train_class, range(p)))
    else:
        results = [train_class(c) for c in range(p)]
    models = [m for m, _ in results]
    traces = [t for _, t in results]
    return OneVsAllModel(models=models, label_names=label_names), traces


def fit_model(X, y, levels: tuple[LevelConfig, ...], head_kind: str,
              cfg: TrainConfig, lam: float = 0.5, eta: float = 1.0,
              sigma_tilde: float | str = "median",
              label_names: list[str] | None = None,
              scaler_mean=None, scaler_std=None,
              ) -> tuple[DrkmModel | OneVsAllModel, list[TrainTrace]]:
    """Train whatever model the label count and head kind call for.

    Margin head with two classes gives one binary model; more classes give
    a one-vs-all ensemble; the MLP head handles any class count directly.
    Returns the model and the training trace(s), one per underlying run.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if not np.issubdtype(y.dtype, np.integer):
        raise InvalidInputError("labels must be integer class indices")
    p = int(y.max()) + 1
    if head_kind == "lssvm" and p > 2:
        model, traces = train_one_vs_all(X, y, levels, cfg, lam=lam, eta=eta,
                                         sigma_tilde=sigma_tilde,
                                         label_names=label_names,
                                         scaler_mean=scaler_mean,
                                         scaler_std=scaler_std)
        return model, traces
    st = resolve_sigma_tilde(sigma_tilde, X)
    y_train = np.where(y == 1, 1.0, -1.0) if head_kind == "lssvm" else y
    state, trace, _ = pgd_train(X, y_train, levels, head_kind, cfg, lam=lam, eta=eta)
    model = DrkmModel(state=state, X=X, sigma_tilde=st,
                      scaler_mean=scaler_mean, scaler_std=scaler_std,
                      label_names=label_names)
    return model, [trace]
