"""Deep restricted kernel machine state, objectives, and analytic gradients.

A model stacks n kernel-PCA levels. Level 1 applies its kernel to the data;
level j >= 2 applies its kernel to the previous level's hidden features
H^(j-1). Each H^(j) is an N x s_j matrix constrained to have orthonormal
columns. A classification head (regularized least-squares margin, or a small
MLP with cross-entropy) reads the top-level features.

The total objective being minimized is

    J = - sum_j 1/(2 eta_j) Tr(H^(j)T K^(j-1) H^(j)) + classification + reg

with the classification and regularization terms depending on the head:
least-squares head (1/(2 lambda)) sum_i (1 - y_i (w.h_i + b))^2 + (eta/2) w.w,
MLP head (1/(2 lambda N)) sum_i CE(f(h_i), y_i) + (eta/2) Tr(W2^T W2).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError, NumericalFailureError
from .kernels import KernelSpec, kernel_input_gradient, kernel_matrix


@dataclass(frozen=True)
class LevelConfig:
    """One KPCA level: component count s, kernel, and coupling weight eta."""

    s: int
    kernel: KernelSpec
    eta: float = 1.0

    def __post_init__(self):
        if not isinstance(self.s, (int, np.integer)) or self.s < 1:
            raise InvalidInputError(f"level size s must be a positive int, got {self.s!r}")
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise InvalidInputError(f"level eta must be > 0, got {self.eta!r}")


def _check_positive(value, name: str) -> float:
    value = float(value)
    if not (np.isfinite(value) and value > 0):
        raise InvalidInputError(f"{name} must be > 0, got {value!r}")
    return value


@dataclass
class HeadLssvm:
    """Linear squared-margin head: decision w.h + b."""

    w: np.ndarray
    b: float
    lam: float
    eta: float

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 1:
            raise InvalidInputError("w must be a vector")
        self.b = float(self.b)
        self.lam = _check_positive(self.lam, "lambda")
        self.eta = _check_positive(self.eta, "eta")

    def copy(self) -> "HeadLssvm":
        return replace(self, w=self.w.copy())


@dataclass
class HeadMlp:
    """One-hidden-layer ReLU head producing p class logits.

    Only the output-layer weights w2 are ridge-regularized; the hidden
    layer is free.
    """

    w1: np.ndarray  # (s_n, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden, p)
    b2: np.ndarray  # (p,)
    lam: float
    eta: float

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        if self.w1.ndim != 2 or self.w2.ndim != 2:
            raise InvalidInputError("w1 and w2 must be matrices")
        hidden = self.w1.shape[1]
        if self.b1.shape != (hidden,) or self.w2.shape[0] != hidden:
            raise InvalidInputError("hidden-layer shapes are inconsistent")
        if self.b2.shape != (self.w2.shape[1],):
            raise InvalidInputError("output-layer shapes are inconsistent")
        self.lam = _check_positive(self.lam, "lambda")
        self.eta = _check_positive(self.eta, "eta")

    @property
    def n_classes(self) -> int:
        return self.w2.shape[1]

    def copy(self) -> "HeadMlp":
        return replace(
            self, w1=self.w1.copy(), b1=self.b1.copy(), w2=self.w2.copy(), b2=self.b2.copy()
        )


DEFAULT_MLP_HIDDEN = 10


def init_mlp_head(s_n: int, p: int, lam: float, eta: float,
                  rng: np.random.Generator, hidden: int = DEFAULT_MLP_HIDDEN) -> HeadMlp:
    """Fresh MLP head: He-scaled normal weights, zero biases."""
    if p < 2:
        raise InvalidInputError("MLP head needs at least 2 classes")
    w1 = rng.standard_normal((s_n, hidden)) * np.sqrt(2.0 / s_n)
    w2 = rng.standard_normal((hidden, p)) * np.sqrt(2.0 / hidden)
    return HeadMlp(w1=w1, b1=np.zeros(hidden), w2=w2, b2=np.zeros(p), lam=lam, eta=eta)


@dataclass
class DrkmState:
    """Level configs, their hidden feature matrices, and the head."""

    levels: tuple[LevelConfig, ...]
    hs: list[np.ndarray]
    head: HeadLssvm | HeadMlp

    def __post_init__(self):
        self.levels = tuple(self.levels)
        if len(self.levels) < 1:
            raise InvalidInputError("need at least one level")
        if len(self.hs) != len(self.levels):
            raise InvalidInputError("one hidden matrix per level required")
        self.hs = [np.asarray(h, dtype=np.float64) for h in self.hs]
        n = self.hs[0].shape[0]
        for cfg, h in zip(self.levels, self.hs):
            if h.shape != (n, cfg.s):
                raise InvalidInputError(
                    f"hidden matrix shape {h.shape} does not match (N={n}, s={cfg.s})"
                )
            if cfg.s > n:
                raise InvalidInputError(f"level size s={cfg.s} exceeds sample count {n}")
        s_n = self.levels[-1].s
        head_in = self.head.w.shape[0] if isinstance(self.head, HeadLssvm) else self.head.w1.shape[0]
        if head_in != s_n:
            raise InvalidInputError(
                f"head expects dim {head_in}, top level provides {s_n}"
            )

    @property
    def n_samples(self) -> int:
        return self.hs[0].shape[0]

    def copy(self) -> "DrkmState":
        return DrkmState(self.levels, [h.copy() for h in self.hs], self.head.copy())


@dataclass
class ObjectiveBreakdown:
    """Objective value split into its additive parts."""

    unsup_terms: list[float]
    classification_term: float
    regularization_term: float
    total: float


@dataclass
class Gradients:
    """Analytic gradients per trainable block; head fields match the head kind."""

    hs: list[np.ndarray]
    w: np.ndarray | None = None
    b: float | None = None
    w1: np.ndarray | None = None
    b1: np.ndarray | None = None
    w2: np.ndarray | None = None
    b2: np.ndarray | None = None


def _check_labels(state: DrkmState, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (state.n_samples,):
        raise InvalidInputError(f"labels must have shape ({state.n_samples},), got {y.shape}")
    if isinstance(state.head, HeadLssvm):
        y = y.astype(np.float64)
        if not np.all(np.abs(y) == 1.0):
            raise InvalidInputError("least-squares head requires labels in {-1, +1}")
    else:
        if not np.issubdtype(y.dtype, np.integer):
            raise InvalidInputError("MLP head requires integer class labels")
        p = state.head.n_classes
        if y.min() < 0 or y.max() >= p:
            raise InvalidInputError(f"class labels must lie in [0, {p})")
    return y


def level_kernel_matrices(state: DrkmState, X: np.ndarray,
                          k0: np.ndarray | None = None) -> list[np.ndarray]:
    """Kernel matrix feeding each level: K^(0) on X, then K^(j) on H^(j).

    Pass a precomputed ``k0`` to skip the data-kernel evaluation; it never
    changes while X is fixed, unlike the higher matrices.
    """
    mats = [kernel_matrix(state.levels[0].kernel, X) if k0 is None else k0]
    for j in range(1, len(state.levels)):
        mats.append(kernel_matrix(state.levels[j].kernel, state.hs[j - 1]))
    return mats


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def mlp_forward(head: HeadMlp, H: np.ndarray) -> np.ndarray:
    """Logits f(H) for a batch of feature rows."""
    H = np.atleast_2d(np.asarray(H, dtype=np.float64))
    if H.shape[1] != head.w1.shape[0]:
        raise InvalidInputError(
            f"feature dim {H.shape[1]} does not match head input {head.w1.shape[0]}"
        )
    return relu(H @ head.w1 + head.b1) @ head.w2 + head.b2


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-sample softmax cross-entropy, log-sum-exp stabilized."""
    logits = np.atleast_2d(logits)
    m = logits.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
    return lse - logits[np.arange(logits.shape[0]), labels]


def softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - m)
    return e / e.sum(axis=1, keepdims=True)


def _finite_or_raise(value, term: str):
    if not np.all(np.isfinite(value)):
        raise NumericalFailureError(f"non-finite value in {term} term", term=term)


def eval_objective(state: DrkmState, X: np.ndarray, y: np.ndarray,
                   k0: np.ndarray | None = None,
                   supervised: bool = True) -> ObjectiveBreakdown:
    """Evaluate the training objective, split into its parts.

    ``supervised=False`` drops the classification and regularization terms
    (the purely unsupervised stacked-KPCA objective used by the warm-start
    phase; labels are ignored). Hidden matrices need not be feasible; the
    line search evaluates projected trial points through this same routine.
    """
    mats = level_kernel_matrices(state, X, k0)
    unsup = []
    for cfg, K, H in zip(state.levels, mats, state.hs):
        val = -np.sum((K @ H) * H) / (2.0 * cfg.eta)
        _finite_or_raise(val, "unsupervised")
        unsup.append(float(val))
    if not supervised:
        total = float(sum(unsup))
        return ObjectiveBreakdown(unsup, 0.0, 0.0, total)
    y = _check_labels(state, y)
    H_top = state.hs[-1]
    head = state.head
    if isinstance(head, HeadLssvm):
        e = 1.0 - y * (H_top @ head.w + head.b)
        cls = float(np.sum(e**2) / (2.0 * head.lam))
        reg = float(0.5 * head.eta * (head.w @ head.w))
    else:
        ce = cross_entropy(mlp_forward(head, H_top), y)
        cls = float(np.sum(ce) / (2.0 * head.lam * len(y)))
        reg = float(0.5 * head.eta * np.sum(head.w2**2))
    _finite_or_raise(cls, "classification")
    _finite_or_raise(reg, "regularization")
    total = float(sum(unsup) + cls + reg)
    return ObjectiveBreakdown(unsup, cls, reg, total)


def eval_gradients(state: DrkmState, X: np.ndarray, y: np.ndarray,
                   k0: np.ndarray | None = None,
                   supervised: bool = True) -> Gradients:
    """Analytic gradient of the objective for every trainable block.

    dJ/dH^(j) collects a direct term -(1/eta_j) K^(j-1) H^(j), a coupling
    term through the level-(j+1) kernel when one exists, and the head's
    contribution at the top level.
    """
    mats = level_kernel_matrices(state, X, k0)
    n_levels = len(state.levels)
    grads_h = []
    for j in range(n_levels):
        g = -(mats[j] @ state.hs[j]) / state.levels[j].eta
        if j + 1 < n_levels:
            nxt = state.levels[j + 1]
            G = state.hs[j + 1] @ state.hs[j + 1].T
            g = g - kernel_input_gradient(nxt.kernel, state.hs[j], G) / (2.0 * nxt.eta)
        grads_h.append(g)
    if not supervised:
        for g in grads_h:
            _finite_or_raise(g, "unsupervised")
        return Gradients(hs=grads_h)
    y = _check_labels(state, y)
    H_top = state.hs[-1]
    head = state.head
    if isinstance(head, HeadLssvm):
        e = 1.0 - y * (H_top @ head.w + head.b)
        ey = e * y
        grads_h[-1] = grads_h[-1] - np.outer(ey, head.w) / head.lam
        gw = -(H_top.T @ ey) / head.lam + head.eta * head.w
        gb = float(-np.sum(ey) / head.lam)
        out = Gradients(hs=grads_h, w=gw, b=gb)
        _finite_or_raise(gw, "classification")
    else:
        n = len(y)
        z1 = H_top @ head.w1 + head.b1
        a1 = relu(z1)
        logits = a1 @ head.w2 + head.b2
        dlogits = softmax(logits)
        dlogits[np.arange(n), y] -= 1.0
        dlogits /= 2.0 * head.lam * n
        gw2 = a1.T @ dlogits + head.eta * head.w2
        gb2 = dlogits.sum(axis=0)
        da1 = dlogits @ head.w2.T
        dz1 = da1 * (z1 > 0)
        gw1 = H_top.T @ dz1
        gb1 = dz1.sum(axis=0)
        grads_h[-1] = grads_h[-1] + dz1 @ head.w1.T
        out = Gradients(hs=grads_h, w1=gw1, b1=gb1, w2=gw2, b2=gb2)
        _finite_or_raise(gw2, "classification")
    for g in grads_h:
        _finite_or_raise(g, "gradient")
    return out


def conjugate_features(head: HeadLssvm, h: np.ndarray, y: float) -> float:
    """Stationarity value of the latent variable: (1/lambda)(1 - y (w.h + b))."""
    if not isinstance(head, HeadLssvm):
        raise InvalidInputError("conjugate features are defined for the least-squares head")
    h = np.asarray(h, dtype=np.float64)
    return float((1.0 - y * (head.w @ h + head.b)) / head.lam)


def head_decision(head: HeadLssvm | HeadMlp, h: np.ndarray) -> float | np.ndarray:
    """Raw decision for one feature vector: scalar margin, or p logits."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1:
        raise InvalidInputError(f"h must be a vector, got shape {h.shape}")
    if isinstance(head, HeadLssvm):
        if h.shape != head.w.shape:
            raise InvalidInputError(f"h has dim {h.shape[0]}, head expects {head.w.shape[0]}")
        return float(head.w @ h + head.b)
    return mlp_forward(head, h)[0]


def rkm_objective_expanded(head: HeadLssvm, feats: np.ndarray, y: np.ndarray,
                           h: np.ndarray) -> float:
    """Binary margin objective with the latent variables written explicitly.

    J0 = sum_i (1 - y_i (w.f_i + b)) h_i - (lambda/2) h_i^2 + (eta/2) w.w.
    """
    e = 1.0 - y * (feats @ head.w + head.b)
    return float(np.sum(e * h - 0.5 * head.lam * h**2) + 0.5 * head.eta * (head.w @ head.w))


def rkm_objective_reduced(head: HeadLssvm, feats: np.ndarray, y: np.ndarray) -> float:
    """The same objective after eliminating the latent variables.

    J0 = (1/(2 lambda)) sum_i e_i^2 + (eta/2) w.w with e_i the margin slack.
    """
    e = 1.0 - y * (feats @ head.w + head.b)
    return float(np.sum(e**2) / (2.0 * head.lam) + 0.5 * head.eta * (head.w @ head.w))
