"""Projected gradient descent over stacked Stiefel blocks plus the head.

Each outer iteration takes one shared step size for every hidden matrix and
the least-squares head, chosen by Armijo backtracking, with hidden matrices
re-projected onto the manifold after the raw step. MLP head parameters sit
outside the line search and receive one Adam step per outer iteration.

Sufficient decrease is tested at the projected trial point against the
manifold gradient norm: tangent-projected for Stiefel blocks, Euclidean for
head parameters. The raw ambient norm does not vanish at constrained optima
and would stall the search several orders of magnitude early.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .kernels import kernel_matrix
from .model import (
    DrkmState,
    Gradients,
    HeadLssvm,
    HeadMlp,
    LevelConfig,
    eval_gradients,
    eval_objective,
    init_mlp_head,
)
from .stiefel import feasibility_error, project_stiefel, random_stiefel, tangent_project

INIT_SCHEMES = ("random", "dkpca", "dkpca_finetune")


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not (0 < self.lr and 0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.eps > 0):
            raise InvalidInputError("adam constants out of range")


@dataclass(frozen=True)
class TrainConfig:
    max_iter: int = 100
    init: str = "random"
    seed: int = 0
    ls_alpha0: float = 1.0
    ls_shrink: float = 0.5
    ls_c: float = 1e-4
    ls_max_halvings: int = 30
    grad_tol: float = 1e-6
    adam: AdamConfig = field(default_factory=AdamConfig)

    def __post_init__(self):
        if self.max_iter < 0:
            raise InvalidInputError("max_iter must be >= 0")
        if self.init not in INIT_SCHEMES:
            raise InvalidInputError(f"init must be one of {INIT_SCHEMES}, got {self.init!r}")
        if self.ls_alpha0 <= 0 or not (0 < self.ls_shrink < 1) or not (0 < self.ls_c < 1):
            raise InvalidInputError("line-search constants out of range")
        if self.ls_max_halvings < 0 or self.grad_tol < 0:
            raise InvalidInputError("line-search constants out of range")


@dataclass
class AdamState:
    """First/second moment accumulators for one parameter group."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @staticmethod
    def zeros_like(params: list[np.ndarray]) -> "AdamState":
        return AdamState([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_update(params: list[np.ndarray], grads: list[np.ndarray],
                state: AdamState, cfg: AdamConfig) -> list[np.ndarray]:
    """One bias-corrected Adam step; mutates the moment state, returns new params."""
    state.t += 1
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = cfg.beta1 * state.m[i] + (1 - cfg.beta1) * g
        state.v[i] = cfg.beta2 * state.v[i] + (1 - cfg.beta2) * g * g
        mhat = state.m[i] / (1 - cfg.beta1**state.t)
        vhat = state.v[i] / (1 - cfg.beta2**state.t)
        out.append(p - cfg.lr * mhat / (np.sqrt(vhat) + cfg.eps))
    return out


@dataclass
class TrainTrace:
    """Per-iteration diagnostics of one training phase.

    ``objective`` has one more entry than the others (the value at entry).
    ``adam_delta`` logs how much the interleaved Adam step moved the
    objective (zero unless an MLP head is present).
    """

    objective: list[float] = field(default_factory=list)
    step_size: list[float] = field(default_factory=list)
    feasibility: list[float] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)
    adam_delta: list[float] = field(default_factory=list)
    stop_reason: str = "max_iter"


def manifold_grad_norm_sq(state: DrkmState, grads: Gradients, head_in_search: bool) -> float:
    """Squared stationarity norm: tangent parts for H blocks, Euclidean head."""
    total = 0.0
    for H, g in zip(state.hs, grads.hs):
        t = tangent_project(H, g)
        total += float(np.sum(t * t))
    if head_in_search and grads.w is not None:
        total += float(grads.w @ grads.w) + grads.b**2
    return total


def _apply_step(state: DrkmState, grads: Gradients, alpha: float,
                head_in_search: bool) -> DrkmState:
    """Trial state at step alpha: projected H steps, plain head step.

    Blocks with an all-zero gradient (frozen by the caller) are copied
    bitwise rather than re-projected.
    """
    trial = state.copy()
    for j, g in enumerate(grads.hs):
        if g.any():
            trial.hs[j] = project_stiefel(state.hs[j] - alpha * g)
    if head_in_search and grads.w is not None:
        trial.head.w = state.head.w - alpha * grads.w
        trial.head.b = state.head.b - alpha * grads.b
    return trial


def armijo_backtrack(evaluate, current: float, norm_sq: float, cfg: TrainConfig):
    """Halve the step until evaluate(alpha) passes sufficient decrease.

    ``evaluate`` maps a step size to (objective value, trial payload). The
    first alpha with value <= current - ls_c * alpha * norm_sq is accepted;
    exhausting the halving budget returns (0, None, current), a stall.
    """
    alpha = cfg.ls_alpha0
    for _ in range(cfg.ls_max_halvings + 1):
        val, payload = evaluate(alpha)
        if val <= current - cfg.ls_c * alpha * norm_sq:
            return alpha, payload, val
        alpha *= cfg.ls_shrink
    return 0.0, None, current


def backtracking_search(state: DrkmState, grads: Gradients, current_total: float,
                        cfg: TrainConfig, X: np.ndarray, y: np.ndarray,
                        k0: np.ndarray, supervised: bool,
                        head_in_search: bool) -> tuple[float, DrkmState | None, float]:
    """Find a step passing J(trial) <= J - c * alpha * ||grad||^2.

    Returns (alpha, trial state, trial objective). alpha = 0 with the state
    unchanged signals stationarity (gradient below tolerance); trial = None
    signals a stall (no acceptable step within the halving budget).
    """
    norm_sq = manifold_grad_norm_sq(state, grads, head_in_search)
    if np.sqrt(norm_sq) < cfg.grad_tol:
        return 0.0, state, current_total

    def evaluate(alpha):
        trial = _apply_step(state, grads, alpha, head_in_search)
        return eval_objective(trial, X, y, k0=k0, supervised=supervised).total, trial

    return armijo_backtrack(evaluate, current_total, norm_sq, cfg)


def _init_state(levels: tuple[LevelConfig, ...], head_kind: str, n: int, p: int,
                lam: float, eta: float, rng: np.random.Generator) -> DrkmState:
    hs = [random_stiefel(n, cfg.s, rng) for cfg in levels]
    s_n = levels[-1].s
    if head_kind == "lssvm":
        head = HeadLssvm(w=0.01 * rng.standard_normal(s_n), b=0.0, lam=lam, eta=eta)
    elif head_kind == "mlp":
        head = init_mlp_head(s_n, p, lam, eta, rng)
    else:
        raise InvalidInputError(f"head_kind must be 'lssvm' or 'mlp', got {head_kind!r}")
    return DrkmState(levels, hs, head)


def _mlp_params(head: HeadMlp) -> list[np.ndarray]:
    return [head.w1, head.b1, head.w2, head.b2]


def _full_grad_norm(state: DrkmState, grads: Gradients) -> float:
    """Stationarity norm over every trainable block, for diagnostics."""
    total = manifold_grad_norm_sq(state, grads, head_in_search=grads.w is not None)
    for g in (grads.w1, grads.b1, grads.w2, grads.b2):
        if g is not None:
            total += float(np.sum(g * g))
    return float(np.sqrt(total))


def _pgd_phase(state: DrkmState, X: np.ndarray, y: np.ndarray, k0: np.ndarray,
               cfg: TrainConfig, supervised: bool,
               train_hs: bool = True) -> tuple[DrkmState, TrainTrace]:
    """Run one PGD phase to a stopping condition.

    ``supervised=False`` optimizes the stacked-KPCA terms alone.
    ``train_hs=False`` freezes the hidden matrices and trains the head only
    (the non-finetuned warm-start scheme).
    """
    use_mlp = isinstance(state.head, HeadMlp) and supervised
    adam_state = AdamState.zeros_like(_mlp_params(state.head)) if use_mlp else None
    head_in_search = supervised and isinstance(state.head, HeadLssvm)
    # anything at all inside the line-searched block?
    do_search = train_hs or head_in_search
    trace = TrainTrace()
    current = eval_objective(state, X, y, k0=k0, supervised=supervised).total
    trace.objective.append(current)
    for _ in range(cfg.max_iter):
        grads = eval_gradients(state, X, y, k0=k0, supervised=supervised)
        if not train_hs:
            grads.hs = [np.zeros_like(h) for h in state.hs]
        stationary = False
        alpha = 0.0
        if do_search:
            alpha, trial, val = backtracking_search(
                state, grads, current, cfg, X, y, k0, supervised, head_in_search)
            if trial is None:
                trace.stop_reason = "stall"
                break
            stationary = trial is state
            state, current = trial, val
        adam_delta = 0.0
        if use_mlp:
            g = eval_gradients(state, X, y, k0=k0, supervised=supervised)
            new = adam_update(_mlp_params(state.head),
                              [g.w1, g.b1, g.w2, g.b2], adam_state, cfg.adam)
            state.head.w1, state.head.b1, state.head.w2, state.head.b2 = new
            after = eval_objective(state, X, y, k0=k0, supervised=supervised).total
            adam_delta = after - current
            current = after
        trace.objective.append(current)
        trace.step_size.append(alpha)
        trace.feasibility.append(max(feasibility_error(h) for h in state.hs))
        trace.grad_norm.append(_full_grad_norm(state, grads))
        trace.adam_delta.append(adam_delta)
        if stationary:
            trace.stop_reason = "grad_tol"
            break
    return state, trace


def pgd_train(X: np.ndarray, y: np.ndarray, levels: tuple[LevelConfig, ...],
              head_kind: str, cfg: TrainConfig, lam: float = 0.5, eta: float = 1.0,
              supervised: bool = True) -> tuple[DrkmState, TrainTrace, TrainTrace | None]:
    """Train a model end to end; returns (state, trace, warm-start trace).

    Initialization schemes: ``random`` starts from Haar-random feature
    matrices; ``dkpca`` first optimizes the unsupervised terms alone, then
    trains only the head on the frozen features; ``dkpca_finetune`` runs the
    unsupervised phase and then continues on the full coupled objective.
    The returned trace covers the final phase; the warm-start phase's trace
    is returned separately (None for random init).

    ``supervised=False`` trains the stacked-KPCA objective with no head
    terms regardless of scheme.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = X.shape[0]
    if y.shape[0] != n:
        raise InvalidInputError("X and y disagree on the sample count")
    p = int(np.max(y)) + 1 if head_kind == "mlp" else 2
    rng = np.random.default_rng(cfg.seed)
    state = _init_state(tuple(levels), head_kind, n, p, lam, eta, rng)
    k0 = kernel_matrix(levels[0].kernel, X)
    if not supervised:
        state, trace = _pgd_phase(state, X, y, k0, cfg, supervised=False)
        return state, trace, None
    if cfg.init == "random":
        state, trace = _pgd_phase(state, X, y, k0, cfg, supervised=True)
        return state, trace, None
    state, warm = _pgd_phase(state, X, y, k0, cfg, supervised=False)
    if cfg.init == "dkpca":
        state, trace = _pgd_phase(state, X, y, k0, cfg, supervised=True, train_hs=False)
    else:
        state, trace = _pgd_phase(state, X, y, k0, cfg, supervised=True)
    return state, trace, warm
