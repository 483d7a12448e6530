"""Closed-form and classical competitors: KPCA eigensolver, dual LSSVM, MLP.

The eigensolver doubles as the optimality oracle for the projected-gradient
trainer: a single unsupervised level attains exactly the top-s eigenvalue
mass of K/eta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, NumericalFailureError
from .kernels import KernelSpec, eval_kernel, kernel_matrix
from .model import HeadMlp, cross_entropy, init_mlp_head, mlp_forward
from .optimizer import AdamConfig, AdamState, adam_update


@dataclass(frozen=True)
class EigenResult:
    """Top-s eigenpairs of K/eta: orthonormal columns H, eigenvalues descending."""

    H: np.ndarray
    Lambda: np.ndarray


def kpca_eigen(K, eta: float, s: int) -> EigenResult:
    """Solve (1/eta) K h = lambda h for the s largest eigenvalues.

    Sign convention: each column's largest-magnitude entry is positive,
    ties broken toward the lowest index, so results are reproducible
    across solver backends.
    """
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    if K.ndim != 2 or K.shape != (n, n):
        raise InvalidInputError(f"K must be square, got {K.shape}")
    if np.max(np.abs(K - K.T)) > 1e-8 * max(1.0, np.max(np.abs(K))):
        raise InvalidInputError("K must be symmetric")
    if not 1 <= s <= n:
        raise InvalidInputError(f"need 1 <= s <= {n}, got s={s}")
    if not (np.isfinite(eta) and eta > 0):
        raise InvalidInputError("eta must be > 0")
    try:
        vals, vecs = scipy.linalg.eigh(K / eta, subset_by_index=[n - s, n - 1])
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - solver failure
        raise NumericalFailureError(f"eigensolver failed: {exc}", term="eigen") from exc
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    for j in range(s):
        lead = np.argmax(np.abs(vecs[:, j]))
        if vecs[lead, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return EigenResult(H=vecs, Lambda=vals)


@dataclass
class LssvmDualModel:
    """Dual least-squares SVM: decision sum_i alpha_i y_i k(x_i, x) + b."""

    alpha: np.ndarray
    b: float
    gamma: float
    kernel: KernelSpec
    X: np.ndarray
    y: np.ndarray

    def decision(self, x_star) -> float:
        x_star = np.asarray(x_star, dtype=np.float64)
        k = np.array([eval_kernel(self.kernel, xi, x_star) for xi in self.X])
        return float(np.sum(self.alpha * self.y * k) + self.b)

    def decision_batch(self, X_star) -> np.ndarray:
        X_star = np.asarray(X_star, dtype=np.float64)
        if self.kernel.kind == "rbf":
            d2 = (
                np.einsum("ij,ij->i", self.X, self.X)[:, None]
                + np.einsum("ij,ij->i", X_star, X_star)[None, :]
                - 2.0 * self.X @ X_star.T
            )
            np.maximum(d2, 0.0, out=d2)
            Kx = np.exp(-d2 / (2.0 * self.kernel.sigma**2))
        else:
            Kx = np.array([[eval_kernel(self.kernel, xi, xs) for xs in X_star]
                           for xi in self.X])
        return (self.alpha * self.y) @ Kx + self.b

    def predict(self, x_star) -> float:
        return 1.0 if self.decision(x_star) >= 0.0 else -1.0


def lssvm_dual_train(X, y, gamma: float, kernel: KernelSpec) -> LssvmDualModel:
    """Fit the dual system [[0, y^T], [y, Omega + I/gamma]] [b; alpha] = [0; 1].

    Omega_ik = y_i y_k k(x_i, x_k). A near-singular system raises with the
    condition estimate in the message.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if y.shape != (n,) or not np.all(np.abs(y) == 1.0):
        raise InvalidInputError("labels must be a length-N vector in {-1, +1}")
    if not (np.isfinite(gamma) and gamma > 0):
        raise InvalidInputError("gamma must be > 0")
    omega = np.outer(y, y) * kernel_matrix(kernel, X)
    A = np.zeros((n + 1, n + 1))
    A[0, 1:] = y
    A[1:, 0] = y
    A[1:, 1:] = omega + np.eye(n) / gamma
    rhs = np.zeros(n + 1)
    rhs[1:] = 1.0
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericalFailureError(
            f"dual system is numerically singular (condition estimate {cond:.3e})",
            term="lssvm_dual",
        )
    sol = np.linalg.solve(A, rhs)
    model = LssvmDualModel(alpha=sol[1:], b=float(sol[0]), gamma=gamma,
                           kernel=kernel, X=X, y=y)
    residual = np.linalg.norm(A @ sol - rhs) / np.linalg.norm(rhs)
    if residual > 1e-8:
        raise NumericalFailureError(
            f"dual solve residual {residual:.3e} exceeds 1e-8 "
            f"(condition estimate {cond:.3e})",
            term="lssvm_dual",
        )
    return model


@dataclass
class MlpBaseline:
    """Standalone MLP classifier on raw inputs, trained by Adam."""

    head: HeadMlp
    loss_trace: list[float]

    def predict(self, X) -> np.ndarray:
        logits = mlp_forward(self.head, np.asarray(X, dtype=np.float64))
        return np.argmax(logits, axis=1)


def mlp_baseline_train(X, y, n_steps: int = 2000, hidden: int = 10,
                       lr: float = 1e-3, seed: int = 0,
                       lam: float = 0.5, eta: float = 1.0) -> MlpBaseline:
    """Train the one-hidden-layer ReLU classifier directly on X.

    Same parameterization and loss scaling as the MLP head: mean
    cross-entropy / (2 lambda) plus the output-layer ridge term.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if not np.issubdtype(y.dtype, np.integer):
        raise InvalidInputError("labels must be integer class indices")
    n, d = X.shape
    p = int(y.max()) + 1
    rng = np.random.default_rng(seed)
    head = init_mlp_head(d, p, lam, eta, rng, hidden=hidden)
    adam_cfg = AdamConfig(lr=lr)
    adam_state = AdamState.zeros_like([head.w1, head.b1, head.w2, head.b2])
    trace = []
    scale = 1.0 / (2.0 * lam * n)
    for _ in range(n_steps):
        z1 = X @ head.w1 + head.b1
        a1 = np.maximum(z1, 0.0)
        logits = a1 @ head.w2 + head.b2
        loss = float(np.sum(cross_entropy(logits, y)) * scale
                     + 0.5 * eta * np.sum(head.w2**2))
        trace.append(loss)
        m = logits.max(axis=1, keepdims=True)
        probs = np.exp(logits - m)
        probs /= probs.sum(axis=1, keepdims=True)
        dlogits = probs
        dlogits[np.arange(n), y] -= 1.0
        dlogits *= scale
        gw2 = a1.T @ dlogits + eta * head.w2
        gb2 = dlogits.sum(axis=0)
        dz1 = (dlogits @ head.w2.T) * (z1 > 0)
        gw1 = X.T @ dz1
        gb1 = dz1.sum(axis=0)
        new = adam_update([head.w1, head.b1, head.w2, head.b2],
                          [gw1, gb1, gw2, gb2], adam_state, adam_cfg)
        head.w1, head.b1, head.w2, head.b2 = new
    return MlpBaseline(head=head, loss_trace=trace)
