"""Kernel evaluation, Gram-matrix assembly, and kernel input gradients.

Levels past the first feed trainable features back through a kernel, so the
linear and rbf kernels also expose the derivative of Tr(G K(H)) with respect
to H. The cosine kernel carries no input gradient and is admissible only
where its inputs are fixed data (the first level).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, UnsupportedGradientError

KERNEL_KINDS = ("linear", "rbf", "cosine")

# Kernels whose input gradient is implemented (levels j >= 2 need it).
DIFFERENTIABLE_KINDS = ("linear", "rbf")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus parameters.

    kind : one of "linear", "rbf", "cosine"
    sigma : bandwidth, required and positive for "rbf", ignored otherwise
    """

    kind: str
    sigma: float | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise InvalidInputError(
                f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}"
            )
        if self.kind == "rbf":
            if self.sigma is None or not np.isfinite(self.sigma) or self.sigma <= 0:
                raise InvalidInputError("rbf kernel requires sigma > 0")


def _as_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidInputError(f"{name} must be a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return v


def eval_kernel(spec: KernelSpec, x, z) -> float:
    """Evaluate the kernel on a single pair of vectors.

    linear: x.z ; rbf: exp(-||x-z||^2 / (2 sigma^2)) ; cosine: x.z/(|x||z|).
    """
    x = _as_vector(x, "x")
    z = _as_vector(z, "z")
    if x.shape != z.shape:
        raise InvalidInputError(
            f"dimension mismatch: x has dim {x.shape[0]}, z has dim {z.shape[0]}"
        )
    if spec.kind == "linear":
        return float(x @ z)
    if spec.kind == "rbf":
        d2 = float(np.sum((x - z) ** 2))
        return float(np.exp(-d2 / (2.0 * spec.sigma**2)))
    nx = float(np.linalg.norm(x))
    nz = float(np.linalg.norm(z))
    if nx == 0.0 or nz == 0.0:
        raise InvalidInputError("cosine kernel is undefined for the zero vector")
    return float((x @ z) / (nx * nz))


def _as_matrix(X, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidInputError(f"{name} must be a non-empty 2-d matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return X


def _gram(X: np.ndarray, row_block: int | None) -> np.ndarray:
    """Inner-product matrix X X^T, optionally assembled in row blocks.

    Block assembly bounds temporary memory at O(N^2 + block * d) for
    high-dimensional inputs; each entry is a plain dot product either way.
    """
    n = X.shape[0]
    if row_block is None or row_block >= n:
        return X @ X.T
    G = np.empty((n, n), dtype=np.float64)
    for start in range(0, n, row_block):
        stop = min(start + row_block, n)
        G[start:stop] = X[start:stop] @ X.T
    return G


def kernel_matrix(spec: KernelSpec, X, row_block: int | None = None) -> np.ndarray:
    """Assemble the N x N kernel matrix of the rows of X.

    Symmetry is enforced by mirroring the upper triangle, and the rbf
    diagonal is exactly 1 (exp(0)). ``row_block`` switches the underlying
    inner-product pass to blocked assembly for very wide X.
    """
    X = _as_matrix(X, "X")
    G = _gram(X, row_block)
    if spec.kind == "linear":
        K = G
    elif spec.kind == "rbf":
        sq = np.einsum("ij,ij->i", X, X)
        d2 = sq[:, None] + sq[None, :] - 2.0 * G
        np.maximum(d2, 0.0, out=d2)
        K = np.exp(-d2 / (2.0 * spec.sigma**2))
        np.fill_diagonal(K, 1.0)
    else:
        norms = np.linalg.norm(X, axis=1)
        if np.any(norms == 0.0):
            raise InvalidInputError("cosine kernel is undefined for zero rows")
        K = G / np.outer(norms, norms)
    upper = np.triu(K)
    return upper + np.triu(K, 1).T


def kernel_input_gradient(spec: KernelSpec, H, G) -> np.ndarray:
    """Gradient of Tr(G K(H)) with respect to the rows of H.

    Closed forms: linear gives (G + G^T) H; rbf row i collects
    sum_k 2 G_ik K_ik (h_k - h_i) / sigma^2. G must be symmetric.
    """
    if spec.kind not in DIFFERENTIABLE_KINDS:
        raise UnsupportedGradientError(
            f"{spec.kind} kernel has no input gradient; use linear or rbf"
        )
    H = _as_matrix(H, "H")
    G = _as_matrix(G, "G")
    n = H.shape[0]
    if G.shape != (n, n):
        raise InvalidInputError(f"G must be {n} x {n}, got {G.shape}")
    scale = max(1.0, float(np.max(np.abs(G))))
    if np.max(np.abs(G - G.T)) > 1e-8 * scale:
        raise InvalidInputError("G must be symmetric")
    if spec.kind == "linear":
        return (G + G.T) @ H
    K = kernel_matrix(spec, H)
    W = G * K
    return (2.0 / spec.sigma**2) * (W @ H - W.sum(axis=1)[:, None] * H)


def median_pairwise_distance(X, max_rows: int = 1500) -> float:
    """Median Euclidean distance between distinct rows, a bandwidth helper.

    Opt-in only; kernels never fall back to it silently. For more than
    ``max_rows`` rows the median is taken over an evenly strided subsample
    so the cost stays bounded and deterministic.
    """
    X = _as_matrix(X, "X")
    n = X.shape[0]
    if n > max_rows:
        X = X[:: int(np.ceil(n / max_rows))]
        n = X.shape[0]
    if n < 2:
        raise InvalidInputError("need at least two rows for a pairwise distance")
    sq = np.einsum("ij,ij->i", X, X)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    vals = np.sqrt(d2[np.triu_indices(n, k=1)])
    return float(np.median(vals))
