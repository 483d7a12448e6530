"""Stiefel manifold operations for N x s feature matrices with H^T H = I.

Projection onto the manifold is the polar factor computed via compact SVD:
for M = U diag(sigma) V^T the nearest orthonormal-column matrix in Frobenius
norm is U V^T whenever M has full column rank.
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import InvalidInputError, RankDeficiencyWarning

# Repo-wide feasibility tolerance on ||H^T H - I||_F.
FEASIBILITY_TOL = 1e-8

# Singular values below this are treated as zero (rank deficiency).
_RANK_TOL = 1e-12


def _check_shape(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-d, got shape {M.shape}")
    n, s = M.shape
    if s < 1 or n < s:
        raise InvalidInputError(
            f"{name} must be tall (rows >= cols >= 1), got shape {M.shape}"
        )
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return M


def _fix_signs(U: np.ndarray, cols: np.ndarray) -> None:
    """Flip the given columns of U so each one's largest-|entry| is positive.

    Ties on |entry| break toward the lowest row index (argmax). In-place.
    """
    for j in cols:
        col = U[:, j]
        lead = np.argmax(np.abs(col))
        if col[lead] < 0:
            U[:, j] = -col


def project_stiefel(M) -> np.ndarray:
    """Nearest matrix with orthonormal columns, via the polar factor U V^T.

    Rank-deficient inputs still return a feasible point: the SVD basis
    completes the missing directions, a deterministic sign convention pins
    the otherwise arbitrary signs, and a RankDeficiencyWarning is issued
    because the completion is not unique.
    """
    M = _check_shape(M, "M")
    U, sigma, Vt = np.linalg.svd(M, full_matrices=False)
    deficient = np.nonzero(sigma < _RANK_TOL)[0]
    if deficient.size:
        V = Vt.T.copy()
        _fix_signs(U, deficient)
        _fix_signs(V, deficient)
        Vt = V.T
        warnings.warn(
            f"input has column rank {sigma.size - deficient.size} < {sigma.size}; "
            "projection completed with a deterministic basis",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    return U @ Vt


def is_on_stiefel(H, tol: float = FEASIBILITY_TOL) -> bool:
    """True when ||H^T H - I||_F <= tol."""
    H = _check_shape(H, "H")
    return feasibility_error(H) <= tol


def feasibility_error(H) -> float:
    """Frobenius distance of H^T H from the identity."""
    H = np.asarray(H, dtype=np.float64)
    s = H.shape[1]
    return float(np.linalg.norm(H.T @ H - np.eye(s)))


def random_stiefel(n: int, s: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an n x s matrix with orthonormal columns from a Gaussian seed.

    Projecting a standard normal matrix gives the uniform (Haar) point; the
    Gaussian is almost surely full rank so no warning path is hit.
    """
    if n < s or s < 1:
        raise InvalidInputError(f"need n >= s >= 1, got n={n}, s={s}")
    return project_stiefel(rng.standard_normal((n, s)))


def tangent_project(H, G) -> np.ndarray:
    """Project an ambient gradient G onto the tangent space at H.

    P(G) = G - H sym(H^T G) with sym(A) = (A + A^T)/2. The norm of this
    projection is the right stationarity measure on the manifold: the plain
    Euclidean gradient does not vanish at constrained optima.
    """
    H = _check_shape(H, "H")
    G = np.asarray(G, dtype=np.float64)
    if G.shape != H.shape:
        raise InvalidInputError(f"G shape {G.shape} != H shape {H.shape}")
    A = H.T @ G
    return G - H @ ((A + A.T) / 2.0)
