"""Kernel evaluation, Gram assembly, and the Tr(G K(H)) input gradient."""

import numpy as np
import pytest

from drkm.errors import InvalidInputError, UnsupportedGradientError
from drkm.kernels import (
    KernelSpec,
    eval_kernel,
    kernel_input_gradient,
    kernel_matrix,
    median_pairwise_distance,
)


def entrywise_matrix(spec, X):
    n = X.shape[0]
    K = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            K[i, j] = eval_kernel(spec, X[i], X[j])
    return K


def fd_input_gradient(spec, H, G, step=1e-5):
    """Central-difference oracle for d Tr(G K(H)) / dH."""
    out = np.empty_like(H)
    for i in range(H.shape[0]):
        for j in range(H.shape[1]):
            hp = H.copy()
            hm = H.copy()
            hp[i, j] += step
            hm[i, j] -= step
            fp = np.trace(G @ kernel_matrix(spec, hp))
            fm = np.trace(G @ kernel_matrix(spec, hm))
            out[i, j] = (fp - fm) / (2.0 * step)
    return out


def test_known_values():
    assert eval_kernel(KernelSpec("rbf", 1.0), [0.0], [2.0]) == pytest.approx(
        np.exp(-2.0), rel=1e-12
    )
    assert eval_kernel(KernelSpec("linear"), [1.0, 0.0], [0.0, 1.0]) == 0.0
    assert eval_kernel(KernelSpec("cosine"), [2.0, 0.0], [5.0, 0.0]) == pytest.approx(1.0)
    assert eval_kernel(KernelSpec("rbf", 0.7), [1.0, 2.0], [1.0, 2.0]) == 1.0


def test_spec_validation():
    with pytest.raises(InvalidInputError):
        KernelSpec("poly")
    with pytest.raises(InvalidInputError):
        KernelSpec("rbf")
    with pytest.raises(InvalidInputError):
        KernelSpec("rbf", -1.0)
    # sigma is ignored for non-rbf kinds
    KernelSpec("linear", None)


def test_eval_kernel_input_checks():
    spec = KernelSpec("linear")
    with pytest.raises(InvalidInputError):
        eval_kernel(spec, [1.0, 2.0], [1.0])
    with pytest.raises(InvalidInputError):
        eval_kernel(spec, [[1.0]], [1.0])
    with pytest.raises(InvalidInputError):
        eval_kernel(spec, [np.nan], [1.0])
    with pytest.raises(InvalidInputError):
        eval_kernel(KernelSpec("cosine"), [0.0, 0.0], [1.0, 0.0])


@pytest.mark.parametrize(
    "spec",
    [KernelSpec("linear"), KernelSpec("rbf", 0.9), KernelSpec("cosine")],
    ids=["linear", "rbf", "cosine"],
)
def test_matrix_matches_entrywise_oracle(spec):
    rng = np.random.default_rng(3)
    X = rng.standard_normal((8, 4)) + 0.5
    K = kernel_matrix(spec, X)
    ref = entrywise_matrix(spec, X)
    assert np.max(np.abs(K - ref)) < 1e-10
    assert np.max(np.abs(K - K.T)) <= 1e-12
    # PSD families stay PSD up to roundoff
    assert np.linalg.eigvalsh(K).min() >= -1e-8


def test_matrix_diagonal_dominance():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((12, 3))
    for spec in (KernelSpec("rbf", 1.3), KernelSpec("cosine")):
        K = kernel_matrix(spec, X)
        assert np.allclose(np.diag(K), 1.0, atol=1e-12)
        assert np.max(np.abs(K)) <= 1.0 + 1e-12
    K = kernel_matrix(KernelSpec("rbf", 1e-3), X)
    assert np.all(np.diag(K) == 1.0)


def test_matrix_row_block_identical():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((17, 6))
    for spec in (KernelSpec("linear"), KernelSpec("rbf", 2.0)):
        full = kernel_matrix(spec, X)
        for block in (1, 4, 16, 17, 100):
            blocked = kernel_matrix(spec, X, row_block=block)
            # different BLAS paths may differ in the last bits only
            assert np.max(np.abs(full - blocked)) < 1e-12
            # fixed block size is bitwise reproducible
            assert np.array_equal(blocked, kernel_matrix(spec, X, row_block=block))


@pytest.mark.parametrize("kind,sigma", [("linear", None), ("rbf", 0.8)])
def test_input_gradient_matches_finite_differences(kind, sigma):
    rng = np.random.default_rng(11)
    spec = KernelSpec(kind, sigma)
    for _ in range(6):
        n, s = int(rng.integers(2, 10)), int(rng.integers(1, 5))
        H = rng.standard_normal((n, s))
        A = rng.standard_normal((n, n))
        G = (A + A.T) / 2.0
        grad = kernel_input_gradient(spec, H, G)
        ref = fd_input_gradient(spec, H, G)
        denom = max(np.max(np.abs(ref)), 1e-12)
        assert np.max(np.abs(grad - ref)) / denom < 1e-5


def test_input_gradient_linear_closed_form():
    rng = np.random.default_rng(12)
    H = rng.standard_normal((6, 3))
    A = rng.standard_normal((6, 6))
    G = A + A.T
    assert np.allclose(kernel_input_gradient(KernelSpec("linear"), H, G), 2.0 * G @ H)


def test_input_gradient_rejects_cosine_and_bad_g():
    H = np.eye(3)
    G = np.eye(3)
    with pytest.raises(UnsupportedGradientError):
        kernel_input_gradient(KernelSpec("cosine"), H, G)
    bad = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    with pytest.raises(InvalidInputError):
        kernel_input_gradient(KernelSpec("linear"), H, bad)
    with pytest.raises(InvalidInputError):
        kernel_input_gradient(KernelSpec("linear"), H, np.eye(4))


def test_median_pairwise_distance():
    X = np.array([[0.0], [1.0], [3.0]])
    # distances 1, 3, 2 -> median 2
    assert median_pairwise_distance(X) == pytest.approx(2.0)
    with pytest.raises(InvalidInputError):
        median_pairwise_distance(np.ones((1, 2)))
    rng = np.random.default_rng(6)
    big = rng.standard_normal((4000, 3))
    sub = median_pairwise_distance(big)
    assert sub == median_pairwise_distance(big)  # deterministic
    assert 1.0 < sub < 4.0
