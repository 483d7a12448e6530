"""KPCA eigensolver oracle, dual LSSVM system, and the standalone MLP."""

import numpy as np
import pytest

from drkm.errors import InvalidInputError, NumericalFailureError
from drkm.kernels import KernelSpec, kernel_matrix
from drkm.baselines import (
    kpca_eigen,
    lssvm_dual_train,
    mlp_baseline_train,
)


def random_psd(rng, n):
    A = rng.standard_normal((n, n))
    return A @ A.T


def test_diag_example():
    res = kpca_eigen(np.diag([2.0, 1.0]), eta=1.0, s=1)
    assert np.allclose(res.Lambda, [2.0])
    assert np.allclose(np.abs(res.H[:, 0]), [1.0, 0.0])
    assert res.H[0, 0] > 0


def test_identity_example():
    res = kpca_eigen(np.eye(3), eta=2.0, s=3)
    assert np.allclose(res.Lambda, 0.5)


def test_eigen_against_full_decomposition():
    rng = np.random.default_rng(0)
    for _ in range(10):
        n = int(rng.integers(3, 12))
        s = int(rng.integers(1, n + 1))
        eta = float(rng.uniform(0.2, 3.0))
        K = random_psd(rng, n)
        res = kpca_eigen(K, eta, s)
        # residual of the eigen equation
        assert np.linalg.norm(K / eta @ res.H - res.H * res.Lambda) <= 1e-8
        # orthonormal columns
        assert np.linalg.norm(res.H.T @ res.H - np.eye(s)) <= 1e-10
        # spectrum matches numpy's full solve
        full = np.linalg.eigvalsh(K / eta)[::-1]
        assert np.max(np.abs(res.Lambda - full[:s])) <= 1e-10
        assert np.all(np.diff(res.Lambda) <= 1e-12)
        # sign convention
        for j in range(s):
            lead = np.argmax(np.abs(res.H[:, j]))
            assert res.H[lead, j] > 0


def test_eigen_optimality_bridge():
    """-(1/(2 eta)) Tr(H^T K H) at the eigenbasis equals the eigenvalue mass."""
    rng = np.random.default_rng(1)
    K = random_psd(rng, 9)
    for s, eta in ((1, 1.0), (3, 0.7), (9, 2.5)):
        res = kpca_eigen(K, eta, s)
        lhs = -np.trace(res.H.T @ (K / eta) @ res.H) / 2.0
        rhs = -np.sum(res.Lambda) / 2.0
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


def test_eigen_validation():
    with pytest.raises(InvalidInputError):
        kpca_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0, 1)
    with pytest.raises(InvalidInputError):
        kpca_eigen(np.eye(3), 1.0, 4)
    with pytest.raises(InvalidInputError):
        kpca_eigen(np.eye(3), -1.0, 1)


def test_lssvm_two_symmetric_points():
    X = np.array([[1.0, 0.0], [-1.0, 0.0]])
    y = np.array([1.0, -1.0])
    model = lssvm_dual_train(X, y, gamma=10.0, kernel=KernelSpec("rbf", 1.0))
    assert abs(model.b) < 1e-10
    assert model.alpha[0] == pytest.approx(model.alpha[1], rel=1e-10)
    assert model.predict(np.array([0.9, 0.1])) == 1.0
    assert model.predict(np.array([-0.9, 0.1])) == -1.0


def test_lssvm_separable_blobs():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((10, 2)) * 0.2 + np.array([3.0, 0.0])
    b = rng.standard_normal((10, 2)) * 0.2 + np.array([-3.0, 0.0])
    X = np.vstack([a, b])
    y = np.concatenate([np.ones(10), -np.ones(10)])
    model = lssvm_dual_train(X, y, gamma=100.0, kernel=KernelSpec("rbf", 2.0))
    preds = np.array([model.predict(x) for x in X])
    assert np.all(preds == y)
    assert np.array_equal(np.sign(model.decision_batch(X)), y)


def test_lssvm_residual_on_random_instances():
    rng = np.random.default_rng(3)
    for _ in range(5):
        n = int(rng.integers(5, 25))
        X = rng.standard_normal((n, 3))
        y = rng.choice([-1.0, 1.0], size=n)
        if np.all(y == y[0]):
            y[0] = -y[0]
        gamma = float(rng.uniform(0.1, 50.0))
        model = lssvm_dual_train(X, y, gamma, KernelSpec("rbf", 1.5))
        omega = np.outer(y, y) * kernel_matrix(KernelSpec("rbf", 1.5), X)
        A = np.zeros((n + 1, n + 1))
        A[0, 1:] = y
        A[1:, 0] = y
        A[1:, 1:] = omega + np.eye(n) / gamma
        sol = np.concatenate([[model.b], model.alpha])
        rhs = np.concatenate([[0.0], np.ones(n)])
        assert np.linalg.norm(A @ sol - rhs) / np.linalg.norm(rhs) <= 1e-8


def test_lssvm_singular_system_raises():
    # duplicated points with one label each make the system singular as gamma -> inf
    X = np.zeros((4, 2))
    y = np.array([1.0, 1.0, -1.0, -1.0])
    with pytest.raises(NumericalFailureError) as exc:
        lssvm_dual_train(X, y, gamma=1e18, kernel=KernelSpec("linear"))
    assert "condition" in str(exc.value)


def test_lssvm_label_validation():
    with pytest.raises(InvalidInputError):
        lssvm_dual_train(np.eye(2), np.array([0.0, 1.0]), 1.0, KernelSpec("linear"))
    with pytest.raises(InvalidInputError):
        lssvm_dual_train(np.eye(2), np.array([1.0, -1.0]), -2.0, KernelSpec("linear"))


def test_mlp_first_step_decreases_loss():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((20, 3))
    y = rng.integers(0, 2, size=20)
    model = mlp_baseline_train(X, y, n_steps=2, seed=0)
    assert model.loss_trace[1] <= model.loss_trace[0] + 1e-12


def test_mlp_learns_xor():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    model = mlp_baseline_train(X, y, n_steps=2000, lr=0.05, seed=1, eta=1e-8)
    assert np.array_equal(model.predict(X), y)


def test_mlp_seed_determinism():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((15, 4))
    y = rng.integers(0, 3, size=15)
    a = mlp_baseline_train(X, y, n_steps=50, seed=9)
    b = mlp_baseline_train(X, y, n_steps=50, seed=9)
    assert np.array_equal(a.head.w1, b.head.w1)
    assert np.array_equal(a.head.w2, b.head.w2)
    assert a.loss_trace == b.loss_trace
