"""Polar projection onto the Stiefel manifold and tangent-space projection."""

import numpy as np
import pytest

from drkm.errors import InvalidInputError, RankDeficiencyWarning
from drkm.stiefel import (
    FEASIBILITY_TOL,
    feasibility_error,
    is_on_stiefel,
    project_stiefel,
    random_stiefel,
    tangent_project,
)


def test_projection_is_feasible_and_idempotent():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n, s = int(rng.integers(2, 30)), 0
        s = int(rng.integers(1, n + 1))
        M = rng.standard_normal((n, s)) * 10.0 ** rng.integers(-3, 4)
        H = project_stiefel(M)
        assert feasibility_error(H) <= FEASIBILITY_TOL
        assert is_on_stiefel(H)
        assert np.max(np.abs(project_stiefel(H) - H)) < 1e-10


def test_projection_fixes_orthonormal_input():
    rng = np.random.default_rng(1)
    Q = random_stiefel(12, 5, rng)
    assert np.max(np.abs(project_stiefel(Q) - Q)) < 1e-8


def test_square_projection_is_orthogonal():
    rng = np.random.default_rng(2)
    H = project_stiefel(rng.standard_normal((6, 6)))
    assert abs(abs(np.linalg.det(H)) - 1.0) < 1e-10


def test_projection_minimizes_frobenius_distance():
    """Randomized oracle: no sampled feasible point is closer than U V^T."""
    rng = np.random.default_rng(3)
    M = rng.standard_normal((7, 3))
    H = project_stiefel(M)
    best = np.linalg.norm(M - H)
    for _ in range(1000):
        Q = random_stiefel(7, 3, rng)
        assert np.linalg.norm(M - Q) >= best - 1e-12


def test_rank_deficient_input_warns_and_is_deterministic():
    M = np.zeros((5, 3))
    M[:, 0] = [1.0, 2.0, 0.0, 0.0, 0.0]
    with pytest.warns(RankDeficiencyWarning):
        H1 = project_stiefel(M)
    with pytest.warns(RankDeficiencyWarning):
        H2 = project_stiefel(M.copy())
    assert np.array_equal(H1, H2)
    assert feasibility_error(H1) <= FEASIBILITY_TOL
    # the surviving direction is kept: column spans include M's column
    coeff = np.linalg.lstsq(H1, M[:, 0], rcond=None)[0]
    assert np.linalg.norm(H1 @ coeff - M[:, 0]) < 1e-10


def test_all_zero_input_still_projects():
    with pytest.warns(RankDeficiencyWarning):
        H = project_stiefel(np.zeros((4, 2)))
    assert is_on_stiefel(H)
    assert np.array_equal(H, project_stiefel_again(np.zeros((4, 2))))


def project_stiefel_again(M):
    with pytest.warns(RankDeficiencyWarning):
        return project_stiefel(M)


def test_shape_and_finiteness_checks():
    with pytest.raises(InvalidInputError):
        project_stiefel(np.ones((2, 3)))  # wide
    with pytest.raises(InvalidInputError):
        project_stiefel(np.ones(3))
    with pytest.raises(InvalidInputError):
        project_stiefel(np.array([[np.inf], [1.0]]))
    with pytest.raises(InvalidInputError):
        random_stiefel(2, 3, np.random.default_rng(0))


def test_random_stiefel_seeded_determinism():
    a = random_stiefel(9, 4, np.random.default_rng(42))
    b = random_stiefel(9, 4, np.random.default_rng(42))
    assert np.array_equal(a, b)
    c = random_stiefel(9, 4, np.random.default_rng(43))
    assert not np.array_equal(a, c)


def test_tangent_project_properties():
    rng = np.random.default_rng(7)
    H = random_stiefel(10, 3, rng)
    G = rng.standard_normal((10, 3))
    T = tangent_project(H, G)
    # tangency: H^T T + T^T H = 0
    A = H.T @ T
    assert np.max(np.abs(A + A.T)) < 1e-10
    # idempotence and orthogonality of the split
    assert np.max(np.abs(tangent_project(H, T) - T)) < 1e-10
    assert abs(np.sum((G - T) * T)) < 1e-8
    with pytest.raises(InvalidInputError):
        tangent_project(H, G[:, :2])


def test_tangent_project_vanishes_on_normal_component():
    rng = np.random.default_rng(8)
    H = random_stiefel(8, 3, rng)
    S = rng.standard_normal((3, 3))
    S = S + S.T
    # H S with symmetric S is a normal direction
    assert np.max(np.abs(tangent_project(H, H @ S))) < 1e-10
