"""Tests for the compact SVD, minimum-norm solve, and row-space projector."""

import numpy as np
import pytest

from noisesep.linalg import (
    RangeViolationError,
    as_matrix,
    as_vector,
    make_rng,
    min_norm_solve,
    project_row_space,
    svd_compact,
)


def test_svd_identity_all_unit_singular_values():
    d = svd_compact(np.eye(7))
    assert d.sigma.shape == (7,)
    np.testing.assert_allclose(d.sigma, np.ones(7))


def test_svd_diagonal_matrix_sorted_absolute_entries():
    a = np.diag([3.0, -5.0, 0.5, 2.0])
    d = svd_compact(a)
    np.testing.assert_allclose(d.sigma, [5.0, 3.0, 2.0, 0.5])


def test_svd_rank_one_outer_product():
    rng = make_rng(11)
    a = rng.standard_normal(6)
    b = rng.standard_normal(9)
    d = svd_compact(np.outer(a, b))
    assert d.sigma.shape == (1,)
    np.testing.assert_allclose(
        d.sigma[0], np.linalg.norm(a) * np.linalg.norm(b), rtol=1e-12)


def test_svd_reconstruction_and_orthonormal_factors():
    rng = make_rng(3)
    for trial in range(12):
        n = int(rng.integers(1, 12))
        p = int(rng.integers(1, 12))
        a = rng.standard_normal((n, p))
        d = svd_compact(a)
        r = d.sigma.size
        assert d.u.shape == (n, r) and d.v.shape == (p, r)
        np.testing.assert_allclose(d.u @ np.diag(d.sigma) @ d.v.T, a,
                                   atol=1e-10)
        np.testing.assert_allclose(d.u.T @ d.u, np.eye(r), atol=1e-10)
        np.testing.assert_allclose(d.v.T @ d.v, np.eye(r), atol=1e-10)
        assert np.all(np.diff(d.sigma) <= 0)
        assert np.all(d.sigma > 0)


def test_svd_drops_tiny_singular_values():
    # rank-1 plus noise far below the tolerance collapses back to rank 1
    rng = make_rng(4)
    a = np.outer(rng.standard_normal(5), rng.standard_normal(8))
    a = a + 1e-14 * rng.standard_normal((5, 8))
    assert svd_compact(a, rank_tolerance=1e-8).sigma.size == 1


def test_min_norm_underdetermined_hand_case():
    # x1 + x2 = 2 has minimum-norm solution (1, 1)
    theta = min_norm_solve(np.array([[1.0, 1.0]]), np.array([2.0]))
    np.testing.assert_allclose(theta, [1.0, 1.0], atol=1e-12)


def test_min_norm_never_longer_than_any_witness():
    rng = make_rng(8)
    for trial in range(10):
        n, p, r = 10, 16, 4
        j = (rng.standard_normal((n, r)) @ rng.standard_normal((r, p)))
        x = rng.standard_normal(p)
        b = j @ x
        theta = min_norm_solve(j, b)
        np.testing.assert_allclose(j @ theta, b, atol=1e-8)
        assert np.linalg.norm(theta) <= np.linalg.norm(x) + 1e-10


def test_min_norm_matches_pseudoinverse():
    rng = make_rng(21)
    j = rng.standard_normal((5, 9))
    b = j @ rng.standard_normal(9)
    np.testing.assert_allclose(min_norm_solve(j, b),
                               np.linalg.pinv(j) @ b, atol=1e-9)


def test_min_norm_rejects_infeasible_target():
    # rank-1 matrix cannot reach a vector outside its column span
    j = np.outer(np.array([1.0, 0.0]), np.array([1.0, 2.0]))
    with pytest.raises(RangeViolationError):
        min_norm_solve(j, np.array([0.0, 1.0]))


def test_projector_idempotent_and_inside_row_space():
    rng = make_rng(5)
    for trial in range(10):
        n, p, r = 8, 14, 3
        j = rng.standard_normal((n, r)) @ rng.standard_normal((r, p))
        x = rng.standard_normal(p)
        px = project_row_space(j, x)
        np.testing.assert_allclose(project_row_space(j, px), px, atol=1e-12)
        # projection is in the span of the rows: J-consistent component only
        np.testing.assert_allclose(j @ px, j @ x, atol=1e-9)
        # residual is orthogonal to every row
        np.testing.assert_allclose(j @ (x - px), np.zeros(n), atol=1e-9)


def test_projector_identity_when_rows_span_everything():
    rng = make_rng(6)
    j = rng.standard_normal((9, 6))  # full column rank, row space = R^6
    x = rng.standard_normal(6)
    np.testing.assert_allclose(project_row_space(j, x), x, atol=1e-10)


def test_as_matrix_and_as_vector_reject_bad_shapes():
    with pytest.raises(ValueError):
        as_matrix([1.0, 2.0])
    with pytest.raises(ValueError):
        as_vector([[1.0], [2.0]])
    a = as_matrix([[1, 2], [3, 4]])
    assert a.dtype == np.float64 and a.shape == (2, 2)
    x = as_vector([1, 2, 3])
    assert x.dtype == np.float64 and x.shape == (3,)


def test_make_rng_reproducible():
    a = make_rng(42).standard_normal(5)
    b = make_rng(42).standard_normal(5)
    np.testing.assert_array_equal(a, b)
