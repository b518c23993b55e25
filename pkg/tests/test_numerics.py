"""Tests for deterministic reductions and the small structured solves."""

import math
import time

import numpy as np
import pytest

from xlmimo.errors import NearSingularError
from xlmimo.numerics import (
    MAX_CONDITION,
    cdot,
    compensated_sum,
    gram,
    hermitian_solve,
    project_orthogonal,
    vector_power,
    whitened_apply,
)


def complex_randn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestReductions:
    def test_compensated_sum_is_exact(self):
        values = np.array([1e16, 1.0, -1e16] * 1000)
        assert compensated_sum(values) == 1000.0

    def test_cdot_conjugate_symmetry(self):
        rng = np.random.default_rng(0)
        x = complex_randn(rng, 64)
        y = complex_randn(rng, 64)
        assert cdot(x, y) == pytest.approx(np.conj(cdot(y, x)), rel=1e-15)

    def test_vector_power_matches_cdot(self):
        rng = np.random.default_rng(1)
        x = complex_randn(rng, 33)
        assert vector_power(x) == pytest.approx(cdot(x, x).real, rel=1e-15)


class TestGram:
    def test_single_unit_column(self):
        a = np.array([[0.6], [0.8j]])
        assert gram(a) == pytest.approx(np.array([[1.0]]), rel=1e-15)

    def test_orthonormal_columns(self):
        a = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], dtype=complex)
        assert gram(a) == pytest.approx(np.eye(2))

    def test_matches_naive_triple_loop(self):
        rng = np.random.default_rng(2)
        a = complex_randn(rng, 50, 3)
        naive = np.zeros((3, 3), dtype=complex)
        for i in range(3):
            for j in range(3):
                for row in range(50):
                    naive[i, j] += np.conj(a[row, i]) * a[row, j]
        assert gram(a) == pytest.approx(naive, rel=1e-12)

    def test_result_is_hermitian_psd(self):
        rng = np.random.default_rng(3)
        a = complex_randn(rng, 40, 5)
        g = gram(a)
        assert np.allclose(g, g.conj().T)
        assert np.linalg.eigvalsh(g).min() >= -1e-10

    def test_rejects_wide_matrices(self):
        with pytest.raises(ValueError):
            gram(np.ones((2, 3), dtype=complex))


class TestHermitianSolve:
    def test_identity(self):
        b = np.array([1.0 + 2j, -3.0])
        assert hermitian_solve(np.eye(2), b) == pytest.approx(b)

    def test_diagonal(self):
        h = np.diag([1.0, 2.0]).astype(complex)
        x = hermitian_solve(h, np.array([2.0, 2.0]))
        assert x == pytest.approx(np.array([2.0, 1.0]))

    def test_random_pd_residual(self):
        rng = np.random.default_rng(4)
        g = complex_randn(rng, 12, 6)
        h = gram(g) + np.eye(6)
        b = complex_randn(rng, 6, 2)
        x = hermitian_solve(h, b)
        assert np.linalg.norm(h @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_empty_system(self):
        assert hermitian_solve(np.zeros((0, 0)), np.zeros((0,))).shape == (0,)

    def test_rejects_non_hermitian(self):
        h = np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex)
        with pytest.raises(ValueError, match="Hermitian"):
            hermitian_solve(h, np.ones(2))

    def test_singular_raises_with_condition_estimate(self):
        col = np.array([1.0, 1.0j, 0.5])
        h = gram(np.column_stack([col, col]))
        with pytest.raises(NearSingularError) as excinfo:
            hermitian_solve(h, np.ones(2))
        assert excinfo.value.cond_estimate > MAX_CONDITION


class TestProjectOrthogonal:
    def test_standard_basis_column(self):
        abar = np.zeros((4, 1), dtype=complex)
        abar[0, 0] = 1.0
        x = np.array([1.0, 1.0, 0.0, 0.0], dtype=complex)
        assert project_orthogonal(abar, x) == pytest.approx(
            np.array([0.0, 1.0, 0.0, 0.0])
        )

    def test_already_orthogonal_is_unchanged(self):
        rng = np.random.default_rng(5)
        abar = complex_randn(rng, 30, 3)
        x = complex_randn(rng, 30)
        x = project_orthogonal(abar, x)
        again = project_orthogonal(abar, x)
        assert np.linalg.norm(again - x) <= 1e-12 * np.linalg.norm(x)

    def test_orthogonality_residuals(self):
        rng = np.random.default_rng(6)
        abar = complex_randn(rng, 200, 4)
        x = complex_randn(rng, 200)
        out = project_orthogonal(abar, x)
        norm_x = math.sqrt(vector_power(x))
        for j in range(4):
            assert abs(cdot(abar[:, j], out)) <= 1e-10 * norm_x * np.linalg.norm(abar[:, j])

    def test_no_interferers_returns_copy(self):
        x = np.array([1.0 + 1j, 2.0])
        out = project_orthogonal(np.zeros((2, 0), dtype=complex), x)
        assert np.array_equal(out, x)
        assert out is not x

    def test_rank_deficient_columns_raise(self):
        rng = np.random.default_rng(7)
        col = complex_randn(rng, 20)
        abar = np.column_stack([col, 2.0 * col])
        with pytest.raises(NearSingularError):
            project_orthogonal(abar, complex_randn(rng, 20))


class TestWhitenedApply:
    def test_no_interferers_is_identity(self):
        x = np.array([1.0, 2.0 - 1j])
        assert np.array_equal(whitened_apply(np.zeros((2, 0)), [], x), x)

    def test_single_unit_interferer_halves_its_direction(self):
        abar = np.zeros((5, 1), dtype=complex)
        abar[0, 0] = 1.0
        x = abar[:, 0].copy()
        assert whitened_apply(abar, [1.0], x) == pytest.approx(x / 2.0)

    def test_matrix_free_residual(self):
        rng = np.random.default_rng(8)
        abar = complex_randn(rng, 500, 9)
        weights = rng.uniform(0.1, 10.0, size=9)
        x = complex_randn(rng, 500)
        out = whitened_apply(abar, weights, x)
        # apply C = I + sum_i w_i a_i a_i^H without forming it
        back = out + (abar * (weights * np.array([cdot(abar[:, j], out) for j in range(9)]))).sum(axis=1)
        assert np.linalg.norm(back - x) <= 1e-9 * np.linalg.norm(x)

    def test_vanishing_weights_approach_identity(self):
        rng = np.random.default_rng(9)
        abar = complex_randn(rng, 50, 3)
        abar /= np.linalg.norm(abar, axis=0)
        x = complex_randn(rng, 50)
        out = whitened_apply(abar, [1e-12] * 3, x)
        assert np.linalg.norm(out - x) <= 1e-9 * np.linalg.norm(x)

    def test_rejects_bad_weights(self):
        abar = np.ones((3, 1), dtype=complex)
        with pytest.raises(ValueError):
            whitened_apply(abar, [0.0], np.ones(3))
        with pytest.raises(ValueError):
            whitened_apply(abar, [-1.0], np.ones(3))


class TestDenseEquivalence:
    """Structured paths match explicit dense projector / inverse constructions."""

    def test_projection_matches_dense(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            m = rng.integers(8, 65)
            n = rng.integers(1, 8)
            abar = complex_randn(rng, m, n)
            x = complex_randn(rng, m)
            dense = np.eye(m) - abar @ np.linalg.inv(abar.conj().T @ abar) @ abar.conj().T
            assert project_orthogonal(abar, x) == pytest.approx(dense @ x, rel=1e-9, abs=1e-9)

    def test_whitening_matches_dense_inverse(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            m = rng.integers(8, 65)
            n = rng.integers(1, 8)
            abar = complex_randn(rng, m, n)
            weights = rng.uniform(0.05, 20.0, size=n)
            x = complex_randn(rng, m)
            cov = np.eye(m) + (abar * weights) @ abar.conj().T
            assert whitened_apply(abar, weights, x) == pytest.approx(
                np.linalg.inv(cov) @ x, rel=1e-9, abs=1e-9
            )


class TestCost:
    def test_large_apply_runs_in_seconds(self):
        rng = np.random.default_rng(12)
        abar = complex_randn(rng, 40_000, 9)
        x = complex_randn(rng, 40_000)
        start = time.perf_counter()
        whitened_apply(abar, np.full(9, 2.0), x)
        project_orthogonal(abar, x)
        assert time.perf_counter() - start < 5.0
