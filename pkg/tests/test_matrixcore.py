import math

import numpy as np
import pytest

from curvadion.exceptions import DimensionError, RankDeficiencyError
from curvadion.matrixcore import (
    column_normalize,
    frobenius_norm,
    matmul,
    orthonormalize_columns,
    random_orthonormal,
)


def test_frobenius_zero_and_identity():
    assert frobenius_norm(np.zeros((3, 3))) == 0.0
    assert frobenius_norm(np.eye(2)) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_frobenius_matches_double_loop():
    a = np.random.default_rng(7).standard_normal((8, 6))
    total = 0.0
    for i in range(8):
        for j in range(6):
            total += a[i, j] ** 2
    assert frobenius_norm(a) == pytest.approx(math.sqrt(total), abs=1e-12)


def test_frobenius_rejects_vectors():
    with pytest.raises(DimensionError):
        frobenius_norm(np.ones(3))


def test_matmul_identity_and_rank_one():
    b = np.random.default_rng(0).standard_normal((3, 5))
    assert np.array_equal(matmul(np.eye(3), b), b)
    e1 = np.array([[1.0], [0.0]])
    assert np.array_equal(matmul(e1 @ e1.T, e1), e1)


def test_matmul_matches_triple_loop(rng):
    a = rng.standard_normal((5, 4))
    b = rng.standard_normal((4, 3))
    oracle = np.zeros((5, 3))
    for i in range(5):
        for j in range(3):
            for k in range(4):
                oracle[i, j] += a[i, k] * b[k, j]
    assert np.allclose(matmul(a, b), oracle, rtol=0, atol=1e-12)


def test_matmul_error_names_both_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(4, 2\)"):
        matmul(np.ones((2, 3)), np.ones((4, 2)))


def test_orthonormalize_identity_slice_unchanged():
    a = np.eye(5)[:, :3]
    assert np.allclose(orthonormalize_columns(a), a, atol=1e-15)


def test_orthonormalize_single_column():
    p = orthonormalize_columns(np.array([[3.0], [4.0]]))
    assert np.allclose(p, [[0.6], [0.8]], atol=1e-15)


def test_orthonormalize_properties():
    a = np.random.default_rng(11).standard_normal((16, 4))
    p = orthonormalize_columns(a)
    assert np.max(np.abs(p.T @ p - np.eye(4))) <= 1e-10
    assert np.linalg.norm(p @ p.T @ a - a) <= 1e-8 * np.linalg.norm(a)


def test_orthonormalize_is_idempotent():
    for seed in range(5):
        p = orthonormalize_columns(np.random.default_rng(seed).standard_normal((12, 5)))
        assert np.max(np.abs(orthonormalize_columns(p) - p)) <= 1e-12


@pytest.mark.parametrize("c", [-3.5, -1.0, 0.0, 1e-3, 2.0, 1e6])
def test_frobenius_is_absolutely_homogeneous(c):
    a = np.random.default_rng(7).standard_normal((8, 6))
    assert frobenius_norm(c * a) == pytest.approx(abs(c) * frobenius_norm(a), rel=1e-14, abs=0.0)


def test_orthonormalize_does_not_modify_input():
    a = np.random.default_rng(3).standard_normal((6, 2))
    before = a.copy()
    orthonormalize_columns(a)
    assert np.array_equal(a, before)


def test_orthonormalize_reports_deficient_column():
    a = np.random.default_rng(5).standard_normal((6, 3))
    a[:, 2] = 2.0 * a[:, 0] - a[:, 1]
    with pytest.raises(RankDeficiencyError) as info:
        orthonormalize_columns(a)
    assert info.value.column == 2


def test_orthonormalize_wide_matrix_rejected():
    with pytest.raises(DimensionError):
        orthonormalize_columns(np.ones((2, 3)))


def test_column_normalize_examples(rng):
    assert np.allclose(column_normalize(np.array([[3.0], [4.0]])), [[0.6], [0.8]], atol=1e-15)
    unit = np.eye(4)[:, :2]
    assert np.allclose(column_normalize(unit), unit, atol=1e-15)
    normed = column_normalize(rng.standard_normal((6, 3)))
    assert np.allclose(np.linalg.norm(normed, axis=0), 1.0, atol=1e-12)


def test_column_normalize_zero_column():
    a = np.ones((3, 2))
    a[:, 1] = 0.0
    with pytest.raises(RankDeficiencyError) as info:
        column_normalize(a)
    assert info.value.column == 1
    assert info.value.operation == "column_normalize"


def test_random_orthonormal_scalar_case():
    q = random_orthonormal(1, 1, seed=0)
    assert q.shape == (1, 1)
    assert abs(q[0, 0]) == pytest.approx(1.0)


def test_random_orthonormal_deterministic():
    assert np.array_equal(random_orthonormal(8, 3, 42), random_orthonormal(8, 3, 42))
    assert not np.array_equal(random_orthonormal(8, 3, 42), random_orthonormal(8, 3, 43))


def test_random_orthonormal_is_orthonormal():
    q = random_orthonormal(8, 3, 42)
    assert np.allclose(q.T @ q, np.eye(3), atol=1e-12)


@pytest.mark.parametrize("m, r", [(2, 3), (4, 0)])
def test_random_orthonormal_bad_shapes(m, r):
    with pytest.raises(DimensionError):
        random_orthonormal(m, r, 0)
