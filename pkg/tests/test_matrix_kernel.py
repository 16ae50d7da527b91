import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sdof_lab.errors import InfeasibleDesignError, InvalidInputError, SingularChannelError
from sdof_lab.matrix_kernel import (
    DEFAULT_TOL,
    Tolerance,
    block_diag,
    condition_number,
    nullity,
    nullspace_basis,
    nullspace_subset,
    pseudo_inverse_row,
    rank,
    subspace_residual,
)


def test_tolerance_bounds():
    Tolerance(1e-12, 1e-3)
    for bad in (0.0, -1e-9, 1e-2, 0.5):
        with pytest.raises(InvalidInputError):
            Tolerance(rank_rel_tol=bad)
        with pytest.raises(InvalidInputError):
            Tolerance(residual_abs_tol=bad)


class TestRank:
    def test_identity(self):
        assert rank(np.eye(3)) == 3

    def test_zero(self):
        assert rank(np.zeros((2, 2))) == 0

    def test_rank_two_factors(self):
        # the construction itself is the oracle: 4x2 @ 2x6 has rank 2
        rng = np.random.default_rng(3)
        A = rng.standard_normal((4, 2)) @ rng.standard_normal((2, 6))
        assert rank(A) == 2

    def test_empty(self):
        assert rank(np.zeros((0, 4))) == 0

    @pytest.mark.parametrize("bad", [[[np.nan, 1.0]], [[np.inf]], [1.0, 2.0]])
    def test_rejects_bad_input(self, bad):
        with pytest.raises(InvalidInputError):
            rank(bad)


class TestNullspace:
    def test_coordinate_kernel(self):
        B = nullspace_basis(np.array([[1.0, 0.0]]))
        assert B.shape == (2, 1)
        assert abs(B[0, 0]) < 1e-15
        assert abs(abs(B[1, 0]) - 1.0) < 1e-15

    def test_identity_has_trivial_kernel(self):
        assert nullspace_basis(np.eye(2)).shape == (2, 0)

    def test_random_full_row_rank(self):
        A = np.random.default_rng(5).standard_normal((3, 5))
        B = nullspace_basis(A)
        assert B.shape == (5, 2)
        assert np.max(np.abs(A @ B)) <= 1e-10
        assert np.max(np.abs(B.T @ B - np.eye(2))) <= 1e-10

    def test_zero_row_matrix_kernel_is_everything(self):
        assert np.array_equal(nullspace_basis(np.zeros((0, 3))), np.eye(3))

    @given(st.integers(1, 7), st.integers(1, 7), st.integers(0, 7), st.integers(0, 2**31))
    def test_rank_nullity(self, r, c, k, seed):
        rng = np.random.default_rng(seed)
        k = min(k, r, c)
        A = rng.standard_normal((r, k)) @ rng.standard_normal((k, c))
        B = nullspace_basis(A)
        assert rank(A) + B.shape[1] == c
        if B.shape[1]:
            assert np.max(np.abs(B.T @ B - np.eye(B.shape[1]))) <= 1e-10
            assert np.max(np.abs(A @ B)) <= 1e-9 * max(1.0, np.abs(A).max())


class TestNullspaceSubset:
    def test_full_subset_spans_kernel(self):
        A = np.random.default_rng(1).standard_normal((2, 5))
        S = nullspace_subset(A, 3, rng_seed=0)
        B = nullspace_basis(A)
        # same span: projecting S onto span(B) loses nothing
        assert np.max(np.abs(B @ (B.T @ S) - S)) <= 1e-12
        assert rank(S) == 3

    def test_zero_columns(self):
        assert nullspace_subset(np.eye(3)[:1], 0, 0).shape == (3, 0)

    def test_unit_vector_orthogonal_to_e1(self):
        v = nullspace_subset(np.array([[1.0, 0.0, 0.0]]), 1, rng_seed=9)
        assert v.shape == (3, 1)
        assert abs(float(v[:, 0] @ np.array([1.0, 0.0, 0.0]))) <= 1e-15
        assert abs(np.linalg.norm(v) - 1.0) <= 1e-12

    def test_too_many_columns(self):
        with pytest.raises(InfeasibleDesignError, match="nullity"):
            nullspace_subset(np.eye(3)[:2], 2, 0)

    def test_seeded(self):
        A = np.random.default_rng(2).standard_normal((1, 4))
        assert np.array_equal(nullspace_subset(A, 2, 11), nullspace_subset(A, 2, 11))


class TestPseudoInverse:
    def test_identity(self):
        assert np.allclose(pseudo_inverse_row(np.eye(3)), np.eye(3))

    def test_scalar_row(self):
        M = pseudo_inverse_row(np.array([[2.0, 0.0]]))
        assert np.allclose(M, [[0.5], [0.0]])

    def test_random_many(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(1000):
            k = rng.integers(1, 5)
            n = rng.integers(k, 7)
            G = rng.uniform(-1, 1, (k, n))
            worst = max(worst, subspace_residual(G @ pseudo_inverse_row(G), np.eye(k)))
        assert worst <= DEFAULT_TOL.residual_abs_tol

    def test_rank_deficient(self):
        with pytest.raises(SingularChannelError):
            pseudo_inverse_row(np.array([[1.0, 2.0], [2.0, 4.0]]))

    def test_wide_required(self):
        with pytest.raises(SingularChannelError):
            pseudo_inverse_row(np.ones((3, 2)))

    def test_empty_rows(self):
        assert pseudo_inverse_row(np.zeros((0, 3))).shape == (3, 0)


def test_subspace_residual():
    A = np.arange(6.0).reshape(2, 3)
    assert subspace_residual(A, A) == 0.0
    B = np.full((2, 3), 0.25)
    assert subspace_residual(B, B + 1e-12) <= 1e-12
    with pytest.raises(InvalidInputError):
        subspace_residual(A, A.T)
    assert subspace_residual(np.zeros((3, 0)), np.zeros((3, 0))) == 0.0


def test_condition_and_block_diag():
    assert condition_number(np.diag([4.0, 2.0])) == pytest.approx(2.0)
    assert condition_number(np.zeros((2, 2))) == float("inf")
    D = block_diag([np.ones((1, 2)), np.zeros((0, 1)), 2 * np.ones((2, 1))])
    assert D.shape == (3, 4)
    assert D[0, :2].tolist() == [1.0, 1.0]
    assert D[1:, 3].tolist() == [2.0, 2.0]
    assert nullity(np.ones((1, 3))) == 2
