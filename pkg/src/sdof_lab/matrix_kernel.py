"""Real-matrix primitives: rank, nullspaces, right inverses, residuals.

Every precoder construction in the package goes through these helpers,
so the numerical cutoffs live here in one place (`Tolerance`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleDesignError, InvalidInputError, SingularChannelError


@dataclass(frozen=True)
class Tolerance:
    """Numerical cutoffs.

    Parameters
    ----------
    rank_rel_tol : float
        Singular values at or below ``rank_rel_tol * s_max`` count as zero.
    residual_abs_tol : float
        Max-abs residual accepted for an equality between two matrices.
    """

    rank_rel_tol: float = 1e-10
    residual_abs_tol: float = 1e-9

    def __post_init__(self):
        for name in ("rank_rel_tol", "residual_abs_tol"):
            v = getattr(self, name)
            if not (0.0 < v < 1e-2):
                raise InvalidInputError(f"{name} must lie in (0, 1e-2), got {v!r}")


DEFAULT_TOL = Tolerance()


def as_matrix(A) -> np.ndarray:
    """Coerce to a finite 2-D float array (0-row / 0-column shapes allowed)."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidInputError(f"expected a 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    return A


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def singular_values(A) -> np.ndarray:
    A = as_matrix(A)
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def rank(A, tol: Tolerance = DEFAULT_TOL) -> int:
    """Number of singular values above ``tol.rank_rel_tol`` times the largest."""
    s = singular_values(A)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol.rank_rel_tol * s[0]))


def nullspace_basis(A, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ``{x : A x = 0}`` as columns.

    Uses the right singular vectors belonging to the (numerically) zero
    singular values. A trivial nullspace gives an ``n x 0`` matrix.
    """
    A = as_matrix(A)
    n = A.shape[1]
    if A.shape[0] == 0 or n == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    r = 0 if s[0] == 0.0 else int(np.sum(s > tol.rank_rel_tol * s[0]))
    return vt[r:].T.copy()


def nullity(A, tol: Tolerance = DEFAULT_TOL) -> int:
    return nullspace_basis(A, tol).shape[1]


def nullspace_subset(A, c: int, rng_seed=None, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``c`` random, linearly independent vectors from the nullspace of ``A``.

    The nullspace basis is mixed with a seeded Gaussian matrix and the
    result re-orthonormalized, so the columns are a random orthonormal
    frame of a random ``c``-dimensional subspace of ker(A).
    """
    basis = nullspace_basis(A, tol)
    k = basis.shape[1]
    if c < 0:
        raise InvalidInputError(f"column count must be >= 0, got {c}")
    if c > k:
        raise InfeasibleDesignError(
            f"requested {c} nullspace vectors but nullity is {k} (need c <= nullity)"
        )
    if c == 0:
        return np.zeros((basis.shape[0], 0))
    mix = _rng(rng_seed).standard_normal((k, c))
    q, _ = np.linalg.qr(basis @ mix)
    return q


def pseudo_inverse_row(G, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Right inverse ``G^T (G G^T)^{-1}`` of a full-row-rank ``K x N`` matrix."""
    G = as_matrix(G)
    k, n = G.shape
    if k == 0:
        return np.zeros((n, 0))
    if k > n or rank(G, tol) < k:
        raise SingularChannelError(f"{k}x{n} matrix does not have full row rank")
    return G.T @ np.linalg.solve(G @ G.T, np.eye(k))


def subspace_residual(A, B) -> float:
    """Max-abs entry of ``A - B``; 0 for empty matrices."""
    A = as_matrix(A)
    B = as_matrix(B)
    if A.shape != B.shape:
        raise InvalidInputError(f"shape mismatch {A.shape} vs {B.shape}")
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(A - B)))


def condition_number(A) -> float:
    s = singular_values(A)
    if s.size == 0:
        return 1.0
    if s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def block_diag(mats) -> np.ndarray:
    """Block-diagonal stack of 2-D arrays (shapes may include zero sizes)."""
    mats = [np.asarray(m, dtype=float) for m in mats]
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols))
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out
