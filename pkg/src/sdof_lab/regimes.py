"""Closed-form sum s.d.o.f., the two converse bounds, and regime bookkeeping.

Everything here is exact integer / ``Fraction`` arithmetic so boundary
comparisons (K = N/2, K = 4N/3, ...) never depend on rounding.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidInputError


class RegimeClass(enum.Enum):
    R1 = "R1"  # K <= N/2
    R2 = "R2"  # N/2 <= K <= N
    R3 = "R3"  # N <= K <= 4N/3
    R4 = "R4"  # 4N/3 <= K <= 3N/2
    R5 = "R5"  # 3N/2 <= K <= 2N
    DEGENERATE = "Degenerate"  # K >= 2N

    def __str__(self):
        return self.value


def _check(N, K):
    if int(N) != N or int(K) != K:
        raise InvalidInputError(f"N and K must be integers, got {N!r}, {K!r}")
    if N < 1 or K < 0:
        raise InvalidInputError(f"need N >= 1 and K >= 0, got N={N}, K={K}")
    return int(N), int(K)


def sum_sdof(N: int, K: int) -> Fraction:
    """Optimal sum s.d.o.f. of the two-user MIMO MAC wiretap channel."""
    N, K = _check(N, K)
    if 2 * K <= N:
        return Fraction(N)
    if K <= N:
        return Fraction(2 * (2 * N - K), 3)
    if 3 * K <= 4 * N:
        return Fraction(2 * N, 3)
    if K <= 2 * N:
        return Fraction(2 * N - K)
    return Fraction(0)


def cooperative_bound(N: int, K: int) -> Fraction:
    """``min((2N - K)^+, N)``: the transmitters pooled into one 2N-antenna node."""
    N, K = _check(N, K)
    return Fraction(min(max(2 * N - K, 0), N))


def distributed_bound(N: int, K: int) -> Fraction:
    """``max(2/3 (2N - K), 2/3 N)``."""
    N, K = _check(N, K)
    return max(Fraction(2 * (2 * N - K), 3), Fraction(2 * N, 3))


def classify_regime(N: int, K: int) -> RegimeClass:
    """Regime whose closed interval contains K.

    Shared endpoints go to the lower-index regime, except K = N, which is
    assigned to R3 (the N <= K <= 4N/3 construction; N = K = 2 is the
    canonical 2x2x2x2 system).
    """
    N, K = _check(N, K)
    if 2 * K <= N:
        return RegimeClass.R1
    if K < N:
        return RegimeClass.R2
    if 3 * K <= 4 * N:
        return RegimeClass.R3
    if 2 * K <= 3 * N:
        return RegimeClass.R4
    if K <= 2 * N:
        return RegimeClass.R5
    return RegimeClass.DEGENERATE


@dataclass(frozen=True)
class StreamBudget:
    """Symbol counts of one block of a scheme.

    ``n1``/``n2`` are secure information symbols per transmitter, ``nB`` the
    block length in slots, ``jam1``/``jam2`` the artificial-noise symbols.
    """

    n1: int
    n2: int
    nB: int
    jam1: int = 0
    jam2: int = 0

    @property
    def sdof(self) -> Fraction:
        return Fraction(self.n1 + self.n2, self.nB)


def stream_budget(N: int, K: int, regime: RegimeClass | None = None) -> StreamBudget:
    """Per-regime ``(n1, n2, nB)`` and jamming counts.

    ``regime`` overrides the default classification; it must contain K.
    """
    N, K = _check(N, K)
    regime = classify_regime(N, K) if regime is None else regime
    if not regime_contains(regime, N, K):
        raise InvalidInputError(f"K={K} is outside regime {regime} for N={N}")
    if regime is RegimeClass.R1:
        return StreamBudget(N - K, K, 1)
    if regime is RegimeClass.R2:
        j = 2 * K - N
        return StreamBudget(2 * N - K, 2 * N - K, 3, j, j)
    if regime is RegimeClass.R3:
        return StreamBudget(N, N, 3, N, N)
    if regime is RegimeClass.R4:
        s = 3 * N - 2 * K
        return StreamBudget(K - N, s, 1, s, (3 * K - 4 * N) + s)
    if regime is RegimeClass.R5:
        return StreamBudget(2 * N - K, 0, 1, 0, 2 * N - K)
    return StreamBudget(0, 0, 1)


def regime_contains(regime: RegimeClass, N: int, K: int) -> bool:
    """Closed-interval membership (ignores the tie-break)."""
    if regime is RegimeClass.R1:
        return 2 * K <= N
    if regime is RegimeClass.R2:
        return N <= 2 * K and K <= N
    if regime is RegimeClass.R3:
        return N <= K and 3 * K <= 4 * N
    if regime is RegimeClass.R4:
        return 4 * N <= 3 * K and 2 * K <= 3 * N
    if regime is RegimeClass.R5:
        return 3 * N <= 2 * K and K <= 2 * N
    return K >= 2 * N


def fraction_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def regime_table(N: int, k_max: int) -> list[dict]:
    """Rows for K = 0..k_max, as emitted by ``sdof-lab regimes``."""
    rows = []
    for K in range(k_max + 1):
        ds = sum_sdof(N, K)
        rows.append({
            "N": N,
            "K": K,
            "regime": str(classify_regime(N, K)),
            "d_s": fraction_str(ds),
            "d_s_num": ds.numerator,
            "d_s_den": ds.denominator,
            "coop_bound": fraction_str(cooperative_bound(N, K)),
            "dist_bound": fraction_str(distributed_bound(N, K)),
        })
    return rows
