"""Fixed-gain schemes mixing Gaussian and PAM (real-alignment) signaling.

In the middle regimes (N/2 <= K <= 4N/3) the sum s.d.o.f. is
``2(d + l/3)``. Each transmitter sends ``d`` Gaussian streams with the
same alignment structure as the fading schemes plus ``l`` PAM streams.
A receive filter ``D`` removes every Gaussian stream and leaves an
``l``-antenna MAC wiretap channel for the PAM part:

* ``l = 1``: the scalar real-alignment scheme, 3 rational dimensions;
* ``l = 2``: the 2x2x2x2 scheme, PAM symbols modulated on monomials
  ``a^r1 b^r2`` of the filtered cross gains.

Decoding of the PAM part is brute-force nearest-point search over the
integer lattice spanned by the rational dimensions of one filtered
antenna.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .errors import DesignVerificationError, DeskScaleLimitError, InvalidInputError, PowerTooLowError, SingularChannelError, WrongRegimeError
from .gaussian_schemes import (
    AlignmentPair,
    GroupLayout,
    StreamGroup,
    _solve,
    lambda_matrix,
    power_scale,
    verify_alignment,
)
from .matrix_kernel import (
    DEFAULT_TOL,
    Tolerance,
    condition_number,
    nullspace_basis,
    nullspace_subset,
    pseudo_inverse_row,
    rank,
    subspace_residual,
)
from .regimes import RegimeClass, classify_regime

HYPOTHESIS_BUDGET = 10**7
JOINT_AUTO_LIMIT = 10**5  # "auto" decoding switches to per-antenna above this
MAX_REDRAWS = 100


# ------------------------------------------------------------------ PAM

@dataclass(frozen=True)
class PamConfig:
    """PAM constellation ``a * {-Q, ..., Q}`` plus alignment parameters."""

    a: float
    Q: int
    delta: float = 0.05
    gamma: float = 1.0
    m: int = 1
    Gamma: int = 2

    @property
    def M(self) -> int:
        return self.m ** self.Gamma

    @property
    def M_S(self) -> int:
        return 2 * self.m ** 2 + (self.m + 1) ** 2

    @property
    def points(self) -> np.ndarray:
        return pam_points(self)


def pam_points(cfg: PamConfig) -> np.ndarray:
    if cfg.Q < 0:
        raise InvalidInputError(f"Q must be >= 0, got {cfg.Q}")
    return cfg.a * np.arange(-cfg.Q, cfg.Q + 1, dtype=float)


def pam_params(P: float, delta: float, gamma: float, M_S: int) -> tuple[int, float]:
    """``Q = floor(P^((1-delta) / (2 (M_S + delta))))`` and ``a = gamma sqrt(P) / Q``."""
    if not P > 1:
        raise InvalidInputError(f"P must exceed 1, got {P}")
    if not 0 < delta <= 1:
        raise InvalidInputError(f"delta must lie in (0, 1], got {delta}")
    q_real = P ** ((1.0 - delta) / (2.0 * (M_S + delta)))
    # guard against x.9999999 from the power
    Q = int(math.floor(q_real * (1.0 + 1e-9)))
    if Q < 1:
        raise PowerTooLowError(f"P={P} gives Q={q_real:.3g} < 1")
    return Q, gamma * math.sqrt(P) / Q


def exact_pam_leakage(Q, streams: int = 1):
    """``streams * (H(v + u) - H(u))`` in bits for v, u i.i.d. uniform on ``{-Q..Q}``.

    The sum has the triangular law ``(n - |k|) / n^2`` with ``n = 2Q + 1``.
    Accepts a scalar or an array of ``Q`` values.
    """
    Qa = np.asarray(Q, dtype=np.int64)
    if np.any(Qa < 0):
        raise InvalidInputError("Q must be >= 0")
    n = 2 * Qa + 1
    nmax = int(n.max()) if n.size else 1
    j = np.arange(1, nmax, dtype=float)
    # S[n] = sum_{j=1}^{n-1} j log2 j
    S = np.concatenate([[0.0, 0.0], np.cumsum(j * np.log2(j))])
    nf = n.astype(float)
    h_sum = 2 * np.log2(nf) - (nf * np.log2(nf) + 2 * S[n]) / nf ** 2
    out = streams * (h_sum - np.log2(nf))
    out = np.maximum(out, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def leakage_bound(Q, streams: int = 1):
    """``streams * (log2(4Q + 1) - log2(2Q + 1))``."""
    Qa = np.asarray(Q, dtype=float)
    return streams * (np.log2(4 * Qa + 1) - np.log2(2 * Qa + 1))


# ------------------------------------------------------------ monomials

@dataclass(frozen=True)
class MonomialBasis:
    a: float
    b: float
    m: int
    exponents: tuple
    values: np.ndarray
    extended_exponents: tuple
    extended_values: np.ndarray


def _monomials(a, b, top):
    exps = tuple(itertools.product(range(top), repeat=2))
    return exps, np.array([a ** r1 * b ** r2 for r1, r2 in exps], dtype=float)


def monomial_basis(Aeff, Beff, m: int, antenna: int) -> MonomialBasis:
    """Monomials ``a_ii^r1 b_ii^r2`` with ``r in {0..m-1}^2`` (and ``{0..m}^2``)."""
    if m < 1:
        raise InvalidInputError(f"m must be >= 1, got {m}")
    k = antenna - 1
    a = float(np.asarray(Aeff)[k, k])
    b = float(np.asarray(Beff)[k, k])
    if a == 0.0 or b == 0.0:
        raise SingularChannelError(f"zero diagonal gain at antenna {antenna}")
    exps, vals = _monomials(a, b, m)
    eexps, evals = _monomials(a, b, m + 1)
    return MonomialBasis(a, b, m, exps, vals, eexps, evals)


def pairwise_distinct(values, rel_gap: float = 1e-12) -> bool:
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size < 2:
        return True
    scale = max(float(np.max(np.abs(v))), 1e-300)
    return bool(np.min(np.diff(v)) > rel_gap * scale)


def dimension_ratio(m: int):
    """Desired share ``2m^2 / (2m^2 + (m+1)^2)`` of one receive antenna, exact."""
    from fractions import Fraction
    return Fraction(2 * m * m, 2 * m * m + (m + 1) ** 2)


# ------------------------------------------------------------- budgets

@dataclass(frozen=True)
class SplitBudget:
    d: int
    l: int


def split_budget(N: int, K: int) -> SplitBudget:
    """Gaussian/PAM split ``(d, l)`` of the per-transmitter streams."""
    if N <= 2 * K and K <= N:
        return SplitBudget(*divmod(2 * K - N, 3))
    if N <= K and 3 * K <= 4 * N:
        return SplitBudget(*divmod(N, 3))
    raise WrongRegimeError(f"(N={N}, K={K}) is outside N/2 <= K <= 4N/3")


# --------------------------------------------------------------- design

@dataclass
class StructuredDesign:
    """Single-slot fixed-gain design: Gaussian part, PAM part, receive filter.

    ``precoders`` holds ``P1, P2, Q`` (``N x (d+l)``; the last ``l`` columns
    carry PAM) and, in regime R2, ``Gperp1, Gperp2``. ``F``, ``B``, ``D``,
    ``E`` are the filter matrices; ``gains`` are the filtered cross gains
    ``D H_i P_i^(2)`` (``l x l`` each) that the monomial bases come from.
    """

    regime: RegimeClass
    N: int
    K: int
    d: int
    l: int
    m: int
    delta: float
    precoders: dict
    F: np.ndarray
    B: np.ndarray
    D: np.ndarray
    E: np.ndarray
    gains: tuple
    channel: ChannelSet
    alpha: float = 1.0
    gamma: float = 1.0
    seed: int | None = None
    bases: list = field(default_factory=list)
    slots: int = 1

    @property
    def M(self) -> int:
        return self.m ** 2 if self.l == 2 else 1

    @property
    def M_S(self) -> int:
        """Rational dimensions per filtered antenna."""
        if self.l == 2:
            return 2 * self.m ** 2 + (self.m + 1) ** 2
        return 3

    @property
    def pam_streams(self) -> int:
        """PAM information symbols per channel use, both transmitters."""
        return 2 * self.l * self.M

    def t_block(self) -> np.ndarray:
        """``l x (l M)`` block-diagonal matrix of monomial row vectors."""
        if self.l == 0:
            return np.zeros((0, 0))
        if self.l == 1:
            return np.ones((1, 1))
        M = self.M
        T = np.zeros((2, 2 * M))
        T[0, :M] = self.bases[0].values
        T[1, M:] = self.bases[1].values
        return T

    def pam_config(self, P: float, Q: int | None = None) -> PamConfig:
        if Q is None:
            Q, a = pam_params(P, self.delta, self.gamma, self.M_S)
        else:
            if Q < 1:
                raise InvalidInputError("Q must be >= 1")
            a = self.gamma * math.sqrt(P) / Q
        return PamConfig(a=a, Q=int(Q), delta=self.delta, gamma=self.gamma, m=self.m)

    def layout(self, chs) -> GroupLayout:
        chs = [chs] if isinstance(chs, ChannelSet) else list(chs)
        if len(chs) != 1:
            raise InvalidInputError("structured designs span a single slot")
        return _structured_layout(self, chs[0])

    def gaussian_ft(self, ch: ChannelSet) -> np.ndarray:
        """Columns annihilated by the filter: every Gaussian receive direction."""
        pre, d = self.precoders, self.d
        cols = []
        if self.regime is RegimeClass.R2:
            cols += [ch.H1 @ pre["Gperp1"], ch.H2 @ pre["Gperp2"]]
        cols += [ch.H1 @ pre["P1"][:, :d], ch.H2 @ pre["P2"][:, :d], pre["Q"][:, :d]]
        return np.hstack(cols)

    def decode_matrix(self, chs) -> np.ndarray:
        ch = chs[0] if not isinstance(chs, ChannelSet) else chs
        return np.hstack([self.gaussian_ft(ch), np.asarray(self.precoders["Q"])[:, self.d:]])


def _structured_layout(s: StructuredDesign, ch: ChannelSet) -> GroupLayout:
    pre, d = s.precoders, s.d
    P1, P2, Q = (np.asarray(pre[k], dtype=float) for k in ("P1", "P2", "Q"))
    groups, shielded = [], []
    if s.regime is RegimeClass.R2:
        for i in (1, 2):
            groups.append(StreamGroup(f"vt{i}", i, "info", (np.asarray(pre[f"Gperp{i}"], dtype=float),)))
            shielded.append(f"vt{i}")
    U1, U2 = _solve(ch.H1, Q), _solve(ch.H2, Q)
    groups += [
        StreamGroup("v1g", 1, "info", (P1[:, :d],)),
        StreamGroup("v2g", 2, "info", (P2[:, :d],)),
        StreamGroup("u1g", 1, "jam", (U1[:, :d],)),
        StreamGroup("u2g", 2, "jam", (U2[:, :d],)),
    ]
    pairs = [
        AlignmentPair("v1g", "u2g", "G1P1 = G2H2^-1Q (gaussian)"),
        AlignmentPair("v2g", "u1g", "G2P2 = G1H1^-1Q (gaussian)"),
    ]
    merged = [("u1g", "u2g")]
    if s.l:
        T = s.t_block()
        groups += [
            StreamGroup("v1p", 1, "info", (P1[:, d:] @ T,), "pam"),
            StreamGroup("v2p", 2, "info", (P2[:, d:] @ T,), "pam"),
            StreamGroup("u1p", 1, "jam", (U1[:, d:] @ T,), "pam"),
            StreamGroup("u2p", 2, "jam", (U2[:, d:] @ T,), "pam"),
        ]
        pairs += [
            AlignmentPair("v1p", "u2p", "G1P1 = G2H2^-1Q (pam)"),
            AlignmentPair("v2p", "u1p", "G2P2 = G1H1^-1Q (pam)"),
        ]
        merged.append(("u1p", "u2p"))
    return GroupLayout(groups, pairs=pairs, shielded=shielded, rx_merged=merged)


def _filters(ft: np.ndarray, Q2: np.ndarray, N: int, l: int, tol: Tolerance):
    F = ft.T
    B = nullspace_basis(F, tol) if F.shape[0] else np.eye(N)
    if B.shape[1] != l:
        raise SingularChannelError(f"filter nullspace has {B.shape[1]} columns, expected {l}")
    BtQ = B.T @ Q2
    if l and condition_number(BtQ) > 1e8:
        return None
    D = np.linalg.solve(BtQ, B.T) if l else np.zeros((0, N))
    E = np.vstack([D, np.hstack([np.eye(N - l), np.zeros((N - l, l))])])
    return F, B, D, E


def _build(regime, ch, d, l, pre, m, delta, seed, tol) -> StructuredDesign:
    N, K = ch.N, ch.K
    empty = np.zeros((0, N))
    proto = StructuredDesign(regime, N, K, d, l, m, delta, pre, empty, np.zeros((N, 0)),
                             empty, np.eye(N), (), ch, seed=seed)
    ft = proto.gaussian_ft(ch)
    Q2 = np.asarray(pre["Q"])[:, d:]
    got = _filters(ft, Q2, N, l, tol)
    if got is None:
        return None
    proto.F, proto.B, proto.D, proto.E = got
    if l:
        D = proto.D
        A1 = D @ ch.H1 @ np.asarray(pre["P1"])[:, d:]
        A2 = D @ ch.H2 @ np.asarray(pre["P2"])[:, d:]
        proto.gains = (A1, A2)
        if l == 2:
            proto.bases = [monomial_basis(A1, A2, m, 1), monomial_basis(A1, A2, m, 2)]
    lay = proto.layout([ch])
    proto.alpha = power_scale(lay, 1, share=0.5, signaling="gaussian")
    worst = 1.0 / power_scale(lay, 1, share=1.0, signaling="pam") if l else 0.0
    proto.gamma = 1.0 / math.sqrt(2.0 * worst) if l else 1.0
    return proto


def _certify(design: StructuredDesign, tol: Tolerance) -> StructuredDesign:
    rep = verify_structured(design, tol=tol)
    if not rep.passed:
        raise DesignVerificationError(f"structured design failed certification: {rep.failures}")
    return design


def design_2222(ch: ChannelSet, m: int = 1, delta: float = 0.05, tol: Tolerance = DEFAULT_TOL,
                regime: RegimeClass = RegimeClass.R3) -> StructuredDesign:
    """Asymptotic real alignment for N = K = 2.

    Transmitter i precodes its information with ``G_i^{-1} G_j H_j^{-1}``
    and its jamming with ``H_i^{-1}``, so at the eavesdropper every
    information symbol lands on a jamming symbol of the other user.
    """
    if ch.N != 2 or ch.K != 2:
        raise WrongRegimeError("design_2222 needs N = K = 2")
    return _reduced(ch, 0, 2, m, delta, tol, regime)


def _reduced(ch, d, l, m, delta, tol, regime):
    """The ``N = l`` case: no Gaussian part, Q = I, D = E = I."""
    N = ch.N
    Q = np.eye(N)
    pre = {"Q": Q}
    for i, j in ((1, 2), (2, 1)):
        pre[f"P{i}"] = pseudo_inverse_row(ch.G(i), tol) @ ch.G(j) @ _solve(ch.H(j), Q)
    if regime is RegimeClass.R2:
        pre["Gperp1"] = np.zeros((N, 0))
        pre["Gperp2"] = np.zeros((N, 0))
    des = _build(regime, ch, d, l, pre, m, delta, None, tol)
    if des is None:
        raise SingularChannelError("B^T Q^(2) is singular")
    return _certify(des, tol)


def design_fixed_r2(ch: ChannelSet, m: int = 1, delta: float = 0.05, seed=None,
                    tol: Tolerance = DEFAULT_TOL) -> StructuredDesign:
    """Fixed gains, N/2 <= K <= N: nullspace streams + aligned Gaussian + PAM."""
    N, K = ch.N, ch.K
    if not (N <= 2 * K and K <= N):
        raise WrongRegimeError(f"(N={N}, K={K}) is outside N/2 <= K <= N")
    sb = split_budget(N, K)
    d, l = sb.d, sb.l
    if N == l:
        return _reduced(ch, d, l, m, delta, tol, RegimeClass.R2)
    rng = np.random.default_rng(seed)
    gp = {}
    for i in (1, 2):
        gp[f"Gperp{i}"] = nullspace_basis(ch.G(i), tol)
        if gp[f"Gperp{i}"].shape[1] != N - K:
            raise SingularChannelError(f"G{i} nullity mismatch")
    for _ in range(MAX_REDRAWS):
        Q, _r = np.linalg.qr(rng.standard_normal((N, d + l)))
        pre = dict(gp, Q=Q)
        for i, j in ((1, 2), (2, 1)):
            pre[f"P{i}"] = pseudo_inverse_row(ch.G(i), tol) @ ch.G(j) @ _solve(ch.H(j), Q)
        des = _build(RegimeClass.R2, ch, d, l, pre, m, delta, seed, tol)
        if des is not None:
            return _certify(des, tol)
    raise SingularChannelError(f"B^T Q^(2) singular after {MAX_REDRAWS} redraws")


def design_fixed_r3(ch: ChannelSet, m: int = 1, delta: float = 0.05, seed=None,
                    tol: Tolerance = DEFAULT_TOL) -> StructuredDesign:
    """Fixed gains, N <= K <= 4N/3: single-slot Psi-nullspace Gaussian + PAM."""
    N, K = ch.N, ch.K
    if not (N <= K and 3 * K <= 4 * N):
        raise WrongRegimeError(f"(N={N}, K={K}) is outside N <= K <= 4N/3")
    sb = split_budget(N, K)
    d, l = sb.d, sb.l
    if N == l:
        return _reduced(ch, d, l, m, delta, tol, RegimeClass.R3)
    rng = np.random.default_rng(seed)
    Lam = lambda_matrix(ch)
    for _ in range(MAX_REDRAWS):
        W = nullspace_subset(Lam, d + l, rng, tol)
        pre = {"P1": W[:N], "P2": W[N:2 * N], "Q": W[2 * N:]}
        des = _build(RegimeClass.R3, ch, d, l, pre, m, delta, seed, tol)
        if des is not None:
            return _certify(des, tol)
    raise SingularChannelError(f"B^T Q^(2) singular after {MAX_REDRAWS} redraws")


def design_fixed(ch: ChannelSet, m: int = 1, delta: float = 0.05, seed=None,
                 tol: Tolerance = DEFAULT_TOL) -> StructuredDesign:
    regime = classify_regime(ch.N, ch.K)
    if regime is RegimeClass.R2:
        return design_fixed_r2(ch, m, delta, seed, tol)
    if regime is RegimeClass.R3:
        return design_fixed_r3(ch, m, delta, seed, tol)
    raise WrongRegimeError(f"no structured scheme for regime {regime}")


# ----------------------------------------------------------- verification

@dataclass
class StructuredReport:
    residuals: dict
    checks: dict
    tol: float

    @property
    def failures(self) -> list:
        bad = [k for k, v in self.residuals.items() if not v <= self.tol]
        return bad + [k for k, ok in self.checks.items() if not ok]

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


def verify_structured(design: StructuredDesign, ch: ChannelSet | None = None,
                      tol: Tolerance = DEFAULT_TOL) -> StructuredReport:
    """Filter identities, filtered-form match, pairing and rational distinctness."""
    ch = design.channel if ch is None else ch
    res = dict(verify_alignment(design, [ch], tol).residuals)
    checks = {}
    l, d, N = design.l, design.d, design.N
    pre = design.precoders
    ft = design.gaussian_ft(ch)
    checks["decode matrix full rank"] = rank(design.decode_matrix([ch]), tol) == N
    checks["gaussian part decodable"] = rank(ft, tol) == ft.shape[1] == N - l
    if l:
        Q2 = np.asarray(pre["Q"])[:, d:]
        res["F B = 0"] = float(np.max(np.abs(ft.T @ design.B))) if ft.size else 0.0
        res["F matches"] = subspace_residual(design.F, ft.T) if design.F.shape == ft.T.shape else math.inf
        res["D Q2 = I"] = subspace_residual(design.D @ Q2, np.eye(l))
        E = np.vstack([design.D, np.hstack([np.eye(N - l), np.zeros((N - l, l))])])
        res["E layout"] = subspace_residual(design.E, E) if design.E.shape == E.shape else math.inf
        checks["E invertible"] = rank(design.E, tol) == N
        A1 = design.D @ ch.H1 @ np.asarray(pre["P1"])[:, d:]
        A2 = design.D @ ch.H2 @ np.asarray(pre["P2"])[:, d:]
        if len(design.gains) == 2:
            res["filtered gain 1"] = subspace_residual(design.gains[0], A1)
            res["filtered gain 2"] = subspace_residual(design.gains[1], A2)
        else:
            res["filtered gains"] = math.inf
        scale = 1.0 + float(np.max(np.abs(design.D @ ch.H1))) + float(np.max(np.abs(design.D @ ch.H2)))
        res["filtered form"] = _filtered_form_residual(design, ch) / scale
        checks["rational dimensions distinct"] = all(
            pairwise_distinct(_antenna_dims(design, k)[0]) for k in range(l)
        )
    return StructuredReport(res, checks, tol.residual_abs_tol)


def _filtered_form_residual(design, ch) -> float:
    """Max deviation of ``D Y`` from ``A1 S(v1) + A2 S(v2) + S(u1 + u2)``."""
    lay = design.layout([ch])
    T = design.t_block()
    A1, A2 = design.gains if len(design.gains) == 2 else (np.full((design.l,) * 2, np.nan),) * 2
    want = {"v1p": A1 @ T, "v2p": A2 @ T, "u1p": T, "u2p": T}
    worst = 0.0
    for g in lay.groups:
        got = design.D @ ch.H(g.tx) @ g.maps[0]
        target = want.get(g.name, np.zeros_like(got))
        if got.size:
            worst = max(worst, float(np.max(np.abs(got - target))))
    return worst


# --------------------------------------------------------------- decoding

def _antenna_dims(design: StructuredDesign, k: int):
    """Gains, half-ranges (in units of Q) and desired labels at filtered antenna k.

    Half-ranges are returned as multiples of Q: 1 for a single PAM symbol,
    2 for a jamming sum, and so on; interference dimensions of the 2x2x2x2
    layout may collect several symbols.
    """
    A1, A2 = design.gains
    if design.l == 1:
        return (np.array([A1[0, 0], A2[0, 0], 1.0]), np.array([1, 1, 2]),
                [("v1", 0, 0), ("v2", 0, 0), None])
    m = design.m
    j = 1 - k
    tj = design.bases[j].values
    gains, mult, labels = [], [], []
    for r in range(len(tj)):
        gains.append(A1[k, j] * tj[r]); mult.append(1); labels.append(("v1", j, r))
        gains.append(A2[k, j] * tj[r]); mult.append(1); labels.append(("v2", j, r))
    bk = design.bases[k]
    for (s1, s2), g in zip(bk.extended_exponents, bk.extended_values):
        w = 2 * (s1 < m and s2 < m) + (s1 >= 1 and s2 < m) + (s1 < m and s2 >= 1)
        if w:
            gains.append(g); mult.append(w); labels.append(None)
    return np.array(gains), np.array(mult), labels


@dataclass
class _Lattice:
    points: np.ndarray  # sorted noiseless outputs
    coeffs: np.ndarray  # integer coefficients per point, desired dims only
    labels: list  # desired labels aligned with coeffs columns


def _lattice(design, k, pam: PamConfig) -> _Lattice:
    gains, mult, labels = _antenna_dims(design, k)
    half = mult * pam.Q
    sizes = 2 * half + 1
    total = int(np.prod(sizes.astype(float)))
    if total > HYPOTHESIS_BUDGET:
        raise DeskScaleLimitError(f"{total} hypotheses exceed the budget of {HYPOTHESIS_BUDGET}")
    pts = np.zeros(1)
    for g, h in zip(gains, half):
        pts = (pts[:, None] + pam.a * g * np.arange(-h, h + 1)[None, :]).ravel()
    order = np.argsort(pts, kind="stable")
    want = [i for i, lab in enumerate(labels) if lab is not None]
    idx = np.unravel_index(order, tuple(int(s) for s in sizes))
    coeffs = np.stack([idx[i] - half[i] for i in want], axis=1) if want else np.zeros((len(order), 0), int)
    return _Lattice(pts[order], coeffs, [labels[i] for i in want])


def _nearest(points: np.ndarray, y: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(points, y)
    pos = np.clip(pos, 1, len(points) - 1)
    left = points[pos - 1]
    right = points[pos]
    return np.where(np.abs(y - left) <= np.abs(right - y), pos - 1, pos)


def ml_decode(ytilde: np.ndarray, design: StructuredDesign, pam: PamConfig) -> dict:
    """Nearest-point decoding of the desired PAM symbols on each filtered antenna.

    ``ytilde`` has shape ``(trials, l)``. Returns integer symbol indices
    (constellation point / a) keyed ``"v1"``, ``"v2"``, each of shape
    ``(trials, l * M)``.
    """
    ytilde = np.atleast_2d(np.asarray(ytilde, dtype=float))
    M = design.M
    out = {"v1": np.zeros((ytilde.shape[0], design.l * M), dtype=np.int64),
           "v2": np.zeros((ytilde.shape[0], design.l * M), dtype=np.int64)}
    for k in range(design.l):
        lat = _lattice(design, k, pam)
        hit = _nearest(lat.points, ytilde[:, k])
        for col, (who, blk, r) in enumerate(lat.labels):
            out[who][:, blk * M + r] = lat.coeffs[hit, col]
    return out


def _pam_effective(design: StructuredDesign) -> dict:
    """Filtered receive maps ``D H_i (map)`` of the PAM groups, keyed by group name."""
    ch = design.channel
    lay = design.layout([ch])
    return {g.name: design.D @ ch.H(g.tx) @ g.maps[0] for g in lay.groups if g.signaling == "pam"}


def joint_hypothesis_count(design: StructuredDesign, Q: int) -> int:
    """Size of the joint search space: both info vectors plus the merged jamming sum."""
    n = design.l * design.M
    return int((2 * Q + 1) ** (2 * n) * (4 * Q + 1) ** n) if design.l else 0


def ml_decode_joint(ytilde: np.ndarray, design: StructuredDesign, pam: PamConfig) -> dict:
    """Nearest-point decoding over the whole filtered vector at once.

    The hypotheses are every ``(v1, v2, u1 + u2)`` integer triple; the
    jamming symbols only enter through their aligned sum, so the sum is
    searched directly. Same output format as :func:`ml_decode`.
    """
    Q = pam.Q
    total = joint_hypothesis_count(design, Q)
    if total > HYPOTHESIS_BUDGET:
        raise DeskScaleLimitError(f"{total} joint hypotheses exceed the budget of {HYPOTHESIS_BUDGET}")
    ytilde = np.atleast_2d(np.asarray(ytilde, dtype=float))
    eff = _pam_effective(design)
    n = design.l * design.M
    A = np.hstack([eff["v1p"], eff["v2p"], eff["u1p"]])
    info = np.arange(-Q, Q + 1)
    jam = np.arange(-2 * Q, 2 * Q + 1)
    sizes = (len(info),) * (2 * n) + (len(jam),) * n
    offs = np.array([Q] * (2 * n) + [2 * Q] * n)
    grid = np.stack(np.unravel_index(np.arange(total), sizes), axis=1) - offs
    pts = pam.a * grid.astype(float) @ A.T
    best = np.empty(ytilde.shape[0], dtype=np.int64)
    sq = np.sum(pts ** 2, axis=1)
    chunk = max(1, 2**22 // len(pts))
    for lo in range(0, ytilde.shape[0], chunk):
        yb = ytilde[lo:lo + chunk]
        # |y - p|^2 up to the per-row constant |y|^2
        best[lo:lo + chunk] = np.argmin(sq[None, :] - 2.0 * yb @ pts.T, axis=1)
    hit = grid[best]
    return {"v1": hit[:, :n], "v2": hit[:, n:2 * n]}


def ml_decode_2222(y: np.ndarray, design: StructuredDesign, pam: PamConfig,
                   joint: bool = True) -> dict:
    """Decoder for the 2x2x2x2 design (D = I); joint over both antennas by default."""
    if design.N != 2 or design.K != 2:
        raise WrongRegimeError("ml_decode_2222 needs the N = K = 2 design")
    return ml_decode_joint(y, design, pam) if joint else ml_decode(y, design, pam)


def _pick_decoder(design: StructuredDesign, Q: int, decoder: str):
    if decoder not in ("auto", "joint", "per-antenna"):
        raise InvalidInputError(f"decoder must be auto, joint or per-antenna, got {decoder!r}")
    if decoder == "auto":
        decoder = "joint" if joint_hypothesis_count(design, Q) <= JOINT_AUTO_LIMIT else "per-antenna"
    return ml_decode_joint if decoder == "joint" else ml_decode


def simulate_filtered(design: StructuredDesign, P: float, pam: PamConfig, trials: int,
                      rng_seed, noise: bool = True):
    """Draw every stream, pass it through the physical channel and the filter.

    Returns ``(ytilde, truth)`` where ``truth`` holds the integer PAM
    information symbols of both transmitters.
    """
    rng = np.random.default_rng(rng_seed)
    ch = design.channel
    lay = design.layout([ch])
    X = {1: np.zeros((trials, design.N)), 2: np.zeros((trials, design.N))}
    truth = {}
    std = math.sqrt(design.alpha * P)
    for g in lay.groups:
        if g.signaling == "pam":
            ints = rng.integers(-pam.Q, pam.Q + 1, size=(trials, g.dim))
            if g.kind == "info":
                truth[g.name[:2]] = ints
            sym = pam.a * ints
        else:
            sym = std * rng.standard_normal((trials, g.dim))
        X[g.tx] += sym @ g.maps[0].T
    Y = X[1] @ ch.H1.T + X[2] @ ch.H2.T
    if noise:
        Y = Y + rng.standard_normal(Y.shape)
    return Y @ design.D.T, truth


def error_probability(design: StructuredDesign, P: float, trials: int, rng_seed,
                      Q: int | None = None, noise: bool = True, decoder: str = "auto") -> float:
    """Fraction of trials in which any desired PAM symbol is decoded wrongly.

    ``decoder`` is ``"joint"``, ``"per-antenna"`` or ``"auto"`` (joint when
    its search space fits the hypothesis budget).
    """
    if design.l == 0:
        return 0.0
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    pam = design.pam_config(P, Q)
    decode = _pick_decoder(design, pam.Q, decoder)
    ytilde, truth = simulate_filtered(design, P, pam, trials, rng_seed, noise)
    dec = decode(ytilde, design, pam)
    wrong = np.any(dec["v1"] != truth["v1"], axis=1) | np.any(dec["v2"] != truth["v2"], axis=1)
    return float(np.mean(wrong))


def hypothesis_count(design: StructuredDesign, Q: int) -> int:
    return max(int(np.prod((2 * _antenna_dims(design, k)[1] * Q + 1).astype(float)))
               for k in range(design.l)) if design.l else 0
