"""Gaussian-signaling precoder designs for the five (N, K) regimes.

A design only stores precoder matrices. Everything derived from the
channel (jamming maps ``H_i^{-1} Q``, the stacked receiver and
eavesdropper maps, the alignment equations) is rebuilt from the design
plus the channel list, so a design loaded from disk is re-certified
against the gains it claims to be built for.

Symbol groups
-------------
Each scheme is described as a list of :class:`StreamGroup` objects: a
named block of i.i.d. symbols, owned by one transmitter, that enters the
antennas of that transmitter through one ``N x dim`` matrix per slot.
The secrecy argument is a list of *pairs* (an information group whose
eavesdropper image equals that of a jamming group of the other
transmitter) and *shielded* groups (zero eavesdropper image). At the
legitimate receiver, jamming groups listed together in ``rx_merged``
arrive along identical directions and are decoded as one sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .errors import DesignVerificationError, InvalidInputError, SingularChannelError, WrongRegimeError
from .matrix_kernel import (
    DEFAULT_TOL,
    Tolerance,
    block_diag,
    nullspace_basis,
    nullspace_subset,
    pseudo_inverse_row,
    rank,
    singular_values,
    subspace_residual,
)
from .regimes import RegimeClass, StreamBudget, classify_regime, regime_contains, stream_budget

SLOTS = {
    RegimeClass.R1: 1,
    RegimeClass.R2: 3,
    RegimeClass.R3: 3,
    RegimeClass.R4: 1,
    RegimeClass.R5: 1,
    RegimeClass.DEGENERATE: 1,
}


@dataclass(frozen=True)
class StreamGroup:
    name: str
    tx: int
    kind: str  # "info" or "jam"
    maps: tuple  # one N x dim transmit matrix per slot
    signaling: str = "gaussian"

    @property
    def dim(self) -> int:
        return self.maps[0].shape[1]


@dataclass(frozen=True)
class AlignmentPair:
    info: str
    jam: str
    label: str


@dataclass
class GroupLayout:
    groups: list
    pairs: list = field(default_factory=list)
    shielded: list = field(default_factory=list)
    rx_merged: list = field(default_factory=list)

    def group(self, name: str) -> StreamGroup:
        for g in self.groups:
            if g.name == name:
                return g
        raise KeyError(name)


@dataclass
class SchemeDesign:
    """Precoders of one regime's scheme.

    ``precoders[t]`` maps names such as ``"P1"``, ``"Q"`` or ``"Gperp2"``
    to the slot-``t`` matrix. ``alpha`` is the per-symbol power scale:
    each Gaussian symbol has variance ``alpha * P``.
    """

    regime: RegimeClass
    N: int
    K: int
    slots: int
    precoders: list
    budget: StreamBudget
    alpha: float = 1.0
    seed: int | None = None

    def layout(self, chs) -> GroupLayout:
        _check_channels(chs, self.N, self.K, self.slots)
        return _LAYOUTS[self.regime](self, chs)


# ---------------------------------------------------------------- helpers

def _check_channels(chs, N, K, slots):
    if len(chs) != slots:
        raise InvalidInputError(f"design spans {slots} slots, got {len(chs)} channel sets")
    for ch in chs:
        if ch.N != N or ch.K != K:
            raise InvalidInputError(f"channel dims ({ch.N},{ch.K}) do not match design ({N},{K})")


def _solve(H, Q) -> np.ndarray:
    """``H^{-1} Q`` without forming the inverse."""
    try:
        return np.linalg.solve(H, Q)
    except np.linalg.LinAlgError as exc:
        raise SingularChannelError("channel matrix H is singular") from exc


def _per_slot(design, key):
    return tuple(np.asarray(pre[key], dtype=float) for pre in design.precoders)


def _jam_maps(design, chs, i, key="Q"):
    return tuple(_solve(ch.H(i), np.asarray(pre[key], dtype=float)) for ch, pre in zip(chs, design.precoders))


def _layout_r1(d, chs):
    groups = [
        StreamGroup("v1", 1, "info", _per_slot(d, "P1")),
        StreamGroup("v2", 2, "info", _per_slot(d, "P2")),
    ]
    return GroupLayout(groups, shielded=["v1", "v2"])


def _layout_r2(d, chs):
    groups = []
    shielded = []
    n = d.N
    for t in range(d.slots):
        for i in (1, 2):
            maps = tuple(
                np.asarray(d.precoders[s][f"Gperp{i}"], dtype=float) if s == t
                else np.zeros((n, np.asarray(d.precoders[t][f"Gperp{i}"]).shape[1]))
                for s in range(d.slots)
            )
            name = f"vt{i}[{t + 1}]"
            groups.append(StreamGroup(name, i, "info", maps))
            shielded.append(name)
    groups += _aligned_core(d, chs)
    return GroupLayout(groups, pairs=_core_pairs(), shielded=shielded, rx_merged=[("u1", "u2")])


def _aligned_core(d, chs):
    return [
        StreamGroup("v1", 1, "info", _per_slot(d, "P1")),
        StreamGroup("v2", 2, "info", _per_slot(d, "P2")),
        StreamGroup("u1", 1, "jam", _jam_maps(d, chs, 1)),
        StreamGroup("u2", 2, "jam", _jam_maps(d, chs, 2)),
    ]


def _core_pairs():
    return [
        AlignmentPair("v1", "u2", "G1P1 = G2H2^-1Q"),
        AlignmentPair("v2", "u1", "G2P2 = G1H1^-1Q"),
    ]


def _layout_r3(d, chs):
    return GroupLayout(_aligned_core(d, chs), pairs=_core_pairs(), rx_merged=[("u1", "u2")])


def _layout_r4(d, chs):
    groups = [
        StreamGroup("vt", 1, "info", _per_slot(d, "R1")),
        StreamGroup("ut", 2, "jam", _per_slot(d, "R2")),
    ] + _aligned_core(d, chs)
    pairs = [AlignmentPair("vt", "ut", "G1R1 = G2R2")] + _core_pairs()
    return GroupLayout(groups, pairs=pairs, rx_merged=[("u1", "u2")])


def _layout_r5(d, chs):
    groups = [
        StreamGroup("v", 1, "info", _per_slot(d, "P")),
        StreamGroup("u", 2, "jam", _per_slot(d, "Q")),
    ]
    return GroupLayout(groups, pairs=[AlignmentPair("v", "u", "G1P = G2Q")])


def _layout_empty(d, chs):
    return GroupLayout([])


_LAYOUTS = {
    RegimeClass.R1: _layout_r1,
    RegimeClass.R2: _layout_r2,
    RegimeClass.R3: _layout_r3,
    RegimeClass.R4: _layout_r4,
    RegimeClass.R5: _layout_r5,
    RegimeClass.DEGENERATE: _layout_empty,
}


def power_scale(layout: GroupLayout, slots: int, share: float = 1.0, signaling=None) -> float:
    """Largest ``alpha`` with ``alpha * sum ||T||_F^2 <= share`` per transmitter and slot."""
    worst = 0.0
    for i in (1, 2):
        for t in range(slots):
            tot = sum(
                float(np.sum(g.maps[t] ** 2)) for g in layout.groups
                if g.tx == i and (signaling is None or g.signaling == signaling)
            )
            worst = max(worst, tot)
    return share / worst if worst > 0 else 1.0


def _finish(design: SchemeDesign, chs, tol) -> SchemeDesign:
    lay = design.layout(chs)
    design.alpha = power_scale(lay, design.slots)
    al = verify_alignment(design, chs, tol)
    dec = verify_decodability(design, chs, tol)
    if not (al.passed and dec.passed):
        raise DesignVerificationError(
            f"{design.regime} design failed certification: "
            f"alignment {al.failures}, decode rank {dec.rank}/{dec.cols}"
        )
    return design


def _require(regime, N, K):
    if not regime_contains(regime, N, K):
        raise WrongRegimeError(f"(N={N}, K={K}) is outside regime {regime}")


def _one(chs):
    if isinstance(chs, ChannelSet):
        return [chs]
    return list(chs)


# ------------------------------------------------------- stacked matrices

def stacked_eve_matrix(ch: ChannelSet) -> np.ndarray:
    """``[G1  -G2]``; its nullspace gives eavesdropper-aligned pairs."""
    return np.hstack([ch.G1, -ch.G2])


def lambda_matrix(ch: ChannelSet) -> np.ndarray:
    """Single-slot alignment operator ``[[G1, 0, -G2 H2^-1], [0, G2, -G1 H1^-1]]``."""
    N, K = ch.N, ch.K
    z = np.zeros((K, N))
    top = np.hstack([ch.G1, z, -ch.G2 @ np.linalg.inv(ch.H2)])
    bot = np.hstack([z, ch.G2, -ch.G1 @ np.linalg.inv(ch.H1)])
    return np.vstack([top, bot])


def psi_matrix(chs) -> np.ndarray:
    """Three-slot alignment operator built from block-diagonal ``G~_i, H~_i``."""
    Gt1 = block_diag([c.G1 for c in chs])
    Gt2 = block_diag([c.G2 for c in chs])
    Hi1 = block_diag([np.linalg.inv(c.H1) for c in chs])
    Hi2 = block_diag([np.linalg.inv(c.H2) for c in chs])
    z = np.zeros_like(Gt1)
    top = np.hstack([Gt1, z, -Gt2 @ Hi2])
    bot = np.hstack([z, Gt2, -Gt1 @ Hi1])
    return np.vstack([top, bot])


# --------------------------------------------------------------- designs

def design_r1(ch, seed=None, tol: Tolerance = DEFAULT_TOL) -> SchemeDesign:
    """Zero-forcing: both transmitters beamform into the nullspace of their ``G_i``."""
    ch = _one(ch)[0]
    N, K = ch.N, ch.K
    _require(RegimeClass.R1, N, K)
    rng = np.random.default_rng(seed)
    P1 = nullspace_basis(ch.G1, tol)
    if P1.shape[1] != N - K:
        raise SingularChannelError(f"G1 nullity is {P1.shape[1]}, expected {N - K}")
    P2 = nullspace_subset(ch.G2, K, rng, tol)
    d = SchemeDesign(RegimeClass.R1, N, K, 1, [{"P1": P1, "P2": P2}],
                     stream_budget(N, K, RegimeClass.R1), seed=seed)
    return _finish(d, [ch], tol)


def design_r2(chs, seed=None, tol: Tolerance = DEFAULT_TOL) -> SchemeDesign:
    """Three-slot scheme: nullspace streams plus ``2K - N`` aligned streams."""
    chs = _one(chs)
    if len(chs) != 3:
        raise InvalidInputError("the R2 scheme needs 3 channel slots")
    N, K = chs[0].N, chs[0].K
    _require(RegimeClass.R2, N, K)
    rng = np.random.default_rng(seed)
    s = 2 * K - N
    pre = []
    for ch in chs:
        slot = {}
        for i in (1, 2):
            gp = nullspace_basis(ch.G(i), tol)
            if gp.shape[1] != N - K:
                raise SingularChannelError(f"G{i} nullity is {gp.shape[1]}, expected {N - K}")
            slot[f"Gperp{i}"] = gp
        Q, _ = np.linalg.qr(rng.standard_normal((N, s)))
        slot["Q"] = Q
        for i, j in ((1, 2), (2, 1)):
            slot[f"P{i}"] = pseudo_inverse_row(ch.G(i), tol) @ ch.G(j) @ _solve(ch.H(j), Q)
        pre.append(slot)
    d = SchemeDesign(RegimeClass.R2, N, K, 3, pre, stream_budget(N, K, RegimeClass.R2), seed=seed)
    return _finish(d, chs, tol)


def design_r3(chs, seed=None, tol: Tolerance = DEFAULT_TOL) -> SchemeDesign:
    """Three-slot scheme from ``N`` random vectors in the nullspace of Psi."""
    chs = _one(chs)
    if len(chs) != 3:
        raise InvalidInputError("the R3 scheme needs 3 channel slots")
    N, K = chs[0].N, chs[0].K
    _require(RegimeClass.R3, N, K)
    rng = np.random.default_rng(seed)
    V = nullspace_subset(psi_matrix(chs), N, rng, tol)
    Pt1, Pt2, Qt = V[:3 * N], V[3 * N:6 * N], V[6 * N:]
    pre = [
        {"P1": Pt1[t * N:(t + 1) * N], "P2": Pt2[t * N:(t + 1) * N], "Q": Qt[t * N:(t + 1) * N]}
        for t in range(3)
    ]
    d = SchemeDesign(RegimeClass.R3, N, K, 3, pre, stream_budget(N, K, RegimeClass.R3), seed=seed)
    return _finish(d, chs, tol)


def design_r4(ch, seed=None, tol: Tolerance = DEFAULT_TOL) -> SchemeDesign:
    """Single-slot scheme: ``3K - 4N`` paired streams plus a Lambda-nullspace part."""
    ch = _one(ch)[0]
    N, K = ch.N, ch.K
    _require(RegimeClass.R4, N, K)
    rng = np.random.default_rng(seed)
    Rm = nullspace_subset(stacked_eve_matrix(ch), 3 * K - 4 * N, rng, tol)
    W = nullspace_subset(lambda_matrix(ch), 3 * N - 2 * K, rng, tol)
    pre = {"R1": Rm[:N], "R2": Rm[N:], "P1": W[:N], "P2": W[N:2 * N], "Q": W[2 * N:]}
    d = SchemeDesign(RegimeClass.R4, N, K, 1, [pre], stream_budget(N, K, RegimeClass.R4), seed=seed)
    return _finish(d, [ch], tol)


def design_r5(ch, seed=None, tol: Tolerance = DEFAULT_TOL) -> SchemeDesign:
    """Transmitter 2 only jams; ``G1 P = G2 Q`` hides transmitter 1's streams."""
    ch = _one(ch)[0]
    N, K = ch.N, ch.K
    _require(RegimeClass.R5, N, K)
    rng = np.random.default_rng(seed)
    W = nullspace_subset(stacked_eve_matrix(ch), 2 * N - K, rng, tol)
    d = SchemeDesign(RegimeClass.R5, N, K, 1, [{"P": W[:N], "Q": W[N:]}],
                     stream_budget(N, K, RegimeClass.R5), seed=seed)
    return _finish(d, [ch], tol)


def zero_design(N: int, K: int) -> SchemeDesign:
    return SchemeDesign(RegimeClass.DEGENERATE, N, K, 1, [{}], StreamBudget(0, 0, 1))


def synthesize(chs, seed=None, regime: RegimeClass | None = None, tol: Tolerance = DEFAULT_TOL) -> SchemeDesign:
    """Build the scheme for the regime of ``chs`` (or the one given)."""
    chs = _one(chs)
    N, K = chs[0].N, chs[0].K
    regime = classify_regime(N, K) if regime is None else regime
    if regime is RegimeClass.DEGENERATE:
        return zero_design(N, K)
    need = SLOTS[regime]
    if len(chs) < need:
        raise InvalidInputError(f"regime {regime} needs {need} slots, got {len(chs)}")
    chs = chs[:need]
    fn = {
        RegimeClass.R1: design_r1,
        RegimeClass.R2: design_r2,
        RegimeClass.R3: design_r3,
        RegimeClass.R4: design_r4,
        RegimeClass.R5: design_r5,
    }[regime]
    return fn(chs if need > 1 else chs[0], seed=seed, tol=tol)


# ------------------------------------------------------------ certification

@dataclass
class ResidualReport:
    residuals: dict
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    @property
    def failures(self) -> list:
        return [k for k, v in self.residuals.items() if not v <= self.tol]

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass
class DecodeReport:
    rank: int
    rows: int
    cols: int
    smallest_sv: float

    @property
    def passed(self) -> bool:
        return self.rank == self.cols and self.cols <= self.rows


@dataclass
class MixingModel:
    """Stacked linear maps from symbol groups to ``Y`` (N*slots) and ``Z`` (K*slots)."""

    layout: GroupLayout
    recv: dict
    eve: dict
    slots: int
    N: int
    K: int

    @property
    def rx_dim(self) -> int:
        return self.N * self.slots

    @property
    def eve_dim(self) -> int:
        return self.K * self.slots

    def _cat(self, which, tx, kind, signaling=None):
        maps = which
        rows = self.rx_dim if which is self.recv else self.eve_dim
        cols = [maps[g.name] for g in self.layout.groups
                if g.tx == tx and g.kind == kind and (signaling is None or g.signaling == signaling)]
        return np.hstack(cols) if cols else np.zeros((rows, 0))

    @property
    def A_v1(self):
        return self._cat(self.recv, 1, "info")

    @property
    def A_v2(self):
        return self._cat(self.recv, 2, "info")

    @property
    def A_u1(self):
        return self._cat(self.recv, 1, "jam")

    @property
    def A_u2(self):
        return self._cat(self.recv, 2, "jam")

    @property
    def A_u(self):
        """Receiver map of the jamming after merging aligned sums."""
        return decode_columns(self.layout, self.recv, self.rx_dim, kinds=("jam",))

    @property
    def B_v1(self):
        return self._cat(self.eve, 1, "info")

    @property
    def B_v2(self):
        return self._cat(self.eve, 2, "info")

    @property
    def B_u1(self):
        return self._cat(self.eve, 1, "jam")

    @property
    def B_u2(self):
        return self._cat(self.eve, 2, "jam")

    def maps(self, side: str, kind: str, signaling=None) -> list:
        src = self.recv if side == "rx" else self.eve
        return [src[g.name] for g in self.layout.groups
                if g.kind == kind and (signaling is None or g.signaling == signaling)]


def assemble_mixing(design, chs) -> MixingModel:
    """Stack per-slot channel x precoder products for every symbol group."""
    chs = _one(chs)
    lay = design.layout(chs)
    recv, eve = {}, {}
    for g in lay.groups:
        recv[g.name] = np.vstack([ch.H(g.tx) @ m for ch, m in zip(chs, g.maps)])
        eve[g.name] = np.vstack([ch.G(g.tx) @ m for ch, m in zip(chs, g.maps)])
    return MixingModel(lay, recv, eve, len(chs), chs[0].N, chs[0].K)


def decode_columns(layout: GroupLayout, recv: dict, rows: int, kinds=("info", "jam")) -> np.ndarray:
    merged_tail = {name for grp in layout.rx_merged for name in grp[1:]}
    cols = [recv[g.name] for g in layout.groups
            if g.kind in kinds and g.name not in merged_tail]
    return np.hstack(cols) if cols else np.zeros((rows, 0))


def _scaled_residual(A, B) -> float:
    r = subspace_residual(A, B)
    if A.size == 0:
        return r
    return r / max(1.0, float(np.max(np.abs(A))), float(np.max(np.abs(B))))


def verify_alignment(design, chs, tol: Tolerance = DEFAULT_TOL) -> ResidualReport:
    """Max residual of every eavesdropper pairing, nulling and receiver merge.

    Pair and merge residuals are divided by ``max(1, largest entry)`` of the
    two sides, so maps carrying large monomial weights are judged on the
    same relative scale as O(1) ones.
    """
    mix = assemble_mixing(design, chs)
    lay = mix.layout
    res = {}
    for p in lay.pairs:
        res[p.label] = _scaled_residual(mix.eve[p.info], mix.eve[p.jam])
    for name in lay.shielded:
        e = mix.eve[name]
        res[f"G*{name} = 0"] = float(np.max(np.abs(e))) if e.size else 0.0
    for grp in lay.rx_merged:
        head = grp[0]
        for other in grp[1:]:
            res[f"rx {head} = rx {other}"] = _scaled_residual(mix.recv[head], mix.recv[other])
    return ResidualReport(res, tol.residual_abs_tol)


def verify_decodability(design, chs, tol: Tolerance = DEFAULT_TOL) -> DecodeReport:
    """Rank of the receiver decode matrix (info streams plus merged jamming).

    Designs that carry their own ``decode_matrix`` (the filtered fixed-gain
    ones) are checked against it instead.
    """
    if hasattr(design, "decode_matrix"):
        Phi = design.decode_matrix(_one(chs))
    else:
        mix = assemble_mixing(design, chs)
        Phi = decode_columns(mix.layout, mix.recv, mix.rx_dim)
    s = singular_values(Phi)
    return DecodeReport(rank(Phi, tol), Phi.shape[0], Phi.shape[1],
                        float(s[-1]) if s.size else 0.0)
