"""Channel realizations for the two-user MIMO MAC wiretap channel.

Entries are i.i.d. uniform on [-1, 1]. Every (slot, matrix, attempt)
triple gets its own counter-derived generator, so fading draws do not
depend on generation order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import DegenerateDistributionError, InvalidInputError
from .matrix_kernel import DEFAULT_TOL, Tolerance, condition_number, rank

GainMode = Literal["fixed", "fading"]

MAX_COND = 1e8
MAX_ATTEMPTS = 100
_NAMES = ("H1", "H2", "G1", "G2")


@dataclass(frozen=True)
class ChannelDims:
    N: int
    K: int

    def __post_init__(self):
        if self.N < 1 or self.K < 0:
            raise InvalidInputError(f"need N >= 1 and K >= 0, got {self}")


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """One slot of channel matrices: ``H_i`` is N x N, ``G_i`` is K x N."""

    H1: np.ndarray
    H2: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    slot: int = 0

    def __post_init__(self):
        for name in _NAMES:
            m = np.array(getattr(self, name), dtype=float)
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @property
    def N(self) -> int:
        return self.H1.shape[0]

    @property
    def K(self) -> int:
        return self.G1.shape[0]

    def H(self, i: int) -> np.ndarray:
        return self.H1 if i == 1 else self.H2

    def G(self, i: int) -> np.ndarray:
        return self.G1 if i == 1 else self.G2

    def same_gains(self, other: "ChannelSet") -> bool:
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in _NAMES)


@dataclass
class ChannelReport:
    ranks: dict = field(default_factory=dict)
    conds: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def failures(self) -> list[str]:
        return [k for k, ok in self.checks.items() if not ok]


def validate_channels(ch: ChannelSet, tol: Tolerance = DEFAULT_TOL) -> ChannelReport:
    """Rank and conditioning diagnostics for one slot; never raises."""
    rep = ChannelReport()
    N, K = ch.N, ch.K
    for name in _NAMES:
        m = getattr(ch, name)
        finite = bool(np.all(np.isfinite(m)))
        rep.checks[f"{name} finite"] = finite
        if not finite:
            continue
        r = rank(m, tol)
        rep.ranks[name] = r
        rep.conds[name] = condition_number(m)
        if name.startswith("H"):
            rep.checks[f"{name} invertible"] = r == N and rep.conds[name] <= MAX_COND
        else:
            rep.checks[f"{name} full rank"] = r == min(K, N)
    return rep


def _draw_slot(dims: ChannelDims, seed: int, slot: int) -> ChannelSet:
    N, K = dims.N, dims.K
    shapes = {"H1": (N, N), "H2": (N, N), "G1": (K, N), "G2": (K, N)}
    for attempt in range(MAX_ATTEMPTS):
        mats = {}
        for idx, name in enumerate(_NAMES):
            rng = np.random.default_rng([seed, slot, idx, attempt])
            mats[name] = rng.uniform(-1.0, 1.0, size=shapes[name])
        ch = ChannelSet(slot=slot, **mats)
        if validate_channels(ch).passed:
            return ch
    raise DegenerateDistributionError(
        f"no valid channel after {MAX_ATTEMPTS} attempts (N={N}, K={K}, slot={slot})"
    )


def draw_channels(dims: ChannelDims, mode: GainMode, slots: int, rng_seed: int) -> list[ChannelSet]:
    """Draw ``slots`` channel realizations.

    Fixed mode repeats the slot-0 gains; fading mode draws each slot
    independently. Invalid draws (singular or badly conditioned ``H_i``,
    rank-deficient ``G_i``) are resampled.
    """
    if slots < 1:
        raise InvalidInputError(f"slots must be >= 1, got {slots}")
    if mode not in ("fixed", "fading"):
        raise InvalidInputError(f"mode must be 'fixed' or 'fading', got {mode!r}")
    seed = int(rng_seed)
    if seed < 0:
        raise InvalidInputError("seed must be non-negative")
    if mode == "fixed":
        base = _draw_slot(dims, seed, 0)
        return [ChannelSet(base.H1, base.H2, base.G1, base.G2, slot=t) for t in range(slots)]
    return [_draw_slot(dims, seed, t) for t in range(slots)]


def _rows(m: np.ndarray) -> list:
    return [[float(f"{x:.17g}") for x in row] for row in m]


def channels_to_dict(chs: list[ChannelSet], mode: str) -> dict:
    return {
        "N": chs[0].N,
        "K": chs[0].K,
        "mode": mode,
        "slots": len(chs),
        "matrices": [
            {"slot": ch.slot, **{n: _rows(getattr(ch, n)) for n in _NAMES}} for ch in chs
        ],
    }


def _mat(rows, nrows, ncols) -> np.ndarray:
    a = np.array(rows, dtype=float).reshape(nrows, ncols)
    return a


def channels_from_dict(d: dict) -> tuple[list[ChannelSet], str]:
    N, K = int(d["N"]), int(d["K"])
    chs = []
    for entry in d["matrices"]:
        chs.append(ChannelSet(
            H1=_mat(entry["H1"], N, N),
            H2=_mat(entry["H2"], N, N),
            G1=_mat(entry["G1"], K, N),
            G2=_mat(entry["G2"], K, N),
            slot=int(entry["slot"]),
        ))
    if len(chs) != int(d["slots"]):
        raise InvalidInputError("slot count does not match the matrices list")
    return chs, d["mode"]


def dump_channels(chs: list[ChannelSet], mode: str) -> str:
    return json.dumps(channels_to_dict(chs, mode), indent=1)


def load_channels(text: str) -> tuple[list[ChannelSet], str]:
    return channels_from_dict(json.loads(text))
