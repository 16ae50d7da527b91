"""Information measures, secure rates, s.d.o.f. slopes and SNR sweeps.

Gaussian terms are exact log-det expressions. PAM terms are handled
componentwise: the receiver side gets a Fano lower bound from the
measured symbol error rate, the eavesdropper side gets the exact leakage
of an aligned pair of uniform PAM symbols.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelDims, draw_channels
from .errors import InvalidInputError, NumericalConditioningError, SdofLabError
from .gaussian_schemes import SLOTS, assemble_mixing, synthesize, verify_alignment, verify_decodability
from .regimes import (
    RegimeClass,
    classify_regime,
    cooperative_bound,
    distributed_bound,
    fraction_str,
    stream_budget,
    sum_sdof,
)
from .structured_schemes import (
    StructuredDesign,
    design_fixed,
    error_probability,
    exact_pam_leakage,
    verify_structured,
)

JITTER = 1e-12
DEFAULT_GRID_DB = (40.0, 50.0, 60.0, 70.0, 80.0)


def db_to_power(db: float) -> float:
    return 10.0 ** (float(db) / 10.0)


def _logdet2(S: np.ndarray) -> float:
    """log2 det of a symmetric positive-definite matrix via Cholesky."""
    S = 0.5 * (S + S.T)
    n = S.shape[0]
    if n == 0:
        return 0.0
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        scale = max(float(np.trace(S)) / n, 1.0)
        try:
            L = np.linalg.cholesky(S + JITTER * scale * np.eye(n))
        except np.linalg.LinAlgError as exc:
            raise NumericalConditioningError("covariance is not positive definite") from exc
    return 2.0 * float(np.sum(np.log2(np.diag(L))))


def _stack(maps, dim):
    maps = [np.asarray(m, dtype=float) for m in maps]
    maps = [m for m in maps if m.size]
    if not maps:
        return np.zeros((dim, 0))
    out = np.hstack(maps)
    if out.shape[0] != dim:
        raise InvalidInputError(f"maps have {out.shape[0]} rows, expected {dim}")
    return out


def gaussian_mutual_information(signal_maps, jamming_maps, stream_power: float,
                                noise_var: float = 1.0, dim: int | None = None) -> float:
    """``I(V; A V + J U + N)`` in bits for i.i.d. Gaussian symbols.

    Parameters
    ----------
    signal_maps, jamming_maps : list of ndarray
        Column blocks mapping information / jamming symbols to the
        observation. All blocks must share the row count.
    stream_power : float
        Variance of every symbol.
    noise_var : float
        Variance of the white observation noise.
    dim : int, optional
        Observation dimension; needed only when both lists are empty.

    Returns
    -------
    float
        ``1/2 log2 det(S_total) / det(S_given_V)``.
    """
    if not stream_power > 0 or not noise_var > 0:
        raise InvalidInputError("stream_power and noise_var must be positive")
    rows = [np.asarray(m).shape[0] for m in list(signal_maps) + list(jamming_maps)]
    if dim is None:
        if not rows:
            return 0.0
        dim = rows[0]
    A = _stack(signal_maps, dim)
    J = _stack(jamming_maps, dim)
    given = noise_var * np.eye(dim) + stream_power * (J @ J.T)
    total = given + stream_power * (A @ A.T)
    return max(0.5 * (_logdet2(total) - _logdet2(given)), 0.0)


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def fano_rate(streams: int, Q: int, error_rate: float) -> float:
    """Lower bound on ``I(V; Y)`` for ``streams`` uniform PAM symbols.

    ``log|V| (1 - Pe) - h2(Pe)``, clamped at 0.
    """
    if not 0.0 <= error_rate <= 1.0:
        raise InvalidInputError("error rate must lie in [0, 1]")
    logv = streams * math.log2(2 * Q + 1)
    return max(logv * (1.0 - error_rate) - binary_entropy(error_rate), 0.0)


@dataclass
class RateReport:
    P: float
    I_vy: float
    I_vz: float
    secure_rate: float
    per_slot_rate: float
    slots: int = 1
    error_rate: float | None = None
    Q: int | None = None


def secure_rate(mix, P: float, alpha: float, pam=None, error_rate: float | None = None) -> RateReport:
    """Block secure rate ``I(V;Y) - I(V;Z)`` (clamped at 0) of a mixing model.

    For structured designs pass the ``PamConfig`` used at this power and
    the measured symbol error rate. PAM streams then act as Gaussian
    noise of equal variance on the Gaussian part at the receiver (a
    worst-case bound), add a Fano term to ``I_vy``, and add their exact
    aligned leakage to ``I_vz``.
    """
    if not P > 0 or not alpha > 0:
        raise InvalidInputError("P and alpha must be positive")
    p = alpha * P
    g_info_rx = mix.maps("rx", "info", "gaussian")
    g_jam_rx = mix.maps("rx", "jam", "gaussian")
    pam_rx = mix.maps("rx", "info", "pam") + mix.maps("rx", "jam", "pam")
    extra = []
    if pam is not None and pam_rx:
        var = pam.a ** 2 * pam.Q * (pam.Q + 1) / 3.0
        extra = [m * math.sqrt(var / p) for m in pam_rx]
    I_vy = gaussian_mutual_information(g_info_rx, g_jam_rx + extra, p, dim=mix.rx_dim)
    I_vz = gaussian_mutual_information(mix.maps("eve", "info", "gaussian"),
                                       mix.maps("eve", "jam", "gaussian"), p, dim=mix.eve_dim)
    pam_info = sum(m.shape[1] for m in mix.maps("rx", "info", "pam"))
    if pam is not None and pam_info:
        if error_rate is None:
            raise InvalidInputError("structured designs need a measured error rate")
        I_vy += fano_rate(pam_info, pam.Q, error_rate)
        I_vz += exact_pam_leakage(pam.Q, pam_info)
    rate = max(I_vy - I_vz, 0.0)
    return RateReport(P, I_vy, I_vz, rate, rate / mix.slots, mix.slots, error_rate,
                      pam.Q if pam is not None else None)


def rate_curve(design, chs, P_grid_db, trials: int = 2000, rng_seed: int = 0) -> list[RateReport]:
    """One :class:`RateReport` per power on the grid."""
    mix = assemble_mixing(design, chs)
    out = []
    for k, db in enumerate(P_grid_db):
        P = db_to_power(db)
        if isinstance(design, StructuredDesign) and design.l:
            pam = design.pam_config(P)
            pe = error_probability(design, P, trials, [rng_seed, k])
            out.append(secure_rate(mix, P, design.alpha, pam, pe))
        else:
            out.append(secure_rate(mix, P, design.alpha))
    return out


@dataclass
class SlopeEstimate:
    slope: float
    intercept: float
    fit_rmse: float
    grid: list


def sdof_slope(reports: list[RateReport]) -> SlopeEstimate:
    """Least-squares slope of per-slot rate against ``1/2 log2 P``."""
    P = np.array([r.P for r in reports], dtype=float)
    if len(np.unique(P)) < 3:
        raise InvalidInputError("need at least three distinct powers")
    db = 10 * np.log10(P)
    if db.max() - db.min() < 20.0 - 1e-9:
        raise InvalidInputError("power grid must span at least 20 dB")
    x = 0.5 * np.log2(P)
    y = np.array([r.per_slot_rate for r in reports], dtype=float)
    X = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    rmse = float(np.sqrt(np.mean((X @ coef - y) ** 2)))
    return SlopeEstimate(float(coef[0]), float(coef[1]), rmse, [float(v) for v in db])


# ------------------------------------------------------------------ sweep

SWEEP_COLUMNS = ("N", "K", "regime", "ds_num", "ds_den", "coop_bound", "dist_bound",
                 "slope", "slope_rmse", "max_residual", "leakage_delta_bits", "status")


@dataclass
class SweepRow:
    N: int
    K: int
    regime: str
    ds_num: int
    ds_den: int
    coop_bound: str
    dist_bound: str
    slope: float | None = None
    slope_rmse: float | None = None
    max_residual: float | None = None
    leakage_delta_bits: float | None = None
    status: str = "ok"


@dataclass
class SweepReport:
    rows: list = field(default_factory=list)
    grid_db: list = field(default_factory=list)
    mode: str = "fading"
    seed: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in self.rows:
            w.writerow([_cell(getattr(r, c)) for c in SWEEP_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{c: _json_cell(getattr(r, c)) for c in SWEEP_COLUMNS} for r in self.rows]
        doc = {"mode": self.mode, "seed": self.seed, "grid_db": self.grid_db, "rows": rows}
        return json.dumps(doc, indent=1, sort_keys=True)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _json_cell(v):
    return float(f"{v:.6g}") if isinstance(v, float) else v


def _design_for(N, K, mode, seed, m, delta):
    regime = classify_regime(N, K)
    if mode == "fixed" and regime in (RegimeClass.R2, RegimeClass.R3):
        ch = draw_channels(ChannelDims(N, K), "fixed", 1, seed)[0]
        return design_fixed(ch, m=m, delta=delta, seed=seed), [ch]
    chs = draw_channels(ChannelDims(N, K), mode, SLOTS.get(regime, 1), seed)
    return synthesize(chs, seed=seed), chs


def certify(design, chs) -> tuple[bool, float, list]:
    """Alignment and decodability verdict plus the largest residual."""
    if isinstance(design, StructuredDesign):
        rep = verify_structured(design, chs[0])
        return rep.passed, rep.max_residual, rep.failures
    res = verify_alignment(design, chs)
    dec = verify_decodability(design, chs)
    fails = list(res.failures) + ([] if dec.passed else ["decode matrix rank"])
    return not fails, res.max_residual, fails


def sweep_point(N: int, K: int, grid_db=DEFAULT_GRID_DB, mode: str = "fading", seed: int = 0,
                fit_top: int = 3, trials: int = 2000, m: int = 1, delta: float = 0.05) -> SweepRow:
    ds = sum_sdof(N, K)
    regime = classify_regime(N, K)
    row = SweepRow(N, K, str(regime), ds.numerator, ds.denominator,
                   fraction_str(cooperative_bound(N, K)), fraction_str(distributed_bound(N, K)))
    if regime is RegimeClass.DEGENERATE:
        row.status = "no scheme (d_s = 0)"
        return row
    try:
        design, chs = _design_for(N, K, mode, seed, m, delta)
        ok, resid, fails = certify(design, chs)
        row.max_residual = resid
        if not ok:
            row.status = "verification failed: " + "; ".join(fails)
            return row
        reports = rate_curve(design, chs, grid_db, trials, seed)
        leak = [r.I_vz for r in reports]
        row.leakage_delta_bits = max(leak) - min(leak)
        top = sorted(reports, key=lambda r: r.P)[-fit_top:]
        est = sdof_slope(top)
        row.slope, row.slope_rmse = est.slope, est.fit_rmse
    except SdofLabError as exc:
        row.status = f"error: {type(exc).__name__}: {exc}"
    return row


def sweep(N: int, K_range, P_grid_db=DEFAULT_GRID_DB, mode: str = "fading", seed: int = 0,
          fit_top: int = 3, trials: int = 2000, m: int = 1, delta: float = 0.05) -> SweepReport:
    """Theory, bounds and measured slope for every K in ``K_range``.

    Failures at one point are recorded in its ``status`` column and the
    sweep carries on.
    """
    if mode not in ("fixed", "fading"):
        raise InvalidInputError(f"mode must be 'fixed' or 'fading', got {mode!r}")
    grid = sorted(float(g) for g in P_grid_db)
    if fit_top < 3 or fit_top > len(grid):
        raise InvalidInputError("fit_top must be between 3 and the grid size")
    rows = [sweep_point(N, int(K), grid, mode, seed, fit_top, trials, m, delta)
            for K in sorted(set(int(k) for k in K_range))]
    return SweepReport(rows, grid, mode, seed)


def block_growth_target(N: int, K: int) -> float:
    """Symbols per block, ``n1 + n2``, for the regime scheme of (N, K)."""
    b = stream_budget(N, K)
    return float(b.n1 + b.n2)


__all__ = [
    "RateReport", "SlopeEstimate", "SweepReport", "SweepRow", "SWEEP_COLUMNS", "DEFAULT_GRID_DB",
    "gaussian_mutual_information", "secure_rate", "rate_curve", "sdof_slope", "sweep",
    "sweep_point", "error_probability", "fano_rate", "binary_entropy", "db_to_power",
    "certify", "block_growth_target",
]
