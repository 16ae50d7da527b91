"""JSON round trip for synthesized designs together with their channels.

A saved design is re-certified from the stored matrices, never
re-synthesized, so editing any stored number shows up as a failing
residual when the file is verified.
"""

from __future__ import annotations

import json

import numpy as np

from .channel import channels_from_dict, channels_to_dict
from .errors import InvalidInputError
from .gaussian_schemes import SchemeDesign
from .regimes import RegimeClass, StreamBudget
from .structured_schemes import StructuredDesign, monomial_basis

FORMAT_VERSION = 1


def _enc(m) -> dict:
    m = np.asarray(m, dtype=float)
    return {"shape": list(m.shape), "data": [float(x) for x in m.ravel()]}


def _dec(obj) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in obj["shape"])
        return np.array(obj["data"], dtype=float).reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed matrix entry: {exc}") from exc


def design_to_dict(design, chs, mode: str) -> dict:
    doc = {
        "format": FORMAT_VERSION,
        "regime": design.regime.value,
        "N": design.N,
        "K": design.K,
        "seed": design.seed,
        "alpha": design.alpha,
        "channels": channels_to_dict(list(chs), mode),
    }
    if isinstance(design, StructuredDesign):
        doc.update({
            "kind": "structured",
            "d": design.d, "l": design.l, "m": design.m,
            "delta": design.delta, "gamma": design.gamma,
            "precoders": {k: _enc(v) for k, v in sorted(design.precoders.items())},
            "F": _enc(design.F), "B": _enc(design.B), "D": _enc(design.D), "E": _enc(design.E),
            "gains": [_enc(g) for g in design.gains],
        })
    else:
        b = design.budget
        doc.update({
            "kind": "gaussian",
            "slots": design.slots,
            "budget": {"n1": b.n1, "n2": b.n2, "nB": b.nB, "jam1": b.jam1, "jam2": b.jam2},
            "precoders": [{k: _enc(v) for k, v in sorted(p.items())} for p in design.precoders],
        })
    return doc


def design_from_dict(doc: dict):
    """Rebuild ``(design, channels, mode)`` exactly as stored."""
    try:
        chs, mode = channels_from_dict(doc["channels"])
        regime = RegimeClass(doc["regime"])
        N, K = int(doc["N"]), int(doc["K"])
        kind = doc["kind"]
        if kind == "gaussian":
            design = SchemeDesign(
                regime, N, K, int(doc["slots"]),
                [{k: _dec(v) for k, v in p.items()} for p in doc["precoders"]],
                StreamBudget(**{k: int(v) for k, v in doc["budget"].items()}),
                float(doc["alpha"]), doc.get("seed"),
            )
        elif kind == "structured":
            gains = tuple(_dec(g) for g in doc["gains"])
            l, m = int(doc["l"]), int(doc["m"])
            bases = []
            if l == 2:
                bases = [monomial_basis(gains[0], gains[1], m, k) for k in (1, 2)]
            design = StructuredDesign(
                regime, N, K, int(doc["d"]), l, m, float(doc["delta"]),
                {k: _dec(v) for k, v in doc["precoders"].items()},
                _dec(doc["F"]), _dec(doc["B"]), _dec(doc["D"]), _dec(doc["E"]),
                gains, chs[0], float(doc["alpha"]), float(doc["gamma"]), doc.get("seed"), bases,
            )
        else:
            raise InvalidInputError(f"unknown design kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"malformed design file: {exc!r}") from exc
    return design, chs, mode


def dump_design(design, chs, mode: str) -> str:
    return json.dumps(design_to_dict(design, chs, mode), indent=1, sort_keys=True)


def load_design(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"design file is not JSON: {exc}") from exc
    return design_from_dict(doc)
