"""``sdof-lab`` command line front-end.

Machine output (CSV or JSON) goes to stdout or ``--out``; a short human
summary goes to stderr. Settings resolve as: command-line flag, then
``--config`` JSON file, then built-in default.

Exit codes: 0 success, 1 verification or library failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field, fields

from . import __version__
from .channel import ChannelDims, draw_channels
from .design_io import dump_design, load_design
from .errors import SdofLabError
from .evaluation import (
    DEFAULT_GRID_DB,
    certify,
    db_to_power,
    rate_curve,
    sdof_slope,
    sweep,
)
from .gaussian_schemes import SLOTS, synthesize
from .regimes import RegimeClass, classify_regime, regime_table
from .structured_schemes import (
    design_2222,
    design_fixed,
    error_probability,
    exact_pam_leakage,
)

COMMANDS = ("regimes", "design", "verify", "rate", "decode-demo", "sweep")
NEEDS_SEED = ("design", "rate", "decode-demo", "sweep")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    n: int | None = None
    k: str | None = None
    k_max: int | None = None
    mode: str = "fading"
    seed: int | None = None
    snr_db: list = field(default_factory=lambda: list(DEFAULT_GRID_DB))
    trials: int = 2000
    m: int = 1
    delta: float = 0.05
    q: int | None = None
    fit_top: int = 3
    decoder: str = "auto"
    design: str | None = None
    out: str | None = None
    format: str = "csv"


def _parse_snr(v) -> list:
    if isinstance(v, (int, float)):
        return [float(v)]
    if isinstance(v, list):
        return [float(x) for x in v]
    try:
        return [float(x) for x in str(v).split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --snr-db value {v!r}") from exc


def parse_k_range(text) -> list[int]:
    """``"3"``, ``"0..6"`` (inclusive) or ``"1,3,5"``."""
    s = str(text).strip()
    try:
        if ".." in s:
            lo, hi = s.split("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise UsageError(f"empty K range {s!r}")
            return list(range(lo, hi + 1))
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad K specification {s!r}") from exc


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        known = {f.name for f in fields(RunConfig)}
        for key, val in file_cfg.items():
            key = key.replace("-", "_")
            if key not in known:
                raise UsageError(f"unknown config key {key!r}")
            setattr(cfg, key, val)
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            setattr(cfg, f.name, val)
    cfg.snr_db = _parse_snr(cfg.snr_db)
    if cfg.k is not None:
        cfg.k = str(cfg.k)
    _validate(cfg, args.command)
    return cfg


def _validate(cfg: RunConfig, command: str):
    def need(cond, msg):
        if not cond:
            raise UsageError(msg)

    need(cfg.mode in ("fixed", "fading"), "--mode must be fixed or fading")
    need(cfg.format in ("csv", "json"), "--format must be csv or json")
    need(cfg.decoder in ("auto", "joint", "per-antenna"), "--decoder must be auto, joint or per-antenna")
    need(isinstance(cfg.trials, int) and cfg.trials >= 1, "--trials must be a positive integer")
    need(isinstance(cfg.m, int) and cfg.m >= 1, "--m must be a positive integer")
    need(0.0 < float(cfg.delta) <= 1.0, "--delta must lie in (0, 1]")
    need(cfg.q is None or (isinstance(cfg.q, int) and cfg.q >= 1), "--q must be a positive integer")
    need(cfg.n is None or (isinstance(cfg.n, int) and cfg.n >= 1), "--n must be a positive integer")
    need(cfg.seed is None or (isinstance(cfg.seed, int) and 0 <= cfg.seed < 2**64),
         "--seed must be an integer in [0, 2^64)")
    need(len(cfg.snr_db) >= 1, "--snr-db needs at least one value")
    if command in NEEDS_SEED and command != "rate" or (command == "rate" and cfg.design is None):
        need(cfg.seed is not None, f"{command} needs --seed")
    if command == "regimes":
        need(cfg.n is not None and cfg.k_max is not None and cfg.k_max >= 0, "regimes needs --n and --k-max")
    if command in ("design", "decode-demo", "sweep") or (command == "rate" and cfg.design is None):
        need(cfg.n is not None and cfg.k is not None, f"{command} needs --n and --k")
        ks = parse_k_range(cfg.k)
        need(ks and min(ks) >= 0, "K must be non-negative")
        if command != "sweep":
            need(len(ks) == 1, f"{command} takes a single K")
    if command == "verify":
        need(cfg.design is not None, "verify needs --design FILE")
    if command == "sweep":
        need(3 <= cfg.fit_top <= len(cfg.snr_db), "--fit-top must be between 3 and the grid size")


# ------------------------------------------------------------------ output

def _header(cfg: RunConfig, command: str) -> dict:
    d = asdict(cfg)
    d.pop("out")
    return {"tool": "sdof-lab", "version": __version__, "command": command, "config": d}


def _csv_text(cfg, command, columns, rows) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_header(cfg, command), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r.get(c) is None else _fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else v


def _json_text(cfg, command, payload: dict) -> str:
    doc = {"meta": _header(cfg, command), **payload}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _emit(cfg: RunConfig, text: str):
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _say(msg: str):
    print(msg, file=sys.stderr)


# ------------------------------------------------------------- subcommands

def _single_k(cfg) -> int:
    return parse_k_range(cfg.k)[0]


def _make_design(cfg: RunConfig):
    N, K = cfg.n, _single_k(cfg)
    regime = classify_regime(N, K)
    if cfg.mode == "fixed" and regime in (RegimeClass.R2, RegimeClass.R3):
        ch = draw_channels(ChannelDims(N, K), "fixed", 1, cfg.seed)[0]
        return design_fixed(ch, m=cfg.m, delta=cfg.delta, seed=cfg.seed), [ch]
    chs = draw_channels(ChannelDims(N, K), cfg.mode, SLOTS.get(regime, 1), cfg.seed)
    return synthesize(chs, seed=cfg.seed), chs


def cmd_regimes(cfg: RunConfig) -> int:
    rows = regime_table(cfg.n, cfg.k_max)
    if cfg.format == "json":
        _emit(cfg, _json_text(cfg, "regimes", {"rows": rows}))
    else:
        _emit(cfg, _csv_text(cfg, "regimes", list(rows[0]), rows))
    _say(f"regimes: N={cfg.n}, K=0..{cfg.k_max}: " + ", ".join(r["d_s"] for r in rows))
    return 0


def cmd_design(cfg: RunConfig) -> int:
    design, chs = _make_design(cfg)
    ok, resid, fails = certify(design, chs)
    _emit(cfg, dump_design(design, chs, cfg.mode) + "\n")
    _say(f"design: regime {design.regime}, max residual {resid:.3g}, "
         f"{'certified' if ok else 'FAILED: ' + '; '.join(fails)}")
    return 0 if ok else 1


def cmd_verify(cfg: RunConfig) -> int:
    try:
        with open(cfg.design) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read design file: {exc}") from exc
    design, chs, _ = load_design(text)
    ok, resid, fails = certify(design, chs)
    payload = {"passed": ok, "max_residual": resid, "failures": fails, "regime": design.regime.value}
    _emit(cfg, _json_text(cfg, "verify", payload))
    _say(f"verify: {'passed' if ok else 'FAILED: ' + '; '.join(fails)} (max residual {resid:.3g})")
    return 0 if ok else 1


def cmd_rate(cfg: RunConfig) -> int:
    if cfg.design:
        with open(cfg.design) as fh:
            design, chs, _ = load_design(fh.read())
    else:
        design, chs = _make_design(cfg)
    ok, resid, fails = certify(design, chs)
    if not ok:
        _say("rate: design failed verification: " + "; ".join(fails))
        return 1
    grid = sorted(cfg.snr_db)
    reports = rate_curve(design, chs, grid, cfg.trials, cfg.seed or 0)
    rows = [{"snr_db": db, **asdict(r)} for db, r in zip(grid, reports)]
    slope = None
    if len(grid) >= 3 and grid[-1] - grid[0] >= 20:
        slope = sdof_slope(reports[-min(len(reports), cfg.fit_top):] if len(grid) >= cfg.fit_top
                           else reports)
    columns = ["snr_db", "P", "I_vy", "I_vz", "secure_rate", "per_slot_rate", "slots", "error_rate", "Q"]
    if cfg.format == "json":
        payload = {"rows": rows, "slope": asdict(slope) if slope else None, "regime": design.regime.value}
        _emit(cfg, _json_text(cfg, "rate", payload))
    else:
        _emit(cfg, _csv_text(cfg, "rate", columns, rows))
    _say(f"rate: regime {design.regime}" + (f", fitted slope {slope.slope:.4f}" if slope else ""))
    return 0


def cmd_decode_demo(cfg: RunConfig) -> int:
    N, K = cfg.n, _single_k(cfg)
    regime = classify_regime(N, K)
    if regime not in (RegimeClass.R2, RegimeClass.R3):
        raise UsageError(f"decode-demo needs N/2 <= K <= 4N/3, got regime {regime}")
    ch = draw_channels(ChannelDims(N, K), "fixed", 1, cfg.seed)[0]
    if N == 2 and K == 2:
        design = design_2222(ch, m=cfg.m, delta=cfg.delta)
    else:
        design = design_fixed(ch, m=cfg.m, delta=cfg.delta, seed=cfg.seed)
    if design.l == 0:
        raise UsageError(f"(N, K) = ({N}, {K}) has no PAM part to decode")
    db = cfg.snr_db[-1]
    P = db_to_power(db)
    pam = design.pam_config(P, cfg.q)
    pe = error_probability(design, P, cfg.trials, cfg.seed, Q=pam.Q, decoder=cfg.decoder)
    payload = {
        "error_rate": pe,
        "leakage_bits": exact_pam_leakage(pam.Q, design.pam_streams),
        "dims": {"M": design.M, "M_S": design.M_S},
        "Q": pam.Q,
        "a": pam.a,
        "snr_db": db,
        "trials": cfg.trials,
    }
    _emit(cfg, _json_text(cfg, "decode-demo", payload))
    _say(f"decode-demo: N={N} K={K} Q={pam.Q} at {db:g} dB, error rate {pe:.4g}")
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    rep = sweep(cfg.n, parse_k_range(cfg.k), cfg.snr_db, cfg.mode, cfg.seed, cfg.fit_top,
                cfg.trials, cfg.m, cfg.delta)
    if cfg.format == "json":
        _emit(cfg, _json_text(cfg, "sweep", json.loads(rep.to_json())))
    else:
        buf = "# " + json.dumps(_header(cfg, "sweep"), sort_keys=True) + "\n" + rep.to_csv()
        _emit(cfg, buf)
    bad = [r for r in rep.rows if r.status.startswith(("error", "verification"))]
    _say(f"sweep: {len(rep.rows)} points, {len(bad)} failed")
    return 1 if any(r.status.startswith("verification") for r in rep.rows) else 0


HANDLERS = {
    "regimes": cmd_regimes,
    "design": cmd_design,
    "verify": cmd_verify,
    "rate": cmd_rate,
    "decode-demo": cmd_decode_demo,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdof-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"sdof-lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default settings")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="write machine output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"))
    sys_args = argparse.ArgumentParser(add_help=False)
    sys_args.add_argument("--n", type=int)
    sys_args.add_argument("--k", help="K, a range lo..hi, or a comma list")
    sys_args.add_argument("--mode", choices=("fixed", "fading"))
    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--snr-db", dest="snr_db", help="power grid in dB, comma separated")
    sim.add_argument("--trials", type=int)
    sim.add_argument("--m", type=int)
    sim.add_argument("--delta", type=float)
    sim.add_argument("--fit-top", dest="fit_top", type=int)

    r = sub.add_parser("regimes", parents=[common], help="closed-form d_s and bounds for K = 0..k-max")
    r.add_argument("--n", type=int)
    r.add_argument("--k-max", dest="k_max", type=int)
    sub.add_parser("design", parents=[common, sys_args, sim], help="synthesize and save a design")
    v = sub.add_parser("verify", parents=[common], help="re-certify a saved design")
    v.add_argument("--design")
    ra = sub.add_parser("rate", parents=[common, sys_args, sim], help="secure rate over a power grid")
    ra.add_argument("--design")
    dd = sub.add_parser("decode-demo", parents=[common, sys_args, sim], help="PAM decoding error rate")
    dd.add_argument("--q", type=int)
    dd.add_argument("--decoder", choices=("auto", "joint", "per-antenna"))
    sub.add_parser("sweep", parents=[common, sys_args, sim], help="theory vs measured slope over K")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        return HANDLERS[args.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _say(f"sdof-lab: error: {exc}")
        return 2
    except (SdofLabError, OSError) as exc:
        _say(f"sdof-lab: {type(exc).__name__}: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
