"""Command-line front end.

Every command reads one JSON config, writes CSV (17 significant digits, LF
line endings) to ``--out`` or standard output, and writes a JSON metadata
record next to it. Exit status: 0 success, 1 invalid input, 2 numerical
failure.

Example::

    bpv stance --config case_study.json --price 100
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from bpv import __version__
from bpv._kernels import USE_NUMBA
from bpv.acceptance import ReferenceDistribution, membership_curve, triangular_reference
from bpv.errors import BPVNumericalError, BPVValidationError, ConfigError, ReferenceValidationError
from bpv.market import coexistence_interval, market_report
from bpv.numerics import QuadratureSpec, RootSpec, average_ppv, solve_stance_threshold
from bpv.profile import InvestorProfile, MarketContext, classify_regime, regime_bounds
from bpv.returns import FutureValueModel, ReturnKind, expected_membership, sample_hiroto_curve

log = logging.getLogger("bpv")


# -- configuration ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Tolerances:
    quad_rel: float = 1e-10
    quad_abs: float = 1e-12
    root_x: float = 1e-8
    neutral_eps: float = 1e-9

    @property
    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(self.quad_rel, self.quad_abs)

    @property
    def root(self) -> RootSpec:
        return RootSpec(self.root_x)


@dataclass(frozen=True)
class Sweep:
    start: float
    stop: float
    step: float


@dataclass(frozen=True)
class ReturnsSetup:
    kind: ReturnKind
    future_value: dict[str, Any]
    r_start: float
    r_stop: float
    r_num: int
    scenarios: int

    def model(self) -> FutureValueModel:
        fv = self.future_value
        kind = fv["model"]
        if kind == "point_mass":
            return FutureValueModel.point_mass(fv["value"])
        if kind == "lognormal":
            return FutureValueModel.lognormal(fv["loc"], fv["scale"])
        return FutureValueModel.empirical(fv["values"], fv.get("weights"))

    @property
    def r_grid(self) -> np.ndarray:
        return np.linspace(self.r_start, self.r_stop, self.r_num)


@dataclass(frozen=True)
class RunConfig:
    c0: float
    investors: dict[str, InvestorProfile]
    tolerances: Tolerances = Tolerances()
    rng_seed: int = 0
    scan_step: float = 0.05
    sweep: Sweep | None = None
    returns: ReturnsSetup | None = None
    reference_thresholds: dict[str, float] = field(default_factory=dict)


_TOP_KEYS = {"c0", "investors", "tolerances", "rng_seed", "scan_step", "sweep", "returns",
             "reference_thresholds"}
_INVESTOR_KEYS = {"c_min", "c_max", "alpha", "reference"}
_TOL_KEYS = {"quad_rel", "quad_abs", "root_x", "neutral_eps"}
_SWEEP_KEYS = {"start", "stop", "step"}
_RETURNS_KEYS = {"kind", "future_value", "r_grid", "scenarios"}
_FV_KEYS = {"point_mass": {"model", "value"}, "lognormal": {"model", "loc", "scale"},
            "empirical": {"model", "values", "weights"}}


class _Checker:
    def __init__(self) -> None:
        self.problems: list[str] = []

    def fail(self, path: str, msg: str) -> None:
        self.problems.append(f"{path}: {msg}")

    def keys(self, path: str, obj: Any, allowed: set[str], required: set[str] = frozenset()) -> bool:
        if not isinstance(obj, dict):
            self.fail(path, "must be an object")
            return False
        for k in sorted(set(obj) - allowed):
            self.fail(f"{path}.{k}" if path else k, "unknown key")
        for k in sorted(required - set(obj)):
            self.fail(f"{path}.{k}" if path else k, "missing")
        return True

    def number(self, path: str, v: Any, *, positive: bool = False) -> float | None:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(path, "must be a finite number")
            return None
        if positive and not v > 0:
            self.fail(path, "must be positive")
            return None
        return float(v)

    def integer(self, path: str, v: Any, minimum: int | None = None) -> int | None:
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(path, "must be an integer")
            return None
        if minimum is not None and v < minimum:
            self.fail(path, f"must be at least {minimum}")
            return None
        return v


def _strict_pairs(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for k, v in pairs:
        if k in out:
            raise ConfigError([f"{k}: duplicate key"])
        out[k] = v
    return out


def _reject_constant(name: str) -> Any:
    raise ConfigError([f"non-standard JSON constant {name}"])


def _reference(chk: _Checker, path: str, raw: Any) -> ReferenceDistribution | None:
    if raw == "triangular":
        return triangular_reference()
    if not isinstance(raw, list):
        chk.fail(path, 'must be "triangular" or a list of [beta, value] knots')
        return None
    knots = []
    for i, kn in enumerate(raw):
        if not (isinstance(kn, list) and len(kn) == 2):
            chk.fail(f"{path}[{i}]", "knot must be a [beta, value] pair")
            return None
        b = chk.number(f"{path}[{i}][0]", kn[0])
        v = chk.number(f"{path}[{i}][1]", kn[1])
        if b is None or v is None:
            return None
        knots.append((b, v))
    try:
        return ReferenceDistribution(tuple(knots))
    except ReferenceValidationError as exc:
        chk.fail(path, str(exc))
        return None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration.

    Raises :class:`ConfigError` listing every problem found.
    """
    try:
        raw = json.loads(text, object_pairs_hook=_strict_pairs, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from exc
    chk = _Checker()
    if not chk.keys("", raw, _TOP_KEYS, {"c0", "investors"}):
        raise ConfigError(chk.problems)

    c0 = chk.number("c0", raw["c0"], positive=True) if "c0" in raw else None

    tol = Tolerances()
    if "tolerances" in raw and chk.keys("tolerances", raw["tolerances"], _TOL_KEYS):
        vals = {k: chk.number(f"tolerances.{k}", v, positive=True) for k, v in raw["tolerances"].items()
                if k in _TOL_KEYS}
        if all(v is not None for v in vals.values()):
            tol = Tolerances(**vals)

    investors: dict[str, InvestorProfile] = {}
    if "investors" in raw:
        inv = raw["investors"]
        if not isinstance(inv, dict) or not inv:
            chk.fail("investors", "must be a non-empty object keyed by investor name")
        else:
            for name, spec in inv.items():
                path = f"investors.{name}"
                if not chk.keys(path, spec, _INVESTOR_KEYS, _INVESTOR_KEYS):
                    continue
                c_min = chk.number(f"{path}.c_min", spec.get("c_min"))
                c_max = chk.number(f"{path}.c_max", spec.get("c_max"))
                alpha = chk.number(f"{path}.alpha", spec.get("alpha"))
                ref = _reference(chk, f"{path}.reference", spec.get("reference"))
                if alpha is not None and not 0.0 <= alpha <= 1.0:
                    chk.fail(f"{path}.alpha", "must lie in [0, 1]")
                    alpha = None
                if c_min is not None and c_max is not None and c0 is not None:
                    if not c_min < c0 < c_max:
                        chk.fail(path, f"need c_min < c0 < c_max, got {c_min!r}, {c0!r}, {c_max!r}")
                        continue
                if None in (c_min, c_max, alpha, ref):
                    continue
                investors[name] = InvestorProfile(c_min, c_max, alpha, ref)

    seed = 0
    if "rng_seed" in raw:
        seed = chk.integer("rng_seed", raw["rng_seed"], minimum=0) or 0

    scan_step = 0.05
    if "scan_step" in raw:
        scan_step = chk.number("scan_step", raw["scan_step"], positive=True) or 0.05

    sweep = None
    if "sweep" in raw and chk.keys("sweep", raw["sweep"], _SWEEP_KEYS, _SWEEP_KEYS):
        s = raw["sweep"]
        start = chk.number("sweep.start", s.get("start"))
        stop = chk.number("sweep.stop", s.get("stop"))
        step = chk.number("sweep.step", s.get("step"), positive=True)
        if None not in (start, stop, step):
            if stop < start:
                chk.fail("sweep", "stop must not be below start")
            else:
                sweep = Sweep(start, stop, step)

    returns = None
    if "returns" in raw and chk.keys("returns", raw["returns"], _RETURNS_KEYS, _RETURNS_KEYS):
        returns = _returns_setup(chk, raw["returns"])

    refs: dict[str, float] = {}
    if "reference_thresholds" in raw:
        rt = raw["reference_thresholds"]
        if not isinstance(rt, dict):
            chk.fail("reference_thresholds", "must be an object")
        else:
            for name, v in rt.items():
                num = chk.number(f"reference_thresholds.{name}", v)
                if name not in raw.get("investors", {}):
                    chk.fail(f"reference_thresholds.{name}", "unknown investor")
                elif num is not None:
                    refs[name] = num

    if chk.problems:
        raise ConfigError(chk.problems)
    return RunConfig(c0, investors, tol, seed, scan_step, sweep, returns, refs)


def _returns_setup(chk: _Checker, r: dict[str, Any]) -> ReturnsSetup | None:
    kind = None
    try:
        kind = ReturnKind(r.get("kind"))
    except ValueError:
        chk.fail("returns.kind", 'must be "simple" or "logarithmic"')
    fv = r.get("future_value")
    model = fv.get("model") if isinstance(fv, dict) else None
    if model not in _FV_KEYS:
        chk.fail("returns.future_value.model", f"must be one of {sorted(_FV_KEYS)}")
        fv = None
    elif chk.keys("returns.future_value", fv, _FV_KEYS[model], _FV_KEYS[model] - {"weights"}):
        try:
            ReturnsSetup(ReturnKind.SIMPLE, fv, 0, 1, 2, 1).model()
        except (BPVValidationError, TypeError, KeyError) as exc:
            chk.fail("returns.future_value", str(exc))
            fv = None
    else:
        fv = None
    grid = r.get("r_grid")
    start = stop = num = None
    if chk.keys("returns.r_grid", grid, {"start", "stop", "num"}, {"start", "stop", "num"}):
        start = chk.number("returns.r_grid.start", grid.get("start"))
        stop = chk.number("returns.r_grid.stop", grid.get("stop"))
        num = chk.integer("returns.r_grid.num", grid.get("num"), minimum=1)
        if start is not None and stop is not None and num is not None:
            if num > 1 and not stop > start:
                chk.fail("returns.r_grid", "stop must exceed start")
            if kind is ReturnKind.SIMPLE and start <= -1.0:
                chk.fail("returns.r_grid.start", "simple return rates must exceed -1")
    scenarios = chk.integer("returns.scenarios", r.get("scenarios"), minimum=1)
    if None in (kind, fv, start, stop, num, scenarios):
        return None
    return ReturnsSetup(kind, fv, start, stop, num, scenarios)


# -- output ----------------------------------------------------------------------------------


def _fmt(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def to_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


@dataclass
class Output:
    header: list[str]
    rows: list[list[Any]]
    results: dict[str, Any] = field(default_factory=dict)


# -- commands --------------------------------------------------------------------------------


def _investor(cfg: RunConfig, name: str) -> InvestorProfile:
    if name not in cfg.investors:
        raise ConfigError([f"investors.{name}: no such investor (have {sorted(cfg.investors)})"])
    return cfg.investors[name]


def _context(cfg: RunConfig, args: argparse.Namespace) -> MarketContext:
    if getattr(args, "price", None) is not None:
        return MarketContext(cfg.c0, args.price)
    return MarketContext.from_deviation(cfg.c0, getattr(args, "delta", None) or 0.0)


def cmd_membership(cfg: RunConfig, args: argparse.Namespace) -> Output:
    prof = _investor(cfg, args.investor)
    ctx = _context(cfg, args)
    curve = membership_curve(prof, ctx, args.points)
    sc = curve.scope
    return Output(
        ["p", "mu"],
        [[p, mu] for p, mu in curve.samples],
        {"investor": args.investor, "deviation": ctx.deviation, "scope": [sc.lo, sc.anchor, sc.hi]},
    )


def sweep_grid(cfg: RunConfig, prof: InvestorProfile, sweep: Sweep) -> list[float]:
    """Closed sweep grid with the investor's finite regime bounds spliced in."""
    n = int(math.floor((sweep.stop - sweep.start) / sweep.step + 1e-9))
    pts = {sweep.start + i * sweep.step for i in range(n + 1)} | {sweep.stop}
    pts |= {b for b in regime_bounds(prof, cfg.c0) if math.isfinite(b) and sweep.start <= b <= sweep.stop}
    return sorted(pts)


def cmd_avg_ppv(cfg: RunConfig, args: argparse.Namespace) -> Output:
    prof = _investor(cfg, args.investor)
    base = cfg.sweep or Sweep(-10.0, 10.0, 0.5)
    sweep = Sweep(
        base.start if args.start is None else args.start,
        base.stop if args.stop is None else args.stop,
        base.step if args.step is None else args.step,
    )
    if not sweep.step > 0 or sweep.stop < sweep.start:
        raise ConfigError(["sweep: need step > 0 and stop >= start"])
    rows = []
    for dc in sweep_grid(cfg, prof, sweep):
        ctx = MarketContext.from_deviation(cfg.c0, dc)
        xi = average_ppv(prof, ctx, cfg.tolerances.quadrature)
        rows.append([dc, ctx.market_price, xi, xi - ctx.market_price,
                     classify_regime(prof, cfg.c0, dc).value])
    return Output(["delta", "market_price", "avg_ppv", "gap", "regime"], rows,
                  {"investor": args.investor, "sweep": [sweep.start, sweep.stop, sweep.step]})


def cmd_threshold(cfg: RunConfig, args: argparse.Namespace) -> Output:
    names = [args.investor] if args.investor else list(cfg.investors)
    rows: list[list[Any]] = []
    results: dict[str, Any] = {}
    for name in names:
        prof = _investor(cfg, name)
        res = solve_stance_threshold(prof, cfg.c0, root_spec=cfg.tolerances.root,
                                     quad_spec=cfg.tolerances.quadrature, scan_step=cfg.scan_step)
        for i, c in enumerate(res.crossings):
            rows.append([name, i, c.root, cfg.c0 + c.root, c.bracket[0], c.bracket[1],
                         c.gaps[0], c.gaps[1], c.direction])
        entry: dict[str, Any] = {"thresholds": list(res.roots), "scan_range": list(res.scan_range)}
        if name in cfg.reference_thresholds:
            ref = cfg.reference_thresholds[name]
            entry["reference_threshold"] = ref
            entry["reference_note"] = (
                "externally reported value; not reproduced by this engine "
                f"(difference {res.root - ref:+.6g})"
            )
        results[name] = entry
    header = ["investor", "crossing", "threshold", "market_price", "bracket_lo", "bracket_hi",
              "gap_lo", "gap_hi", "direction"]
    return Output(header, rows, results)


def cmd_stance(cfg: RunConfig, args: argparse.Namespace) -> Output:
    ctx = MarketContext(cfg.c0, args.price)
    rep = market_report(cfg.investors, ctx, cfg.tolerances.neutral_eps, cfg.tolerances.quadrature)
    rows = []
    for name, r in rep.stances.items():
        if r is None:
            rows.append([name, "error", "", ""])
        else:
            rows.append([name, r.stance.value, r.average_ppv, r.gap])
    summary = {"buyers": rep.buyer_count, "sellers": rep.seller_count,
               "neutral": rep.neutral_count, "failed": rep.failed_count,
               "coexistence": rep.coexistence, "errors": rep.errors}
    return Output(["investor", "stance", "avg_ppv", "gap"], rows, summary)


def cmd_coexist(cfg: RunConfig, args: argparse.Namespace) -> Output:
    band = coexistence_interval(_investor(cfg, args.buyer), _investor(cfg, args.seller), cfg.c0,
                                cfg.tolerances.quadrature, cfg.tolerances.root, cfg.scan_step)
    rows = [[lo, hi] for lo, hi in band.intervals]
    return Output(["price_lo", "price_hi"], rows,
                  {"buyer": args.buyer, "seller": args.seller, "empty": band.is_empty})


def cmd_returns(cfg: RunConfig, args: argparse.Namespace) -> Output:
    if cfg.returns is None:
        raise ConfigError(["returns: section required for the returns command"])
    prof = _investor(cfg, args.investor)
    ctx = _context(cfg, args)
    setup = cfg.returns
    n = args.scenarios or setup.scenarios
    seed = cfg.rng_seed if args.seed is None else args.seed
    curve = membership_curve(prof, ctx)
    h = sample_hiroto_curve(curve, setup.model(), setup.kind, setup.r_grid, n, seed)
    mean = expected_membership(h)
    return Output(["r", "expected_rho"], [[r, m] for r, m in zip(h.r_grid, mean)],
                  {"investor": args.investor, "scenarios": n, "seed": seed, "kind": setup.kind.value,
                   "future_value_model": setup.future_value})


COMMANDS = {
    "membership": cmd_membership,
    "avg-ppv": cmd_avg_ppv,
    "threshold": cmd_threshold,
    "stance": cmd_stance,
    "coexist": cmd_coexist,
    "returns": cmd_returns,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    common.add_argument("--out", type=Path, help="CSV output file (default: standard output)")
    common.add_argument("--meta", type=Path,
                        help="metadata JSON file (default: <out>.meta.json, or stderr without --out)")

    parser = argparse.ArgumentParser(prog="bpv", description="Behavioural present value model")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("membership", parents=[common], help="membership curve of one investor")
    p.add_argument("--investor", required=True)
    where = p.add_mutually_exclusive_group()
    where.add_argument("--delta", type=float, help="market price deviation from c0")
    where.add_argument("--price", type=float, help="market price")
    p.add_argument("--points", type=int, default=101)

    p = sub.add_parser("avg-ppv", parents=[common], help="average PPV over a deviation sweep")
    p.add_argument("--investor", required=True)
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--step", type=float)

    p = sub.add_parser("threshold", parents=[common], help="buyer/seller switch points")
    p.add_argument("--investor")

    p = sub.add_parser("stance", parents=[common], help="stance of every investor at a price")
    p.add_argument("--price", type=float, required=True)

    p = sub.add_parser("coexist", parents=[common], help="prices where a buyer and a seller meet")
    p.add_argument("--buyer", required=True)
    p.add_argument("--seller", required=True)

    p = sub.add_parser("returns", parents=[common], help="sampled fuzzy return rates")
    p.add_argument("--investor", required=True)
    where = p.add_mutually_exclusive_group()
    where.add_argument("--delta", type=float)
    where.add_argument("--price", type=float)
    p.add_argument("--scenarios", type=int)
    p.add_argument("--seed", type=int)
    return parser


def _metadata(cfg: RunConfig, cfg_bytes: bytes, args: argparse.Namespace, argv: Sequence[str],
              out: Output) -> dict[str, Any]:
    t = cfg.tolerances
    return {
        "command": args.command,
        "argv": list(argv),
        "config": str(args.config),
        "config_sha256": hashlib.sha256(cfg_bytes).hexdigest(),
        "tolerances": {"quad_rel": t.quad_rel, "quad_abs": t.quad_abs, "root_x": t.root_x,
                       "neutral_eps": t.neutral_eps},
        "scan_step": cfg.scan_step,
        "rng_seed": cfg.rng_seed,
        "version": __version__,
        "numba": USE_NUMBA,
        "rows": len(out.rows),
        "results": out.results,
    }


def run_command(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg_bytes = args.config.read_bytes()
        cfg = parse_config(cfg_bytes.decode("utf-8"))
        if getattr(args, "points", 2) < 2:
            raise ConfigError(["--points: need at least 2"])
        out = COMMANDS[args.command](cfg, args)
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=stderr)
        return 1
    except BPVValidationError as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    except BPVNumericalError as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return 2

    text = to_csv(out.header, out.rows)
    meta = json.dumps(_metadata(cfg, cfg_bytes, args, argv, out), indent=2, sort_keys=True) + "\n"
    if args.out:
        args.out.write_text(text, encoding="utf-8", newline="\n")
    else:
        stdout.write(text)
    meta_path = args.meta or (args.out.with_name(args.out.name + ".meta.json") if args.out else None)
    if meta_path:
        meta_path.write_text(meta, encoding="utf-8", newline="\n")
    else:
        stderr.write(meta)
    return 0


def main() -> None:
    sys.exit(run_command())
