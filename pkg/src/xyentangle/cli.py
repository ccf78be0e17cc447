"""Command-line front end: ``point``, ``scan``, ``scaling``, ``xxfit``, ``oracle``.

Exit codes: 0 success, 2 validation error, 3 every scan point failed,
4 scaling-fit failure, 5 analytic/oracle mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .criticality import (
    FitQualityError,
    ScanGrid,
    ScanRow,
    finite_size_scaling,
    surface_scan,
    xx_amplitude_fit,
)
from .model import ChainSpec, ModelPoint
from .overlap import SuperpositionSpec, maximize_entanglement
from .thermo import QuadratureSpec, thermo_density

SCHEMA_VERSION = 1
CSV_HEADER = ("r", "h", "n", "density", "derivative", "status")
OUTPUT_DIR_ENV = "XYENTANGLE_OUTPUT_DIR"
ORACLE_TRIPWIRE = 1e-6

EXIT_OK, EXIT_USAGE, EXIT_SCAN_FAILED, EXIT_FIT_FAILED, EXIT_ORACLE_MISMATCH = 0, 2, 3, 4, 5


class UsageError(Exception):
    """Invalid flag or config value; maps to exit code 2."""


@dataclass
class RunConfig:
    command: str
    model: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    n: int | None = None
    out: Path | None = None
    fmt: str = "json"
    xi_tol: float = 1e-10
    quad_panels: int = 64
    jobs: int = 1
    extra: dict = field(default_factory=dict)


def fmt_float(v) -> str:
    if v is None:
        return ""
    return f"{float(v):.12g}"


def _parse_floats(text, flag):
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated numbers, got {text!r}") from None


def _parse_axis(values, rng, flag):
    if values is not None and rng is not None:
        raise UsageError(f"give either {flag}-values or {flag}-range, not both")
    if values is not None:
        return _parse_floats(values, f"{flag}-values")
    if rng is not None:
        parts = str(rng).split(":")
        if len(parts) != 3:
            raise UsageError(f"{flag}-range: expected start:stop:count, got {rng!r}")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise UsageError(f"{flag}-range: expected start:stop:count, got {rng!r}") from None
        if count < 1:
            raise UsageError(f"{flag}-range: count must be >= 1")
        return np.linspace(start, stop, count).tolist()
    return []


def _check_point(r, h):
    if r is None:
        raise UsageError("--r is required")
    if h is None:
        raise UsageError("--h is required")
    if not (math.isfinite(r) and 0.0 <= r <= 1.0):
        raise UsageError(f"--r must lie in [0, 1], got {r}")
    if not (math.isfinite(h) and h >= 0.0):
        raise UsageError(f"--h must be finite and >= 0, got {h}")
    return ModelPoint(r, h)


def _check_n(n, flag="--n", hi=None):
    if n is None:
        return None
    if n < 2:
        raise UsageError(f"{flag} must be >= 2, got {n}")
    if hi is not None and n > hi:
        raise UsageError(f"{flag} must be <= {hi}, got {n}")
    return n


def _resolve_out(path):
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=True) + "\n"


# ---------------------------------------------------------------- point


def cmd_point(cfg: RunConfig) -> int:
    m = cfg.model
    point = ModelPoint(m["r"], m["h"])
    mix = None if m.get("alpha") is None else SuperpositionSpec(m["alpha"])
    if cfg.n is None:
        res = thermo_density(point, QuadratureSpec(panels=cfg.quad_panels), xi_tol=cfg.xi_tol)
    else:
        res = maximize_entanglement(point, ChainSpec(cfg.n, m["sector"]), mix, xi_tol=cfg.xi_tol)
    tag = res.accuracy if not res.flat else f"{res.accuracy};flat-objective"
    record = {
        "schema_version": SCHEMA_VERSION,
        "r": point.r,
        "h": point.h,
        "n": cfg.n,
        "sector": None if mix is not None else m["sector"],
        "alpha": None if mix is None else mix.alpha,
        "lambda_max": res.lambda_max,
        "e_log2": res.e_log2,
        "density": res.density,
        "xi_star": res.xi_star,
        "accuracy_tag": tag,
    }
    if cfg.fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(record))
        w.writerow(["" if v is None else (fmt_float(v) if isinstance(v, float) else v) for v in record.values()])
        _emit(buf.getvalue(), cfg.out)
    else:
        _emit(_dumps(record), cfg.out)
    return EXIT_OK


# ---------------------------------------------------------------- scan


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow(
            [
                fmt_float(row.r),
                fmt_float(row.h),
                "inf" if row.n is None else str(row.n),
                fmt_float(row.density),
                fmt_float(row.derivative),
                row.status,
            ]
        )
    return buf.getvalue()


def read_scan_csv(text: str):
    """Parse a scan CSV back into ``ScanRow`` objects."""
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise ValueError(f"unexpected scan header {header}")
    rows = []
    for r, h, n, dens, deriv, status in reader:
        rows.append(
            ScanRow(
                float(r),
                float(h),
                None if n == "inf" else int(n),
                float(dens),
                None if deriv == "" else float(deriv),
                status,
            )
        )
    return rows


def canonical(rows):
    """Rows rounded to the 12 significant digits used on disk."""

    def rd(v):
        return None if v is None else float(fmt_float(v))

    return [ScanRow(rd(x.r), rd(x.h), x.n, rd(x.density), rd(x.derivative), x.status) for x in rows]


def cmd_scan(cfg: RunConfig) -> int:
    g = cfg.grid
    grid = ScanGrid(g["r_values"], g["h_values"], cfg.n, g["sector"], g.get("alpha"))
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunk = max(1, len(grid.points()) // (cfg.jobs * 16))
            rows = surface_scan(grid, g["derivative"], g["step"], lambda f, t: pool.map(f, t, chunksize=chunk))
    else:
        rows = surface_scan(grid, g["derivative"], g["step"])
    if cfg.fmt == "json":
        text = _dumps(
            {
                "schema_version": SCHEMA_VERSION,
                "columns": list(CSV_HEADER),
                "rows": [[x.r, x.h, x.n, x.density, x.derivative, x.status] for x in canonical(rows)],
            }
        )
    else:
        text = rows_to_csv(rows)
    _emit(text, cfg.out)
    failures = sum(1 for x in rows if x.status != "ok")
    if cfg.out is not None:
        meta = {
            "schema_version": SCHEMA_VERSION,
            "command": "scan",
            "version": __version__,
            "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "jobs": cfg.jobs,
            "n": cfg.n,
            "r_count": len(grid.r_values),
            "h_count": len(grid.h_values),
            "rows": len(rows),
            "failures": failures,
        }
        Path(str(cfg.out) + ".meta.json").write_text(_dumps(meta))
    return EXIT_OK if failures < len(rows) else EXIT_SCAN_FAILED


# ---------------------------------------------------------------- fits


def cmd_scaling(cfg: RunConfig) -> int:
    r = cfg.model["r"]
    try:
        fit = finite_size_scaling(r, cfg.extra["n_list"], correction=cfg.extra["correction"])
    except FitQualityError as exc:
        print(f"scaling fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT_FAILED
    report = {
        "schema_version": SCHEMA_VERSION,
        "r": r,
        "h_max": [{"n": n, "h_max": hm} for n, hm in fit.h_max_list],
        "max_slopes": list(fit.max_slopes),
        "amplitude": fit.amplitude,
        "intercept": fit.intercept,
        "correction": fit.correction,
        "correction_coef": fit.correction_coef,
        "plain_amplitude": fit.plain_amplitude,
        "plain_intercept": fit.plain_intercept,
        "thermo_amplitude": fit.thermo_amplitude,
        "nu_estimate": fit.nu_estimate,
        "residual": fit.residual,
    }
    _emit(_dumps(report), cfg.out)
    return EXIT_OK


def cmd_xxfit(cfg: RunConfig) -> int:
    lo, hi = cfg.extra["window"]
    offsets = np.logspace(math.log10(lo), math.log10(hi), cfg.extra["points"])
    fit = xx_amplitude_fit(offsets)
    report = {
        "schema_version": SCHEMA_VERSION,
        "window": [lo, hi],
        "offsets": list(fit.offsets),
        "minus_derivatives": list(fit.derivatives),
        "amplitude": fit.amplitude,
        "expected": fit.expected,
        "intercept": fit.intercept[0],
        "exponent": fit.exponent,
        "nu_estimate": fit.nu_estimate,
        "residual": fit.residual,
        "nonlinear": fit.nonlinear,
    }
    _emit(_dumps(report), cfg.out)
    return EXIT_OK


# ---------------------------------------------------------------- oracle


def cmd_oracle(cfg: RunConfig) -> int:
    from . import oracle as ed

    point = ModelPoint(cfg.model["r"], cfg.model["h"])
    n = cfg.n
    states = ed.lowest_states(point, n)
    sectors = []
    worst = 0.0
    for a, psi, energy, deg in ((0, states.psi0, states.e0, states.degenerate0), (1, states.psi1, states.e1, states.degenerate1)):
        analytic = maximize_entanglement(point, ChainSpec(n, a), xi_tol=cfg.xi_tol)
        sym, sym_xi = ed.symmetric_overlap_max(psi)
        diff = abs(analytic.lambda_max - sym)
        worst = max(worst, diff)
        entry = {
            "sector": a,
            "energy": energy,
            "degenerate": deg,
            "lambda_analytic": analytic.lambda_max,
            "lambda_oracle": sym,
            "abs_diff": diff,
            "xi_analytic": analytic.xi_star,
            "xi_oracle": sym_xi,
        }
        if n <= ed.MAX_N_FULL:
            full = ed.maximize_overlap_full(psi, starts=cfg.extra["starts"])
            entry["lambda_full"] = full.lambda_max
            entry["full_family_gap"] = full.lambda_max - analytic.lambda_max
            entry["multistart_spread"] = full.spread
        if n <= ed.MAX_N_SUBSETS:
            dec = ed.correlator_decomposition(psi, ed.BlochDirection.from_angle(sym_xi))
            entry["subset_partial_sums"] = list(dec.partial_sums)
            entry["overlap_squared"] = dec.direct
        sectors.append(entry)
    report = {
        "schema_version": SCHEMA_VERSION,
        "r": point.r,
        "h": point.h,
        "n": n,
        "sectors": sectors,
        "max_abs_diff": worst,
        "tripwire": ORACLE_TRIPWIRE,
    }
    _emit(_dumps(report), cfg.out)
    return EXIT_ORACLE_MISMATCH if worst > ORACLE_TRIPWIRE else EXIT_OK


# ---------------------------------------------------------------- parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout; scan: scan.csv)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    common.add_argument("--tol-xi", type=float, default=1e-10)
    common.add_argument("--quad-panels", type=int, default=64)
    common.add_argument("--config", help="key=value file; flags override its values")

    parser = _Parser(prog="xyentangle", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def size_flags(p, n_type=int):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--n", type=n_type)
        g.add_argument("--thermo", action="store_true")

    p = sub.add_parser("point", parents=[common], help="entanglement at one (r, h)")
    p.add_argument("--r", type=float)
    p.add_argument("--h", type=float)
    size_flags(p)
    p.add_argument("--sector", type=int, default=0)
    p.add_argument("--alpha", type=float)

    p = sub.add_parser("scan", parents=[common], help="density over an (r, h) grid")
    p.add_argument("--r-values")
    p.add_argument("--r-range", help="start:stop:count")
    p.add_argument("--h-values")
    p.add_argument("--h-range", help="start:stop:count")
    size_flags(p)
    p.add_argument("--sector", type=int, default=0)
    p.add_argument("--alpha", type=float)
    p.add_argument("--derivative", action="store_true")
    p.add_argument("--step", type=float, default=1e-5)

    p = sub.add_parser("scaling", parents=[common], help="finite-size scaling of the slope maximum")
    p.add_argument("--r", type=float)
    p.add_argument("--n", default="64,256,1024,4096")
    p.add_argument("--no-correction", action="store_true")

    p = sub.add_parser("xxfit", parents=[common], help="XX-line divergence amplitude")
    p.add_argument("--window", default="1e-5,1e-3", help="range of 1-h")
    p.add_argument("--points", type=int, default=9)

    p = sub.add_parser("oracle", parents=[common], help="compare with exact diagonalization")
    p.add_argument("--r", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--starts", type=int, default=32)
    return parser


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off", ""}


def read_config(path, subparser):
    """Load ``key=value`` lines into defaults for ``subparser``."""
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config line {lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        dest = key.lstrip("-").replace("-", "_")
        if dest not in actions:
            raise UsageError(f"--config line {lineno}: unknown key {key!r}")
        action = actions[dest]
        if action.nargs == 0:
            low = raw.lower()
            if low not in _TRUE | _FALSE:
                raise UsageError(f"--config line {lineno}: {key} expects a boolean")
            values[dest] = low in _TRUE
        elif action.type is not None:
            try:
                values[dest] = action.type(raw)
            except ValueError:
                raise UsageError(f"--config line {lineno}: bad value for {key}: {raw!r}") from None
        else:
            values[dest] = raw
    return values


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        subparser.set_defaults(**read_config(args.config, subparser))
        args = parser.parse_args(argv)
    return args


def make_config(args) -> RunConfig:
    cmd = args.command
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    if not (0 < args.tol_xi < 1):
        raise UsageError("--tol-xi must lie in (0, 1)")
    if args.quad_panels < 1:
        raise UsageError("--quad-panels must be >= 1")
    fmt = args.format or ("csv" if cmd == "scan" else "json")
    if fmt == "csv" and cmd not in ("scan", "point"):
        raise UsageError(f"--format csv is not supported by {cmd}")
    cfg = RunConfig(cmd, fmt=fmt, xi_tol=args.tol_xi, quad_panels=args.quad_panels, jobs=args.jobs)
    cfg.out = _resolve_out(args.out if args.out is not None or cmd != "scan" else f"scan.{fmt}")

    if cmd in ("point", "scan"):
        cfg.n = None if args.thermo else args.n
        if cfg.n is None and not args.thermo:
            raise UsageError("one of --n or --thermo is required")
        _check_n(cfg.n)
        if args.sector not in (0, 1):
            raise UsageError(f"--sector must be 0 or 1, got {args.sector}")
        if args.alpha is not None:
            if cfg.n is None:
                raise UsageError("--alpha needs a finite --n")
            if not (0.0 <= args.alpha <= math.pi / 2):
                raise UsageError(f"--alpha must lie in [0, pi/2], got {args.alpha}")

    if cmd == "point":
        _check_point(args.r, args.h)
        cfg.model = {"r": args.r, "h": args.h, "sector": args.sector, "alpha": args.alpha}
    elif cmd == "scan":
        r_vals = _parse_axis(args.r_values, args.r_range, "--r")
        h_vals = _parse_axis(args.h_values, args.h_range, "--h")
        if not r_vals:
            raise UsageError("--r-values/--r-range: grid is empty")
        if not h_vals:
            raise UsageError("--h-values/--h-range: grid is empty")
        for flag, vals in (("--r", r_vals), ("--h", h_vals)):
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise UsageError(f"{flag} values must be strictly increasing")
        _check_point(r_vals[0], h_vals[0])
        _check_point(r_vals[-1], h_vals[-1])
        if not (1e-8 <= args.step <= 1e-2):
            raise UsageError("--step must lie in [1e-8, 1e-2]")
        cfg.grid = {
            "r_values": r_vals,
            "h_values": h_vals,
            "sector": args.sector,
            "alpha": args.alpha,
            "derivative": args.derivative,
            "step": args.step,
        }
    elif cmd == "scaling":
        if args.r is None:
            raise UsageError("--r is required")
        if not (0.0 < args.r <= 1.0):
            raise UsageError(f"--r must lie in (0, 1] for scaling (r = 0 uses xxfit), got {args.r}")
        try:
            n_list = [int(t) for t in str(args.n).split(",") if t.strip()]
        except ValueError:
            raise UsageError(f"--n: expected comma-separated integers, got {args.n!r}") from None
        if len(n_list) < 4 or min(n_list) < 2 or max(n_list) < 64 * min(n_list):
            raise UsageError("--n needs >= 4 chain lengths spanning a factor >= 64")
        cfg.model = {"r": args.r}
        cfg.extra = {"n_list": n_list, "correction": None if args.no_correction else "log_over_n"}
    elif cmd == "xxfit":
        win = _parse_floats(args.window, "--window")
        if len(win) != 2 or not (1e-6 <= win[0] < win[1] < 1.0):
            raise UsageError("--window must be lo,hi with 1e-6 <= lo < hi < 1")
        if args.points < 3:
            raise UsageError("--points must be >= 3")
        cfg.extra = {"window": tuple(win), "points": args.points}
    elif cmd == "oracle":
        _check_point(args.r, args.h)
        if args.n is None:
            raise UsageError("--n is required")
        from .oracle import MAX_N_DENSE

        _check_n(args.n, hi=MAX_N_DENSE)
        if args.starts < 0:
            raise UsageError("--starts must be >= 0")
        cfg.n = args.n
        cfg.model = {"r": args.r, "h": args.h}
        cfg.extra = {"starts": args.starts}
    return cfg


COMMANDS = {"point": cmd_point, "scan": cmd_scan, "scaling": cmd_scaling, "xxfit": cmd_xxfit, "oracle": cmd_oracle}


def main(argv=None) -> int:
    try:
        cfg = make_config(parse_args(sys.argv[1:] if argv is None else argv))
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"xyentangle: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
