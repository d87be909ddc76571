"""Command-line front end.

    abcdwaves stationary --beta 1 --branch plus --out runs/st
    abcdwaves fast-base --lam 1.5
    abcdwaves continue-slow --beta 0.5 --lambda-max 0.6
    abcdwaves continue-fast --lam 1.5 --k 0.5
    abcdwaves fronts --mode slow --beta 0.5
    abcdwaves verify

Every numeric flag may also come from ``--config FILE`` (flat key=value lines,
``#`` comments); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    stationary_identities,
    fast_front_limit,
    fast_front_obstruction,
    reduced_obstruction_fast,
    slow_front_excluded,
    threshold_constants,
)
from .continuation import Branch, StepSettings, Tolerances, continue_fast, continue_slow
from .discretize import DEFAULT_ORDER, Grid, derivative
from .model import (
    SlowFamily,
    WaveProfile,
    abcd_residual,
    boussinesq_fast_profile,
    crest_lower_bound,
    fast_base_grid,
    hamiltonian,
    impulse,
    phi,
    stationary_exact,
    stationary_first_integral,
)
from .solver import NewtonError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4
SCHEMA = 1
FORMATS = ("csv", "json", "gnuplot-dat")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    values: dict
    out: Path
    formats: tuple = ("csv", "json")
    extra: dict = field(default_factory=dict)

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v


# -- config handling -------------------------------------------------------------

_FLOAT_KEYS = {"beta", "lam", "lambda_max", "k", "s_max", "L", "gap_tol", "stag_tol", "N_max", "tail_tol",
               "initial_step", "max_step", "lam_min", "lam_max"}
_INT_KEYS = {"n", "order", "scan_n", "samples", "max_points"}
_STR_KEYS = {"branch", "mode", "format", "out"}
_BOOL_KEYS = {"verify"}


def parse_config_file(path: str | Path) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key in _FLOAT_KEYS:
            try:
                out[key] = float(val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {key} must be a number") from exc
        elif key in _INT_KEYS:
            try:
                out[key] = int(val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {key} must be an integer") from exc
        elif key in _BOOL_KEYS:
            out[key] = val.lower() in ("1", "true", "yes", "on")
        elif key in _STR_KEYS:
            out[key] = val
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    return out


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _finite_pos(cfg: RunConfig, key: str):
    v = cfg.get(key)
    _require(v is not None and math.isfinite(v) and v > 0, f"{key} must be a positive finite number")
    return v


def validate(cfg: RunConfig) -> None:
    """Reject invalid configurations before any computation."""
    v = cfg.values
    for key in ("L", "gap_tol", "stag_tol", "N_max", "tail_tol", "initial_step", "max_step"):
        if v.get(key) is not None:
            _finite_pos(cfg, key)
    if v.get("n") is not None:
        _require(v["n"] >= 16, "n must be at least 16")
    if v.get("order") is not None:
        _require(v["order"] in (2, 4), "order must be 2 or 4")
    for f in cfg.formats:
        _require(f in FORMATS, f"unknown format {f!r}; choose from {', '.join(FORMATS)}")
    c = cfg.command
    if c in ("stationary", "continue-slow"):
        _finite_pos(cfg, "beta")
    if c == "stationary":
        _require(cfg.get("branch", "plus") in ("plus", "minus", "+", "-"), "branch must be plus or minus")
    if c in ("fast-base", "continue-fast"):
        lam = cfg.get("lam")
        _require(lam is not None and math.isfinite(lam) and lam > 1, "lam must exceed 1")
    if c == "continue-fast":
        k = cfg.get("k")
        _require(k is not None and 0 < k < cfg.get("lam"), "k must lie in (0, lam)")
        if v.get("s_max") is not None:
            _finite_pos(cfg, "s_max")
    if c == "continue-slow" and v.get("lambda_max") is not None:
        _finite_pos(cfg, "lambda_max")
    if c == "fronts":
        _require(cfg.get("mode") in ("slow", "fast"), "mode must be slow or fast")
        if cfg.get("mode") == "slow":
            _finite_pos(cfg, "beta")
        else:
            lo, hi = cfg.get("lam_min", 1.0), cfg.get("lam_max", 10.0)
            _require(1 <= lo < hi and math.isfinite(hi), "need 1 <= lam_min < lam_max")
        if v.get("scan_n") is not None:
            _require(v["scan_n"] >= 1, "scan_n must be positive")
        if v.get("samples") is not None:
            _require(v["samples"] >= 1, "samples must be positive")


# -- writers --------------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: non-finite floats become null, numpy scalars become Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, payload: dict) -> None:
    body = {"schema": SCHEMA, **payload}
    path.write_text(json.dumps(_clean(body), indent=2, sort_keys=False, allow_nan=False) + "\n")


def write_profile(base: Path, x, u, eta, formats) -> list[Path]:
    written = []
    rows = np.column_stack([x, u, eta])
    if "csv" in formats:
        p = base.with_suffix(".csv")
        np.savetxt(p, rows, fmt="%.17g", delimiter=",", header="x,u,eta", comments="")
        written.append(p)
    if "gnuplot-dat" in formats:
        p = base.with_suffix(".dat")
        np.savetxt(p, rows, fmt="%.17g", delimiter=" ", header="x u eta", comments="# ")
        written.append(p)
    return written


def _log(out: Path, argv, status: str) -> None:
    stamp = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    with open(out / "run.log", "a") as fh:
        fh.write(f"{stamp} abcdwaves {__version__} argv={' '.join(argv)} status={status}\n")


def branch_payload(branch: Branch) -> dict:
    pts = []
    for p in branch.points:
        d = p.diagnostics
        pts.append({
            "param": p.param, "u0": d.u0, "eta0": d.eta0, "residual": d.residual,
            "ellipticity_gap": d.ellipticity_gap, "stagnation_gap": d.stagnation_gap,
            "nodal": dict(d.nodal), "N": d.blowup_N, "decay_rate": d.decay_rate,
            "eta0_bound": d.eta_bound, "half_length": p.profile.grid.half_length, "n": p.profile.grid.n,
        })
    return {
        "kind": branch.kind,
        "info": {k: v for k, v in branch.info.items()},
        "points": pts,
        "termination": {"reason": branch.termination.reason.value, "detail": branch.termination.detail},
    }


# -- commands ------------------------------------------------------------------------

def _grid(cfg: RunConfig, default_L: float, default_n: int = 2048) -> Grid:
    return Grid(cfg.get("L", default_L), cfg.get("n", default_n))


def cmd_stationary(cfg: RunConfig) -> int:
    beta = cfg.get("beta")
    branch = cfg.get("branch", "plus")
    order = cfg.get("order", DEFAULT_ORDER)
    grid = _grid(cfg, 30.0 * beta)
    prof = stationary_exact(beta, branch, grid)
    res = float(max(np.max(np.abs(r)) for r in abcd_residual(prof, order)))
    fi = float(np.max(np.abs(stationary_first_integral(prof, beta, order))))
    app = stationary_identities(prof, branch, beta, order)
    write_profile(cfg.out / "profile", grid.x, prof.u, prof.eta, cfg.formats)
    report = {
        "command": "stationary", "beta": beta, "branch": app.branch, "L": grid.half_length, "n": grid.n,
        "order": order, "u0": float(prof.u[0]), "eta0": float(prof.eta[0]),
        "abcd_residual": res, "first_integral": fi,
        "identities": {"combination": app.combination, "combination_ode": app.combination_ode, "steady_kdv": app.kdv},
        "hamiltonian": hamiltonian(prof), "impulse": impulse(prof),
    }
    status = EXIT_OK
    if cfg.get("verify", False):
        checks = {"abcd_residual<1e-8": res < 1e-8, "first_integral<1e-7": fi < 1e-7,
                  "identities<1e-12": app.combination < 1e-12}
        report["verify"] = checks
        status = EXIT_OK if all(checks.values()) else EXIT_VERIFY
    write_json(cfg.out / "diagnostics.json", report)
    print(f"u(0) = {prof.u[0]:.10g}, eta(0) = {prof.eta[0]:.10g}, residual {res:.2e}, first integral {fi:.2e}")
    return status


def cmd_fast_base(cfg: RunConfig) -> int:
    lam = cfg.get("lam")
    base = fast_base_grid(lam)
    grid = Grid(cfg.get("L", base.half_length), cfg.get("n", base.n))
    prof = boussinesq_fast_profile(lam, grid)
    up = derivative(prof.u, grid)
    lo = crest_lower_bound(lam)
    u0 = float(prof.u[0])
    report = {
        "command": "fast-base", "lam": lam, "L": grid.half_length, "n": grid.n,
        "crest": u0, "crest_lower_bound": lo, "crest_upper_bound": lam, "crest_bounds_hold": bool(lo < u0 < lam),
        "first_integral": float(np.max(np.abs(lam * up**2 - phi(prof.u, lam)))),
        "eta_relation": float(np.max(np.abs(prof.eta - prof.u / (lam - prof.u)))),
    }
    write_profile(cfg.out / "profile", grid.x, prof.u, prof.eta, cfg.formats)
    write_json(cfg.out / "diagnostics.json", report)
    print(f"crest u(0) = {u0:.12g} in ({lo:.6g}, {lam:g})")
    return EXIT_OK


def _step_settings(cfg: RunConfig, initial: float, max_step: float) -> StepSettings:
    tol = Tolerances(
        gap_tol=cfg.get("gap_tol", 1e-3), stag_tol=cfg.get("stag_tol", 1e-3),
        N_max=cfg.get("N_max", 1e6), tail_tol=cfg.get("tail_tol", 1e-8),
    )
    return StepSettings(
        initial_step=cfg.get("initial_step", initial), max_step=cfg.get("max_step", max_step),
        half_length=cfg.get("L"), n=cfg.get("n"), order=cfg.get("order", DEFAULT_ORDER),
        max_points=cfg.get("max_points", 400), tolerances=tol,
    )


def _emit_branch(cfg: RunConfig, branch: Branch) -> None:
    write_json(cfg.out / "branch.json", branch_payload(branch))
    pdir = cfg.out / "points"
    pdir.mkdir(exist_ok=True)
    for i, p in enumerate(branch.points):
        write_profile(pdir / f"point_{i:04d}", p.profile.grid.x, p.profile.u, p.profile.eta,
                      [f for f in cfg.formats if f != "json"] or ["csv"])
    print(f"{len(branch.points)} points, furthest parameter {branch.furthest:.8g}, "
          f"termination {branch.termination.reason.value}: {branch.termination.detail}")


def cmd_continue_slow(cfg: RunConfig) -> int:
    beta = cfg.get("beta")
    branch = continue_slow(beta, cfg.get("lambda_max"), _step_settings(cfg, 0.02, 0.05))
    _emit_branch(cfg, branch)
    return EXIT_OK


def cmd_continue_fast(cfg: RunConfig) -> int:
    branch = continue_fast(cfg.get("lam"), cfg.get("k"), cfg.get("s_max"), _step_settings(cfg, 0.002, 0.01))
    _emit_branch(cfg, branch)
    return EXIT_OK


def cmd_fronts(cfg: RunConfig) -> int:
    if cfg.get("mode") == "slow":
        beta = cfg.get("beta")
        excluded, scan = slow_front_excluded(beta, cfg.get("scan_n", 10_000))
        report = {
            "command": "fronts", "mode": "slow", "beta": beta, "t": scan.t, "z_max": scan.z_max,
            "scan_n": scan.scan_n, "max_G": scan.max_G, "argmax_z": scan.argmax_z, "excluded": excluded,
            "thresholds": [{"name": th.name, "reported": th.reported, "recomputed": th.recomputed,
                            "agrees_to_1e-2": th.agrees} for th in threshold_constants()],
        }
        print(f"t = {scan.t:.6g}: max G on (0, 1/t^2) = {scan.max_G:.6g}; fronts excluded: {excluded}")
    else:
        lo, hi = cfg.get("lam_min", 1.0), cfg.get("lam_max", 10.0)
        m = cfg.get("samples", 100)
        lams = lo + (hi - lo) * np.arange(1, m + 1) / m
        rows = []
        for lam in lams:
            f = fast_front_limit(float(lam))
            rows.append({"lam": float(lam), "ubar": f.ubar, "etabar": f.etabar,
                         "obstruction": fast_front_obstruction(float(lam)),
                         "reduced": reduced_obstruction_fast(float(lam))})
        excluded = all(r["obstruction"] < 0 for r in rows)
        report = {"command": "fronts", "mode": "fast", "lam_min": lo, "lam_max": hi, "samples": rows,
                  "excluded": excluded}
        print(f"fast obstruction negative at all {m} samples: {excluded}")
    write_json(cfg.out / "fronts.json", report)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .verification import run_all

    results = run_all(verbose=True)
    write_json(cfg.out / "verify.json", {
        "command": "verify",
        "results": [{"criterion": r.criterion, "name": r.name, "passed": r.passed, "detail": r.detail}
                    for r in results],
        "all_passed": all(r.passed for r in results),
    })
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


COMMANDS = {
    "stationary": cmd_stationary,
    "fast-base": cmd_fast_base,
    "continue-slow": cmd_continue_slow,
    "continue-fast": cmd_continue_fast,
    "fronts": cmd_fronts,
    "verify": cmd_verify,
}


# -- argument parsing -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; command-line flags override it")
    common.add_argument("--out", help="output directory (default: abcd-out/<command>)")
    common.add_argument("--format", action="append", choices=FORMATS,
                        help="output format; repeatable (default: csv and json)")
    common.add_argument("--L", dest="L", type=float, help="half-length of the truncated domain")
    common.add_argument("--n", type=int, help="grid points on the half-line")
    common.add_argument("--order", type=int, help="finite-difference order, 2 or 4 (default 4)")

    tol = argparse.ArgumentParser(add_help=False)
    tol.add_argument("--gap-tol", dest="gap_tol", type=float)
    tol.add_argument("--stag-tol", dest="stag_tol", type=float)
    tol.add_argument("--N-max", dest="N_max", type=float)
    tol.add_argument("--tail-tol", dest="tail_tol", type=float)
    tol.add_argument("--initial-step", dest="initial_step", type=float)
    tol.add_argument("--max-step", dest="max_step", type=float)
    tol.add_argument("--max-points", dest="max_points", type=int)

    p = argparse.ArgumentParser(prog="abcdwaves", description="Solitary waves of abcd Boussinesq systems.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stationary", parents=[common], help="closed-form stationary wave and its diagnostics")
    s.add_argument("--beta", type=float)
    s.add_argument("--branch", choices=("plus", "minus", "+", "-"))
    s.add_argument("--verify", action="store_true", default=None)

    s = sub.add_parser("fast-base", parents=[common], help="classical supercritical wave by quadrature")
    s.add_argument("--lam", type=float)

    s = sub.add_parser("continue-slow", parents=[common, tol], help="trace the slow branch in lam")
    s.add_argument("--beta", type=float)
    s.add_argument("--lambda-max", dest="lambda_max", type=float)

    s = sub.add_parser("continue-fast", parents=[common, tol], help="trace the fast branch in s")
    s.add_argument("--lam", type=float)
    s.add_argument("--k", type=float)
    s.add_argument("--s-max", dest="s_max", type=float)

    s = sub.add_parser("fronts", parents=[common], help="monotone-front nonexistence scans")
    s.add_argument("--mode", choices=("slow", "fast"))
    s.add_argument("--beta", type=float)
    s.add_argument("--scan-n", dest="scan_n", type=int)
    s.add_argument("--lam-min", dest="lam_min", type=float)
    s.add_argument("--lam-max", dest="lam_max", type=float)
    s.add_argument("--samples", type=int)

    sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    return p


def make_config(args: argparse.Namespace) -> RunConfig:
    values = parse_config_file(args.config) if args.config else {}
    skip = {"command", "config", "format", "out"}
    for key, val in vars(args).items():
        if key not in skip and val is not None:
            values[key] = val
    out = Path(args.out or values.pop("out", None) or Path("abcd-out") / args.command)
    fmt = values.pop("format", None)
    formats = tuple(args.format) if args.format else ((fmt,) if fmt else ("csv", "json"))
    cfg = RunConfig(args.command, values, out, formats)
    validate(cfg)
    return cfg


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = make_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg.out.mkdir(parents=True, exist_ok=True)
    try:
        status = COMMANDS[cfg.command](cfg)
    except (NewtonError, RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        _log(cfg.out, argv, "numerical-failure")
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        _log(cfg.out, argv, "numerical-failure")
        return EXIT_NUMERIC
    _log(cfg.out, argv, f"exit-{status}")
    return status


if __name__ == "__main__":
    raise SystemExit(main())
