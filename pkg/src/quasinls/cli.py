"""Command line front end.

    quasinls symbols | analyze | approximate | simulate | validate --study NAME

Each run writes ``summary.json`` (with the resolved configuration) and CSV
artifacts to the output directory.  Exit status: 0 success, 1 a validation
threshold was missed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from .analysis import check_conditions, nls_coefficients, scan_resonances
from .approximation import (NLSBlowup, PacketModel, default_envelope_kind, gaussian_envelope, soliton_envelope,
                            soliton_parameters, solve_nls)
from .config import STUDIES, ConfigError, RunConfig, apply_overrides, load_config
from .solver import InstabilityError
from .spectral import GridError, make_grid, sobolev_norm
from .symbols import SymbolError, builtin, describe, verify_hypotheses
from .validation import studies
from .validation.convergence import ConvergenceScenario, StudyError, run_scenario

log = logging.getLogger("quasinls")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _eps_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    if ":" in value:
        return key, [float(v) for v in value.split(":")]
    return key, float(value)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with run settings")
    common.add_argument("--out", dest="output", help="output directory")
    common.add_argument("--symbol", dest="omega", help="dispersion symbol omega (beam, gravity_capillary, ice_cover, poly_sign)")
    common.add_argument("--rho-symbol", dest="rho", help="quadratic symbol rho (defaults to omega)")
    common.add_argument("--param", action="append", type=_param, default=None,
                        help="omega parameter name=value, lists as a:b:c (repeatable)")
    common.add_argument("--rho-param", dest="rho_param", action="append", type=_param, default=None,
                        help="rho parameter name=value (repeatable)")
    common.add_argument("--k0", type=float)
    common.add_argument("--eps", type=_eps_list, help="eps value or comma-separated list")
    common.add_argument("--delta", type=float)
    common.add_argument("--T0", type=float)
    common.add_argument("--amplitude", type=float)
    common.add_argument("--s", type=float, help="Sobolev index of reported norms")
    common.add_argument("--ell", type=int)
    common.add_argument("--dt", type=float)
    common.add_argument("--oversample", type=float)
    common.add_argument("--n-samples", dest="n_samples", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="quasinls", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    sub.add_parser("symbols", parents=[common], help="describe symbols and check their hypotheses")
    sub.add_parser("analyze", parents=[common], help="non-resonance conditions, resonance scan, NLS coefficients")
    ap = sub.add_parser("approximate", parents=[common], help="evolve the envelope and write packet snapshots")
    ap.add_argument("--order", choices=("leading", "corrected"))
    sub.add_parser("simulate", parents=[common], help="run the full system against the NLS approximation")
    vp = sub.add_parser("validate", parents=[common], help="run a validation study")
    vp.add_argument("--study", choices=STUDIES, required=True)
    vp.add_argument("--n-draws", dest="n_draws", type=int)
    return p


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {}
    for name in ("output", "omega", "rho", "k0", "delta", "T0", "amplitude", "s", "ell", "dt", "oversample",
                 "n_samples", "seed", "n_draws", "study", "order"):
        if hasattr(args, name):
            over[name] = getattr(args, name)
    if args.param:
        over["omega_params"] = dict(args.param)
    if args.rho_param:
        over["rho_params"] = dict(args.rho_param)
    if args.eps:
        if len(args.eps) == 1:
            over["eps"] = args.eps[0]
        else:
            over["eps_list"] = args.eps
    return apply_overrides(cfg, over, from_file=bool(args.config))


def _symbols(cfg: RunConfig):
    try:
        omega = builtin(cfg.omega, cfg.omega_params)
        rho = builtin(cfg.rho_name, cfg.rho_param_values)
    except SymbolError as exc:
        raise ConfigError(str(exc)) from exc
    return omega, rho


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items() if k not in ("runtime", "runtimes")}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_summary(outdir: Path, command: str, cfg: RunConfig, passed: bool, result: dict) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    summary = {"command": command, "passed": bool(passed), "seed": cfg.seed, "config": cfg.to_dict(),
               "result": result}
    path = outdir / "summary.json"
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# commands


def cmd_symbols(cfg, outdir):
    omega, rho = _symbols(cfg)
    rep = verify_hypotheses(omega, rho)
    result = {"omega": describe(omega), "rho": describe(rho), "hypotheses": rep.to_dict()}
    return rep.all_pass, result, {}


def cmd_analyze(cfg, outdir):
    omega, rho = _symbols(cfg)
    cond = check_conditions(omega, rho, cfg.k0)
    scan = scan_resonances(omega, cfg.k0, max(20.0, 5 * cfg.k0), 20001, rho=rho)
    result = {"conditions": cond.to_dict(), "resonances": scan.to_dict()}
    if cond["omega_pp_nonzero"].passed and cond["derivation_alternative"].passed:
        result["nls"] = nls_coefficients(omega, rho, cfg.k0).to_dict()
    rows = [{"k": r.k_root, "j1": r.j1, "j2": r.j2, "branch": r.branch, "trivial": r.trivial} for r in scan.roots]
    return cond.all_pass, result, {"resonances.csv": rows}


def _envelope(cfg, coeffs, eps):
    kind = cfg.envelope or default_envelope_kind(coeffs)
    width = 1.0 / soliton_parameters(coeffs, cfg.amplitude)[0] if kind == "sech" else cfg.envelope_width
    grid = make_grid(cfg.k0, eps, width, cfg.oversample, kind, cfg.max_points)
    if kind == "sech":
        return grid, soliton_envelope(grid, eps, coeffs, cfg.amplitude)
    return grid, gaussian_envelope(grid, eps, coeffs, cfg.amplitude, cfg.envelope_width)


def cmd_approximate(cfg, outdir):
    omega, rho = _symbols(cfg)
    coeffs = nls_coefficients(omega, rho, cfg.k0)
    eps = cfg.eps
    grid, A0 = _envelope(cfg, coeffs, eps)
    amp = float(np.max(np.abs(A0.A)))
    nls_dt = min(1e-3, 0.05 / max(abs(coeffs.nu2) * amp**2, 1e-12))
    A = solve_nls(A0, coeffs, cfg.T0, nls_dt)[-1]
    model = PacketModel(omega, rho, coeffs, grid, eps, cfg.order, cfg.delta_value)
    approx = model.build(A)
    lead_full = PacketModel(omega, rho, coeffs, grid, eps, "leading").build(A)
    outdir.mkdir(parents=True, exist_ok=True)
    io.write_pair_physical_csv(outdir / "packet.csv", approx.pair)
    io.write_pair(outdir / "packet.bin", approx.pair)
    diff = approx.u - lead_full.u
    result = {
        "nls": coeffs.to_dict(),
        "grid": grid.to_dict(),
        "t": approx.t,
        "T": A.T,
        "order": cfg.order,
        "mass": A.mass(),
        "packet_norm_hs": sobolev_norm(approx.u, cfg.s),
        "distance_to_nls_packet_hs": sobolev_norm(diff, cfg.s),
    }
    return True, result, {}


def _scenario(cfg, omega, rho):
    return ConvergenceScenario(omega, rho, cfg.k0, amplitude=cfg.amplitude, T0=cfg.T0, s=cfg.s,
                               oversample=cfg.oversample, n_samples=cfg.n_samples, dt=cfg.dt,
                               max_points=cfg.max_points)


def cmd_simulate(cfg, outdir):
    omega, rho = _symbols(cfg)
    rec = run_scenario(_scenario(cfg, omega, rho), cfg.eps)
    rows = [{"t": t, "u_error": a, "pair_error": b}
            for t, a, b in zip(rec.series.times, rec.series.u_errors, rec.series.pair_errors)]
    result = {"eps": rec.eps, "n_points": rec.n_points, "dt": rec.dt, "n_steps": rec.n_steps,
              "sup_u_error": rec.series.sup_u, "sup_pair_error": rec.series.sup_pair,
              "sup_scaled": rec.series.sup_u / rec.eps**1.5}
    timing = [{"eps": rec.eps, "runtime_s": rec.runtime}]
    return True, result, {"errors.csv": rows, "timing.csv": timing}


def cmd_validate(cfg, outdir):
    omega, rho = _symbols(cfg)
    eps_list = cfg.eps_list or None
    if cfg.study == "convergence":
        res, rep = studies.convergence(omega, rho, cfg.k0, eps_list or (0.3, 0.2, 0.14, 0.1), cfg.amplitude,
                                       cfg.T0, cfg.s, cfg.oversample, cfg.n_samples, cfg.dt)
        timing = [{"eps": r.eps, "runtime_s": r.runtime} for r in rep.runs]
        return res.passed, res.data, {"errors.csv": res.rows, "timing.csv": timing}
    if cfg.study == "residual":
        res = studies.residual(omega, rho, cfg.k0, eps_list or (0.2, 0.1, 0.05), delta=cfg.delta_value, s=cfg.s,
                               T0=cfg.T0, oversample=cfg.oversample)
    elif cfg.study == "energy":
        res = studies.energy(omega, rho, cfg.k0, eps_list or (0.1, 0.05), cfg.n_draws, cfg.ell, cfg.seed,
                             delta=cfg.delta_value, oversample=cfg.oversample, weight_mode=cfg.weight_mode or None)
    else:
        res = studies.nf_identity(omega, rho, cfg.k0, cfg.eps, cfg.delta_value, seed=cfg.seed,
                                  weight_mode=cfg.weight_mode or None)
    return res.passed, res.data, {f"{cfg.study}.csv": res.rows}


COMMANDS = {
    "symbols": cmd_symbols,
    "analyze": cmd_analyze,
    "approximate": cmd_approximate,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        _symbols(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(cfg.output)
    try:
        passed, result, tables = COMMANDS[args.command](cfg, outdir)
    except (ConfigError, GridError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StudyError, InstabilityError, NLSBlowup) as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    write_summary(outdir, args.command, cfg, passed, result)
    for name, rows in tables.items():
        if rows:
            io.write_rows(outdir / name, rows)
    status = "passed" if passed else "FAILED"
    print(f"{args.command}: {status}; summary written to {outdir / 'summary.json'}")
    return EXIT_OK if passed else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
