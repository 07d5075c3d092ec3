"""Command-line entry point: ``coopfront <subcommand> [--config PATH] [--out DIR]``.

Every subcommand prints a JSON document on stdout. Exit codes: 0 success,
1 failed reproduction, 2 config/usage error, 3 validation failure,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .equilibrium import solve_equilibrium
from .errors import DomainError, InvariantViolation, NumericalFailure
from .experiments import (
    EXIT_OK,
    ConfigError,
    ValidationFailure,
    to_plain,
    write_table,
    error_payload,
    exit_code_for,
    load_config,
    run_experiment,
    run_sweep,
    write_json,
)
from .model import validate
from .recipes import THEOREMS, reproduce
from .semiwave import SemiWaveSettings, solve_semiwave, solve_speed
from .spectral import critical_length, critical_speed, principal_eigenvalue, tail_rate

_FAILURES = (ConfigError, ValidationFailure, DomainError, NumericalFailure, InvariantViolation)


def _emit(payload):
    print(json.dumps(to_plain(payload), indent=2, sort_keys=True))


def _config(args):
    if args.config is None:
        raise ConfigError("--config is required for this subcommand")
    cfg = load_config(args.config)
    if getattr(args, "format", None):
        raw = dict(cfg.raw)
        raw["outputs"] = {**raw["outputs"], "format": args.format}
        cfg = load_config(raw)
    return cfg


def _cmd_validate(args):
    cfg = _config(args)
    report = validate(cfg.params, require_H=bool(cfg.raw["require_H"]))
    _emit({"valid": not report, "violations": report})
    if report:
        raise ValidationFailure(report)
    return EXIT_OK


def _cmd_equilibrium(args):
    cfg = _config(args)
    cfg.check()
    eq = solve_equilibrium(cfg.params)
    r1, r2 = eq.residual(cfg.params)
    _emit({"u_star": eq.u_star, "v_star": eq.v_star, "residual": max(abs(r1), abs(r2))})
    return EXIT_OK


def _cmd_spectral(args):
    cfg = _config(args)
    cfg.check()
    params = cfg.params
    l_star = critical_length(params)
    length = args.length if args.length is not None else cfg.raw["initial"]["h0"]
    payload = {
        "s_star": critical_speed(params),
        "l_star": l_star,
        "speed": args.speed,
        "mu_hat1": tail_rate(params, args.speed),
        "half_length": length,
        "lambda0": principal_eigenvalue(params, length),
    }
    _write_or_emit(args, "spectral.json", payload)
    return EXIT_OK


def _write_or_emit(args, name, payload):
    _emit(payload)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / name, payload)


def _cmd_semiwave(args):
    cfg = _config(args)
    cfg.check()
    if args.speed is None:
        raise ConfigError("--speed is required for semiwave")
    num = cfg.numerics
    settings = SemiWaveSettings(L=num["semiwave_L"], N=num["semiwave_N"],
                                spacing=num["semiwave_spacing"], method=args.method)
    sol = solve_semiwave(cfg.params, args.speed, settings)
    _write_or_emit(args, "semiwave.json", sol.summary())
    if args.out:
        write_table(Path(args.out) / "semiwave_profile",
                    {"xi": sol.xi, "phi": sol.phi, "psi": sol.psi}, cfg.outputs["format"])
    return EXIT_OK


def _cmd_speed(args):
    cfg = _config(args)
    cfg.check()
    res = solve_speed(cfg.params, cfg.numerics["speed_tol"], cfg.semiwave_settings())
    payload = {
        "s_mu_rho": res.s_mu_rho,
        "bracket_width": res.bracket_width,
        "f_values": [list(p) for p in res.f_values],
        "semiwave": res.solution.summary(),
    }
    _write_or_emit(args, "speed.json", payload)
    return EXIT_OK


def _cmd_simulate(args):
    source = args.config
    if source is None:
        raise ConfigError("--config is required for simulate")
    if args.format:
        cfg = load_config(source)
        raw = dict(cfg.raw)
        raw["outputs"] = {**raw["outputs"], "format": args.format}
        source = raw
    code = run_experiment(source, args.out)
    if code != EXIT_OK:
        _emit(run_experiment.last_error)
        return code
    out = Path(args.out) if args.out else Path(load_config(source).outputs["dir"])
    _emit({"out": str(out), "verdict": json.loads((out / "verdict.json").read_text())})
    return EXIT_OK


def _cmd_sweep(args):
    if args.config is None:
        raise ConfigError("--config is required for sweep")
    rows = run_sweep(args.config, args.out)
    _emit({"rows": rows})
    return EXIT_OK


def _cmd_reproduce(args):
    report = reproduce(args.theorem)
    _write_or_emit(args, f"reproduce_{args.theorem}.json", report)
    return EXIT_OK if report["pass"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopfront", description="Cooperative free-boundary fronts: spectra, semi-waves, simulations.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment config (JSON)")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), help="table format for outputs")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="check model assumptions")
    sub.add_parser("equilibrium", parents=[common], help="positive equilibrium")
    p = sub.add_parser("spectral", parents=[common], help="critical speed, tail rate, eigenvalue")
    p.add_argument("--speed", type=float, default=0.0)
    p.add_argument("--length", type=float, default=None, help="half-length (default: h0)")
    p = sub.add_parser("semiwave", parents=[common], help="semi-wave profile at a fixed speed")
    p.add_argument("--speed", type=float, default=None)
    p.add_argument("--method", choices=("newton", "relax"), default="newton")
    sub.add_parser("speed", parents=[common], help="asymptotic spreading speed")
    sub.add_parser("simulate", parents=[common], help="full free-boundary run with artifacts")
    sub.add_parser("sweep", parents=[common], help="parameter sweep (config is a sweep file)")
    p = sub.add_parser("reproduce", parents=[common], help="bundled pass/fail recipe")
    p.add_argument("theorem", choices=THEOREMS)
    return parser


_COMMANDS = {
    "validate": _cmd_validate,
    "equilibrium": _cmd_equilibrium,
    "spectral": _cmd_spectral,
    "semiwave": _cmd_semiwave,
    "speed": _cmd_speed,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "reproduce": _cmd_reproduce,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _FAILURES as exc:
        code = exit_code_for(exc)
        payload = error_payload(exc, code)
        if args.command != "validate":
            _emit(payload)
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            write_json(Path(args.out) / "error.json", payload)
        return code


if __name__ == "__main__":
    sys.exit(main())
