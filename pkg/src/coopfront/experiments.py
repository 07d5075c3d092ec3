"""Config-driven experiments: single runs and parameter sweeps, with all file I/O.

A config is a JSON object::

    {
      "params":   {"d1": 1, "d2": 1, "a": 1, "b": 2, "c": 2, "d": 1,
                   "mu": 1, "rho": 1,
                   "F_spec": {"kappa": 1, "p": 2}, "G_spec": {"kappa": 1, "p": 2}},
      "require_H": true,
      "initial":  {"h0": 3, "amp_u": 0.5, "amp_v": 0.5, "n": 201},
      "numerics": {"M": 400, "dt": 0.01, "t_end": 60, "sample_every": 0.5, ...},
      "outputs":  {"dir": "out", "snapshots": [15, 60], "format": "csv"}
    }

Missing keys take the defaults below; the resolved config is written to the
run manifest so that the manifest alone reproduces the run.
"""

from __future__ import annotations

import copy
import csv
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import classify, fit_speed_and_drift
from .equilibrium import solve_equilibrium
from .errors import DomainError, InvariantViolation, NumericalFailure
from .fbsolver import TRAJECTORY_COLUMNS, run
from .model import ModelParams, make_initial_preset, validate
from .semiwave import SemiWaveSettings, solve_speed
from .spectral import critical_length, critical_speed, principal_eigenvalue, tail_rate

__all__ = [
    "ConfigError",
    "ValidationFailure",
    "ExperimentConfig",
    "SweepConfig",
    "DEFAULT_CONFIG",
    "load_config",
    "load_sweep",
    "run_experiment",
    "run_sweep",
    "write_json",
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_VALIDATION",
    "EXIT_NUMERICAL",
]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4

DEFAULT_CONFIG = {
    "params": ModelParams().to_dict(),
    "require_H": True,
    "initial": {"h0": 3.0, "amp_u": 0.5, "amp_v": 0.5, "n": 201},
    "numerics": {
        "M": 400,
        "dt": 0.01,
        "t_end": 60.0,
        "sample_every": 0.5,
        "stencil": "third",
        "semiwave_L": None,
        "semiwave_N": None,
        "semiwave_spacing": 0.0025,
        "speed_tol": 1e-6,
        "window_fraction": 0.4,
    },
    "outputs": {"dir": "out", "snapshots": [], "format": "csv"},
}


class ConfigError(ValueError):
    """The config file cannot be parsed or breaks the schema."""


class ValidationFailure(ValueError):
    """The config is well-formed but the model instance violates its assumptions."""

    def __init__(self, report):
        super().__init__("; ".join(report))
        self.report = list(report)


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown field {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"field {where!r} must be an object")
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = value
    return out


def _positive(raw, section, names, integer=False):
    for name in names:
        value = raw[section][name]
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        ok = ok and math.isfinite(value) and value > 0
        if integer:
            ok = ok and float(value).is_integer()
        if not ok:
            kind = "a positive integer" if integer else "a positive number"
            raise ConfigError(f"{section}.{name} must be {kind} (got {value!r})")


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict  # fully resolved

    @property
    def params(self) -> ModelParams:
        return ModelParams.from_dict(self.raw["params"])

    @property
    def numerics(self) -> dict:
        return self.raw["numerics"]

    @property
    def outputs(self) -> dict:
        return self.raw["outputs"]

    def initial(self):
        ini = self.raw["initial"]
        return make_initial_preset(ini["h0"], ini["amp_u"], ini["amp_v"], int(ini["n"]))

    def semiwave_settings(self) -> SemiWaveSettings:
        num = self.numerics
        return SemiWaveSettings(
            L=num["semiwave_L"], N=num["semiwave_N"], spacing=num["semiwave_spacing"]
        )

    def check(self):
        """Raise ValidationFailure if the model instance violates its assumptions."""
        report = validate(self.params, require_H=bool(self.raw["require_H"]))
        if report:
            raise ValidationFailure(report)


def load_config(source) -> ExperimentConfig:
    """Parse a path, JSON string or dict into a resolved, schema-checked config."""
    if isinstance(source, dict):
        data = source
    else:
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    raw = _merge(DEFAULT_CONFIG, data)
    params = raw["params"]
    for name in ("d1", "d2", "a", "b", "c", "d", "mu", "rho"):
        if not isinstance(params[name], (int, float)) or isinstance(params[name], bool):
            raise ConfigError(f"params.{name} must be a number")
    for spec in ("F_spec", "G_spec"):
        for key in ("kappa", "p"):
            if not isinstance(params[spec][key], (int, float)):
                raise ConfigError(f"params.{spec}.{key} must be a number")
    _positive(raw, "initial", ("h0", "amp_u", "amp_v"))
    _positive(raw, "initial", ("n",), integer=True)
    _positive(raw, "numerics", ("dt", "t_end", "sample_every", "semiwave_spacing", "speed_tol"))
    _positive(raw, "numerics", ("M",), integer=True)
    if raw["numerics"]["M"] < 100 or raw["numerics"]["M"] % 2:
        raise ConfigError("numerics.M must be an even integer >= 100")
    if raw["initial"]["n"] < 3:
        raise ConfigError("initial.n must be at least 3")
    if not 0 < raw["numerics"]["window_fraction"] < 1:
        raise ConfigError("numerics.window_fraction must lie in (0, 1)")
    if raw["numerics"]["stencil"] not in ("second", "third"):
        raise ConfigError("numerics.stencil must be 'second' or 'third'")
    for name in ("semiwave_L", "semiwave_N"):
        value = raw["numerics"][name]
        if value is not None and not (isinstance(value, (int, float)) and value > 0):
            raise ConfigError(f"numerics.{name} must be null or positive")
    if raw["outputs"]["format"] not in ("csv", "json"):
        raise ConfigError("outputs.format must be 'csv' or 'json'")
    if not isinstance(raw["outputs"]["snapshots"], list):
        raise ConfigError("outputs.snapshots must be a list of times")
    return ExperimentConfig(raw)


def write_json(path, payload):
    Path(path).write_text(json.dumps(to_plain(payload), indent=2, sort_keys=True) + "\n")


def to_plain(obj):
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_table(path_stem, columns: dict, fmt):
    names = list(columns)
    if fmt == "json":
        write_json(f"{path_stem}.json", {k: [float(v) for v in columns[k]] for k in names})
        return f"{path_stem}.json"
    with open(f"{path_stem}.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*(columns[k] for k in names)):
            writer.writerow([repr(float(v)) for v in row])
    return f"{path_stem}.csv"


def error_payload(exc, code):
    payload = {"exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ValidationFailure):
        payload["violations"] = exc.report
    if isinstance(exc, NumericalFailure) and exc.residual is not None:
        payload["residual"] = repr(exc.residual)
    return payload


def exit_code_for(exc):
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (ValidationFailure, DomainError)):
        return EXIT_VALIDATION
    return EXIT_NUMERICAL


def _experiment(config: ExperimentConfig, out: Path | None):
    """Run everything for one config; returns the summary dict. Writes files if ``out``."""
    params = config.params
    num = config.numerics
    fmt = config.outputs["format"]
    initial = config.initial()
    eq = solve_equilibrium(params)
    s_star = critical_speed(params)
    l_star = critical_length(params)
    speed = solve_speed(params, num["speed_tol"], config.semiwave_settings(), s_star=s_star)
    sw = speed.solution
    traj = run(
        params,
        initial,
        M=int(num["M"]),
        dt=num["dt"],
        t_end=num["t_end"],
        sample_every=num["sample_every"],
        semiwave=sw,
        snapshot_times=config.outputs["snapshots"],
        stencil=num["stencil"],
    )
    verdict = classify(traj, params=params)
    fit = None
    if verdict.kind == "Spreading":
        fit = fit_speed_and_drift(traj, num["window_fraction"])
    spectral = {
        "u_star": eq.u_star,
        "v_star": eq.v_star,
        "s_star": s_star,
        "l_star": l_star,
        "mu_hat1": tail_rate(params, speed.s_mu_rho, eq),
        "lambda0_h0": principal_eigenvalue(params, initial.h0),
    }
    summary = {
        "s_star": s_star,
        "l_star": l_star,
        "s_mu_rho": speed.s_mu_rho,
        "verdict": verdict.kind,
        "s_hat": fit.s_hat if fit else None,
        "h_star_hat": fit.h_star_hat if fit else None,
    }
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "manifest.json", {"package_version": __version__, "config": config.raw,
                                            "steps": traj.metadata["steps"]})
        write_json(out / "spectral.json", spectral)
        write_json(out / "semiwave.json", {
            **sw.summary(),
            "s_mu_rho": speed.s_mu_rho,
            "bracket_width": speed.bracket_width,
            "f_values": [list(p) for p in speed.f_values],
        })
        write_table(out / "semiwave_profile", {"xi": sw.xi, "phi": sw.phi, "psi": sw.psi}, fmt)
        write_table(out / "trajectory", {k: traj.columns[k] for k in TRAJECTORY_COLUMNS}, fmt)
        if traj.snapshots:
            snapdir = out / "snapshots"
            snapdir.mkdir(exist_ok=True)
            for t, (x, u, v) in sorted(traj.snapshots.items()):
                write_table(snapdir / f"snapshot_t{t:g}", {"x": x, "u": u, "v": v}, fmt)
        write_json(out / "verdict.json", verdict.to_dict())
        if fit is not None:
            write_json(out / "fit.json", fit.to_dict())
    return summary


def run_experiment(config_source, out_dir=None) -> int:
    """Run one experiment and write its artifacts; returns a process exit code.

    Failures produce ``error.json`` in the output directory (when one can be
    determined) and the matching exit code: 2 config, 3 validation, 4 numerics.
    """
    out = Path(out_dir) if out_dir is not None else None
    try:
        config = load_config(config_source)
        if out is None:
            out = Path(config.outputs["dir"])
        config.check()
        _experiment(config, out)
    except (ConfigError, ValidationFailure, DomainError, NumericalFailure, InvariantViolation) as exc:
        code = exit_code_for(exc)
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            write_json(out / "error.json", error_payload(exc, code))
        run_experiment.last_error = error_payload(exc, code)
        return code
    run_experiment.last_error = None
    return EXIT_OK


run_experiment.last_error = None


# --- sweeps -----------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    base: ExperimentConfig
    axes: tuple  # ((path, (values...)), ...)
    max_parallel: int = 1
    max_points: int = 1000

    def points(self):
        paths = [p for p, _ in self.axes]
        for combo in itertools.product(*(vals for _, vals in self.axes)):
            yield dict(zip(paths, combo))


def _lookup(raw, path):
    node = raw
    keys = path.split(".")
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"sweep axis {path!r} does not name a config field")
        node = node[key]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise ConfigError(f"sweep axis {path!r} does not name a config field")
    return node, keys[-1]


def load_sweep(source) -> SweepConfig:
    if isinstance(source, dict):
        data = source
    else:
        try:
            data = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read sweep config: {exc}") from exc
    unknown = set(data) - {"base", "axes", "max_parallel", "max_points"}
    if unknown:
        raise ConfigError(f"unknown sweep fields {sorted(unknown)}")
    base = load_config(data.get("base", {}))
    axes = []
    for axis in data.get("axes", []):
        if not isinstance(axis, dict) or set(axis) != {"path", "values"}:
            raise ConfigError("each axis needs exactly 'path' and 'values'")
        _lookup(base.raw, axis["path"])
        if not isinstance(axis["values"], list) or not axis["values"]:
            raise ConfigError(f"axis {axis['path']!r} needs a non-empty value list")
        axes.append((axis["path"], tuple(axis["values"])))
    max_parallel = data.get("max_parallel", 1)
    max_points = data.get("max_points", 1000)
    if not (isinstance(max_parallel, int) and max_parallel > 0):
        raise ConfigError("max_parallel must be a positive integer")
    size = math.prod(len(v) for _, v in axes)
    if size > max_points:
        raise ConfigError(f"sweep has {size} points, above the cap {max_points}")
    return SweepConfig(base, tuple(axes), max_parallel, max_points)


def _sweep_point(args):
    index, base_raw, deltas = args
    raw = copy.deepcopy(base_raw)
    for path, value in deltas.items():
        node, key = _lookup(raw, path)
        node[key] = value
    row = {"index": index, **deltas}
    try:
        config = load_config(raw)
        config.check()
        row.update(_experiment(config, None))
        row["error"] = ""
    except (ConfigError, ValidationFailure, DomainError, NumericalFailure, InvariantViolation) as exc:
        row.update({k: None for k in ("s_star", "l_star", "s_mu_rho", "verdict", "s_hat", "h_star_hat")})
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


SWEEP_COLUMNS = ("s_star", "l_star", "s_mu_rho", "verdict", "s_hat", "h_star_hat", "error")


def run_sweep(source, out_dir=None) -> list[dict]:
    """Evaluate every grid point; rows come back (and are written) in grid order."""
    sweep = load_sweep(source)
    jobs = [(i, sweep.base.raw, deltas) for i, deltas in enumerate(sweep.points())]
    if sweep.max_parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(sweep.max_parallel, len(jobs))) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(job) for job in jobs]
    rows.sort(key=lambda r: r["index"])
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        axis_cols = [p for p, _ in sweep.axes]
        header = ["index", *axis_cols, *SWEEP_COLUMNS]
        with open(out / "summary.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow(["" if row.get(k) is None else _cell(row.get(k)) for k in header])
        write_json(out / "summary.json", {"axes": [list(a) for a in sweep.axes], "rows": rows})
    return rows


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    return value

