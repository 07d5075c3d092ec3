"""Bundled reference runs and the pass/fail recipes built on them."""

from __future__ import annotations

import functools

from .analysis import (
    classify,
    comparison_gap,
    fit_speed_and_drift,
    front_speed_series,
)
from .errors import DomainError, InvariantViolation, NumericalFailure
from .fbsolver import run
from .model import ModelParams, make_initial_preset
from .semiwave import solve_speed
from .spectral import critical_length

__all__ = ["REFERENCE_CONFIGS", "THEOREMS", "reproduce", "reference_speed", "reference_run"]

_R = ModelParams().to_dict()
_NUMERICS = {"M": 400, "dt": 0.01, "t_end": 60.0, "sample_every": 0.5, "stencil": "third"}

REFERENCE_CONFIGS = {
    "spreading": {
        "params": _R,
        "initial": {"h0": 3.0, "amp_u": 0.5, "amp_v": 0.5, "n": 201},
        "numerics": dict(_NUMERICS),
        "outputs": {"snapshots": [15.0, 60.0], "format": "csv"},
    },
    "vanishing": {
        "params": _R,
        "initial": {"h0": 0.5, "amp_u": 0.01, "amp_v": 0.01, "n": 201},
        "numerics": dict(_NUMERICS),
        "outputs": {"snapshots": [], "format": "csv"},
    },
}

SPEED_TOL = 1e-6
THEOREMS = ("dichotomy", "speed", "sharp_profile")


@functools.lru_cache(maxsize=None)
def reference_speed():
    return solve_speed(ModelParams.from_dict(_R), SPEED_TOL)


@functools.lru_cache(maxsize=None)
def reference_run(name):
    cfg = REFERENCE_CONFIGS[name]
    params = ModelParams.from_dict(cfg["params"])
    ini = cfg["initial"]
    initial = make_initial_preset(ini["h0"], ini["amp_u"], ini["amp_v"], ini["n"])
    num = cfg["numerics"]
    semiwave = reference_speed().solution if name == "spreading" else None
    return run(
        params,
        initial,
        M=num["M"],
        dt=num["dt"],
        t_end=num["t_end"],
        sample_every=num["sample_every"],
        semiwave=semiwave,
        snapshot_times=tuple(cfg["outputs"]["snapshots"]),
        stencil=num["stencil"],
    )


def _check(name, value, tolerance, relation="<="):
    ok = {"<=": value <= tolerance, "<": value < tolerance, "==": value == tolerance}[relation]
    return {"name": name, "value": value, "relation": relation, "tolerance": tolerance,
            "pass": bool(ok)}


def _speed_checks():
    s_ref = reference_speed().s_mu_rho
    traj = reference_run("spreading")
    fit = fit_speed_and_drift(traj, 0.4)
    series = front_speed_series(traj, 0.2)
    rel = lambda x: abs(x - s_ref) / s_ref  # noqa: E731
    return [
        _check("s_mu_rho", s_ref, 2.0, "<"),
        _check("rel_err_s_hat_right", rel(fit.s_hat), 0.02),
        _check("rel_err_s_hat_left", rel(fit.s_hat_left), 0.02),
        _check("rel_err_mean_hprime", rel(series["mean_right"]), 0.02),
        _check("rel_err_mean_minus_gprime", rel(series["mean_left"]), 0.02),
    ]


def _sharp_profile_checks():
    traj = reference_run("spreading")
    t_end = float(traj["t"][-1])
    early = fit_speed_and_drift(traj, window=(0.5 * t_end, 0.75 * t_end))
    late = fit_speed_and_drift(traj, window=(0.75 * t_end, t_end))
    t = traj["t"]
    quarter = int(abs(t - 0.25 * t_end).argmin())
    u_star = float(reference_speed().solution.u_star)
    out = [
        _check("h_star_shift", abs(early.h_star_hat - late.h_star_hat), 0.05),
        _check("g_star_shift", abs(early.g_star_hat - late.g_star_hat), 0.05),
    ]
    for side in ("right", "left"):
        col = traj[f"profile_err_{side}"]
        out.append(_check(f"err_{side}_final", float(col[-1]), 0.05 * u_star))
        out.append(_check(f"err_{side}_final_below_quarter", float(col[-1]), float(col[quarter]), "<"))
    return out


def _dichotomy_checks():
    params = ModelParams.from_dict(_R)
    l_star = critical_length(params)
    checks = []
    for name, kind in (("spreading", "Spreading"), ("vanishing", "Vanishing")):
        traj = reference_run(name)
        verdict = classify(traj, params=params)
        checks.append(_check(f"{name}_verdict", verdict.kind, kind, "=="))
        amp = REFERENCE_CONFIGS[name]["initial"]
        gap_u, gap_v = comparison_gap(traj, params, amp["amp_u"], amp["amp_v"])
        checks.append(_check(f"{name}_comparison_gap_u", gap_u, 1e-6))
        checks.append(_check(f"{name}_comparison_gap_v", gap_v, 1e-6))
        if name == "vanishing":
            checks.append(_check("vanishing_final_density", verdict.final_max_density, 1e-4, "<"))
            checks.append(_check("vanishing_final_span", verdict.final_span, 2 * l_star + 0.2))
    return checks


_RECIPES = {
    "dichotomy": _dichotomy_checks,
    "speed": _speed_checks,
    "sharp_profile": _sharp_profile_checks,
}


def reproduce(theorem_id: str) -> dict:
    """Run one recipe on the bundled configs; numerical failures become a failed report."""
    if theorem_id not in _RECIPES:
        raise DomainError(f"unknown theorem {theorem_id!r}; choose from {THEOREMS}")
    try:
        checks = _RECIPES[theorem_id]()
    except (NumericalFailure, InvariantViolation, DomainError) as exc:
        return {"theorem": theorem_id, "pass": False, "checks": [],
                "error": f"{type(exc).__name__}: {exc}"}
    return {"theorem": theorem_id, "pass": all(c["pass"] for c in checks),
            "checks": checks, "error": None}
