"""Post-processing of trajectories: dichotomy verdicts, speed/drift fits, profile errors."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .equilibrium import integrate_homogeneous, lipschitz_bound
from .errors import DomainError
from .fbsolver import FrontState, Trajectory
from .model import ModelParams
from .semiwave import SemiWaveSolution
from .spectral import critical_length

__all__ = [
    "Thresholds",
    "Verdict",
    "SpeedFit",
    "classify",
    "fit_speed_and_drift",
    "profile_error",
    "front_speed_series",
    "comparison_gap",
]


@dataclass(frozen=True)
class Thresholds:
    vanish_tol: float = 1e-4
    stall_tol: float = 1e-3
    span_factor: float = 4.0
    trailing: float = 0.2
    l_star: float | None = None


@dataclass(frozen=True)
class Verdict:
    kind: str  # "Spreading" | "Vanishing" | "Undecided"
    final_span: float
    final_max_density: float
    speed_estimate: float
    stall_duration: float

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SpeedFit:
    s_hat: float
    h_star_hat: float
    s_hat_left: float
    g_star_hat: float
    window: tuple
    residual_right: float
    residual_left: float

    def to_dict(self):
        out = asdict(self)
        out["window"] = list(self.window)
        return out


def _trailing_mask(t, fraction):
    t_lo = t[0] + (1.0 - fraction) * (t[-1] - t[0])
    return t >= t_lo - 1e-12


def classify(traj: Trajectory, thresholds: Thresholds = Thresholds(), params=None) -> Verdict:
    """Spreading / Vanishing / Undecided from finite-run proxies of the two alternatives."""
    t = traj["t"]
    span = traj["h"] - traj["g"]
    density = np.maximum(traj["max_u"], traj["max_v"])
    speeds = 0.5 * (traj["hprime"] - traj["gprime"])
    if len(t) < 10:
        return Verdict("Undecided", float(span[-1]) if len(t) else math.nan,
                       float(density[-1]) if len(t) else math.nan, math.nan, 0.0)

    l_star = thresholds.l_star
    if l_star is None:
        p = params if params is not None else ModelParams.from_dict(traj.params_snapshot)
        l_star = critical_length(p)

    tail = _trailing_mask(t, thresholds.trailing)
    speed_estimate = float(np.mean(speeds[tail]))
    # how long the fronts have been stalled, counted back from the end
    moving = np.nonzero(speeds >= thresholds.stall_tol)[0]
    stall_from = t[moving[-1] + 1] if moving.size and moving[-1] + 1 < len(t) else (
        t[-1] if moving.size else t[0]
    )
    stall_duration = float(t[-1] - stall_from)

    kind = "Undecided"
    if span[-1] > thresholds.span_factor * l_star and speed_estimate > 0:
        kind = "Spreading"
    elif density[-1] < thresholds.vanish_tol and np.all(speeds[tail] < thresholds.stall_tol):
        kind = "Vanishing"
    return Verdict(kind, float(span[-1]), float(density[-1]), speed_estimate, stall_duration)


def _line_fit(t, y):
    design = np.column_stack([t, np.ones_like(t)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.max(np.abs(y - slope * t - intercept)))
    return float(slope), float(intercept), resid


def fit_speed_and_drift(traj: Trajectory, window_fraction: float = 0.4, window=None) -> SpeedFit:
    """Least-squares lines ``h ~ s t + h*`` and ``-g ~ s t - g*`` over a trailing window.

    ``window=(t_lo, t_hi)`` overrides ``window_fraction``.
    """
    t = traj["t"]
    if window is None:
        if not 0 < window_fraction < 1:
            raise DomainError("window_fraction must lie in (0, 1)")
        mask = _trailing_mask(t, window_fraction)
    else:
        mask = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    if np.count_nonzero(mask) <= 2:
        raise DomainError("fit window holds two samples or fewer")
    tw = t[mask]
    s_r, h_star, res_r = _line_fit(tw, traj["h"][mask])
    s_l, minus_g_star, res_l = _line_fit(tw, -traj["g"][mask])
    return SpeedFit(
        s_hat=s_r,
        h_star_hat=h_star,
        s_hat_left=s_l,
        g_star_hat=-minus_g_star,
        window=(float(tw[0]), float(tw[-1])),
        residual_right=res_r,
        residual_left=res_l,
    )


def profile_error(state: FrontState, params: ModelParams, semiwave: SemiWaveSolution):
    """Sup distance between the densities and the semi-wave hung from each front.

    Right: ``max |(u, v)(x) - (phi, psi)(h - x)|`` over nodes in ``[0, h]``;
    left uses ``x - g`` over ``[g, 0]``. Profiles beyond the truncation
    length are taken as ``(u*, v*)``.
    """
    x = state.x
    right = x >= 0.0
    left = x <= 0.0
    if not right.any() or not left.any():
        raise DomainError("no nodes on one side of the origin")

    def dist(mask, arg):
        phi = np.interp(arg, semiwave.xi, semiwave.phi, right=semiwave.u_star)
        psi = np.interp(arg, semiwave.xi, semiwave.psi, right=semiwave.v_star)
        return float(
            max(np.max(np.abs(state.U[mask] - phi)), np.max(np.abs(state.V[mask] - psi)))
        )

    err_right = dist(right, state.h - x[right])
    err_left = dist(left, x[left] - state.g)
    return err_right, err_left


def front_speed_series(traj: Trajectory, trailing: float = 0.2):
    """Recorded ``h'(t)`` and ``-g'(t)`` with their means over the trailing window."""
    t = traj["t"]
    if len(t) < 3:
        raise DomainError("need at least 3 samples")
    right = traj["hprime"]
    left = -traj["gprime"]
    mask = _trailing_mask(t, trailing)
    return {
        "t": t,
        "right": right,
        "left": left,
        "mean_right": float(np.mean(right[mask])),
        "mean_left": float(np.mean(left[mask])),
    }


def comparison_gap(traj: Trajectory, params: ModelParams, U0: float, V0: float, dt=1e-3):
    """Largest excess of the recorded maxima over the spatially homogeneous ODE.

    ``(U0, V0)`` should dominate the initial data; a cooperative system then
    keeps ``max u <= U(t)`` and ``max v <= V(t)``, so both returned values
    should be at most rounding level.
    """
    t = traj["t"]
    dt = min(dt, 0.1 / lipschitz_bound(params, U0, V0))
    ode = integrate_homogeneous(params, U0, V0, float(t[-1]), dt)
    U, V = ode.at(t)
    return float(np.max(traj["max_u"] - U)), float(np.max(traj["max_v"] - V))
