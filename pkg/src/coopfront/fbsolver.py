"""Time integration of the two-front problem on a fixed reference interval.

The moving habitat ``(g(t), h(t))`` is mapped onto ``xi in [-1, 1]`` by
``x = m + xi * l`` with ``m = (h + g)/2`` and ``l = (h - g)/2``. In these
coordinates

    U_t = d1 U_xixi / l^2 + (m' + xi l') / l * U_xi + f1(U, V)

and likewise for ``V``. Each step freezes the front speeds from the Stefan
law, moves the fronts by forward Euler, treats diffusion implicitly
(tridiagonal solve) and advection plus reaction explicitly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .equilibrium import solve_equilibrium
from .errors import BlowUpError, DomainError, GeometryError, InvariantViolation, NumericalFailure
from .model import InitialData, ModelParams, check_initial
from .semiwave import one_sided_slope

__all__ = [
    "FrontState",
    "Trajectory",
    "init_state",
    "stefan_law",
    "stefan_speeds",
    "dt_max",
    "step",
    "run",
    "TRAJECTORY_COLUMNS",
]

TRAJECTORY_COLUMNS = (
    "t",
    "g",
    "h",
    "gprime",
    "hprime",
    "max_u",
    "max_v",
    "profile_err_left",
    "profile_err_right",
)
VANISH_LEVEL = 1e-14
BOUND_SLACK = 0.05
CFL = 0.4


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FrontState:
    t: float
    g: float
    h: float
    xi_grid: np.ndarray
    U: np.ndarray
    V: np.ndarray
    # per-component a-priori caps (u, v); exceeding them means the scheme blew up
    c_bound: tuple = (math.inf, math.inf)

    def __post_init__(self):
        for name in ("xi_grid", "U", "V"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def M(self) -> int:
        return self.xi_grid.size - 1

    @property
    def half_width(self) -> float:
        return 0.5 * (self.h - self.g)

    @property
    def x(self) -> np.ndarray:
        """Physical node positions."""
        return 0.5 * (self.h + self.g) + self.xi_grid * self.half_width


def _caps(params, initial):
    # the box [0, K u*] x [0, K v*], K = max(1, |u0|/u*, |v0|/v*), is invariant for the kinetics
    eq = solve_equilibrium(params)
    k = max(1.0, initial.u0.max() / eq.u_star, initial.v0.max() / eq.v_star)
    return (k * eq.u_star * (1 + BOUND_SLACK), k * eq.v_star * (1 + BOUND_SLACK))


def init_state(params: ModelParams, initial: InitialData, M: int = 400) -> FrontState:
    problems = check_initial(initial)
    if problems:
        raise DomainError("; ".join(problems))
    if M < 100 or M % 2:
        raise DomainError("M must be an even integer >= 100")
    xi = np.linspace(-1.0, 1.0, M + 1)
    xi[M // 2] = 0.0
    x = xi * initial.h0
    U = np.interp(x, initial.x, initial.u0)
    V = np.interp(x, initial.x, initial.v0)
    U[0] = U[-1] = V[0] = V[-1] = 0.0
    return FrontState(
        t=0.0, g=-initial.h0, h=initial.h0, xi_grid=xi, U=U, V=V, c_bound=_caps(params, initial)
    )


def stefan_law(params: ModelParams, ux: float, vx: float) -> float:
    """Front velocity ``-mu (v_x + rho u_x)`` from the density gradients at the front."""
    return -params.mu * (vx + params.rho * ux)


def _slope3(w, dx):
    return one_sided_slope(w[0], w[1], w[2], dx)


def _slope4(w, dx):
    # third order; exact on cubics
    return (-11.0 * w[0] + 18.0 * w[1] - 9.0 * w[2] + 2.0 * w[3]) / (6.0 * dx)


FRONT_STENCILS = {"second": _slope3, "third": _slope4}


def stefan_speeds(state: FrontState, params: ModelParams, stencil: str = "third") -> tuple[float, float]:
    """``(g', h')`` from one-sided gradients at both fronts.

    ``stencil="second"`` is the 3-point formula also used for semi-wave front
    slopes; the default 4-point formula keeps the front-speed error small
    once the habitat has grown and the node spacing has coarsened.
    """
    U, V = state.U, state.V
    if max(U.max(), V.max()) < VANISH_LEVEL:
        return 0.0, 0.0
    slope = FRONT_STENCILS[stencil]
    dxi = 2.0 / state.M
    scale = 1.0 / state.half_width
    ux_g = slope(U, dxi) * scale
    vx_g = slope(V, dxi) * scale
    ux_h = -slope(U[::-1], dxi) * scale
    vx_h = -slope(V[::-1], dxi) * scale
    gprime = stefan_law(params, ux_g, vx_g)
    hprime = stefan_law(params, ux_h, vx_h)
    if gprime > 0 or hprime < 0:
        raise InvariantViolation(f"fronts move inwards: g'={gprime:g}, h'={hprime:g}")
    return gprime, hprime


def dt_max(state: FrontState, params: ModelParams, speeds=None) -> float:
    """Largest admissible step: advective CFL of the moving map and explicit-reaction limit."""
    gprime, hprime = stefan_speeds(state, params) if speeds is None else speeds
    dx = state.half_width * 2.0 / state.M
    vmax = max(abs(gprime), abs(hprime))
    adv = CFL * dx / vmax if vmax > 0 else math.inf
    cu, cv = state.c_bound
    rate = max(
        params.a + params.b + float(params.F_spec.derivative(min(cu, 1e300))),
        params.c + params.d + float(params.G_spec.derivative(min(cv, 1e300))),
    )
    return min(adv, CFL / rate)


def _implicit_diffusion(rhs, coef):
    """Solve ``(1 + 2 coef) y_j - coef (y_{j-1} + y_{j+1}) = rhs_j`` with zero ends."""
    n = rhs.shape[0]
    ab = np.empty((3, n))
    ab[0, :] = -coef
    ab[1, :] = 1.0 + 2.0 * coef
    ab[2, :] = -coef
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def step(state: FrontState, params: ModelParams, dt: float, speeds=None) -> FrontState:
    if speeds is None:
        speeds = stefan_speeds(state, params)
    limit = dt_max(state, params, speeds)
    if not 0 < dt <= limit * (1 + 1e-12):
        raise DomainError(f"dt={dt:g} outside (0, dt_max={limit:g}]")
    gprime, hprime = speeds
    g1 = state.g + dt * gprime
    h1 = state.h + dt * hprime
    if not h1 > g1:
        raise GeometryError(f"fronts crossed at t={state.t + dt:g}", last_iterate=(g1, h1))

    M = state.M
    dxi = 2.0 / M
    l0 = state.half_width
    l1 = 0.5 * (h1 - g1)
    mid_speed = 0.5 * (hprime + gprime)
    stretch = 0.5 * (hprime - gprime)
    xi = state.xi_grid[1:-1]
    adv = dt * (mid_speed + xi * stretch) / (l0 * 2.0 * dxi)

    U, V = state.U, state.V
    f1, f2 = params.reaction(U[1:-1], V[1:-1])
    rhs_u = U[1:-1] + adv * (U[2:] - U[:-2]) + dt * f1
    rhs_v = V[1:-1] + adv * (V[2:] - V[:-2]) + dt * f2

    k1 = dt * params.d1 / (l1 * dxi) ** 2
    k2 = dt * params.d2 / (l1 * dxi) ** 2
    U1 = np.zeros(M + 1)
    V1 = np.zeros(M + 1)
    U1[1:-1] = _implicit_diffusion(rhs_u, k1)
    V1[1:-1] = _implicit_diffusion(rhs_v, k2)

    cu, cv = state.c_bound
    if not (np.all(np.isfinite(U1)) and np.all(np.isfinite(V1))) or U1.max() > cu or V1.max() > cv:
        raise BlowUpError(
            f"densities exceeded the a-priori bound at t={state.t + dt:g}",
            last_iterate=(U1, V1),
        )
    return FrontState(
        t=state.t + dt, g=g1, h=h1, xi_grid=state.xi_grid, U=U1, V=V1, c_bound=state.c_bound
    )


@dataclass
class Trajectory:
    """Sampled diagnostics of a run plus enough metadata to repeat it."""

    columns: dict
    params_snapshot: dict
    metadata: dict
    final_state: FrontState | None = None
    snapshots: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.columns["t"])

    def __getitem__(self, name) -> np.ndarray:
        return np.asarray(self.columns[name], dtype=float)

    def truncated(self, n: int) -> "Trajectory":
        cols = {k: list(v[:n]) for k, v in self.columns.items()}
        return Trajectory(cols, self.params_snapshot, dict(self.metadata))

    def check_monotone_fronts(self, tol=1e-12):
        if np.any(np.diff(self["h"]) < -tol) or np.any(np.diff(self["g"]) > tol):
            raise InvariantViolation("front monotonicity violated")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRAJECTORY_COLUMNS)
            for row in zip(*(self.columns[c] for c in TRAJECTORY_COLUMNS)):
                writer.writerow([repr(float(v)) for v in row])


def _sample(state, params, speeds, semiwave):
    err_r = err_l = math.nan
    if semiwave is not None:
        from .analysis import profile_error

        err_r, err_l = profile_error(state, params, semiwave)
    return {
        "t": state.t,
        "g": state.g,
        "h": state.h,
        "gprime": speeds[0],
        "hprime": speeds[1],
        "max_u": float(state.U.max()),
        "max_v": float(state.V.max()),
        "profile_err_left": err_l,
        "profile_err_right": err_r,
    }


def run(
    params: ModelParams,
    initial: InitialData,
    M: int = 400,
    dt: float = 0.01,
    t_end: float = 60.0,
    sample_every: float = 0.5,
    semiwave=None,
    snapshot_times=(),
    stencil: str = "third",
) -> Trajectory:
    """March to ``t_end``, sampling every ``sample_every`` time units.

    Each step uses ``min(dt, dt_max)`` and is shortened to land exactly on
    sample and snapshot times. If ``semiwave`` is given, profile errors
    against it are recorded at every sample. On failure the exception gets a
    ``partial`` attribute holding the trajectory up to the last sample.
    """
    if not (t_end > 0 and dt > 0 and sample_every > 0):
        raise DomainError("t_end, dt and sample_every must be positive")
    state = init_state(params, initial, M)
    n_samples = int(math.floor(t_end / sample_every + 1e-9))
    stops = sorted(
        {round(k * sample_every, 12) for k in range(1, n_samples + 1)}
        | {float(t_end)}
        | {float(t) for t in snapshot_times if 0 < t <= t_end}
    )
    sample_set = {round(k * sample_every, 12) for k in range(1, n_samples + 1)} | {float(t_end)}
    snaps = {float(t) for t in snapshot_times}

    columns = {name: [] for name in TRAJECTORY_COLUMNS}
    snapshots = {}
    traj = Trajectory(
        columns,
        params.to_dict(),
        {
            "M": M,
            "dt": dt,
            "t_end": t_end,
            "sample_every": sample_every,
            "h0": initial.h0,
            "stencil": stencil,
            "steps": 0,
        },
        snapshots=snapshots,
    )

    def record(state, speeds):
        for key, value in _sample(state, params, speeds, semiwave).items():
            columns[key].append(float(value))

    if stencil not in FRONT_STENCILS:
        raise DomainError(f"unknown front stencil {stencil!r}")
    speeds = stefan_speeds(state, params, stencil)
    record(state, speeds)
    if 0.0 in snaps:
        snapshots[0.0] = (state.x.copy(), state.U.copy(), state.V.copy())
    steps = 0
    try:
        for stop in stops:
            while state.t < stop:
                h = min(dt, dt_max(state, params, speeds), stop - state.t)
                if stop - (state.t + h) < 1e-9 * max(1.0, stop):
                    h = stop - state.t
                state = step(state, params, h, speeds)
                if stop - state.t < 1e-9 * max(1.0, stop):
                    state = FrontState(stop, state.g, state.h, state.xi_grid, state.U, state.V, state.c_bound)
                steps += 1
                speeds = stefan_speeds(state, params, stencil)
            if stop in sample_set:
                record(state, speeds)
            if stop in snaps:
                snapshots[stop] = (state.x.copy(), state.U.copy(), state.V.copy())
    except (NumericalFailure, InvariantViolation, DomainError) as exc:
        traj.metadata["steps"] = steps
        traj.final_state = state
        exc.partial = traj
        raise
    traj.metadata["steps"] = steps
    traj.final_state = state
    traj.check_monotone_fronts()
    return traj
