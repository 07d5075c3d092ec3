"""Positive equilibrium of the kinetic system and its ODE trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, DomainError, NumericalFailure
from .model import ModelParams, validate

__all__ = [
    "Equilibrium",
    "OdeTrajectory",
    "solve_equilibrium",
    "integrate_homogeneous",
    "lipschitz_bound",
    "invariant_box",
]

BLOWUP_LEVEL = 1e6


@dataclass(frozen=True)
class Equilibrium:
    u_star: float
    v_star: float

    def residual(self, params: ModelParams) -> tuple[float, float]:
        f1, f2 = params.reaction(self.u_star, self.v_star)
        return float(f1), float(f2)


@dataclass(frozen=True)
class OdeTrajectory:
    times: np.ndarray
    U: np.ndarray
    V: np.ndarray

    def at(self, t):
        """Linear interpolation of ``(U, V)`` at time(s) ``t``."""
        return np.interp(t, self.times, self.U), np.interp(t, self.times, self.V)


def _newton(params, u, v, maxiter=100):
    a, b, c, d = params.a, params.b, params.c, params.d

    def resid(u, v):
        f1, f2 = params.reaction(u, v)
        return float(f1), float(f2)

    r1, r2 = resid(u, v)
    for _ in range(maxiter):
        j11 = -a - float(params.F_spec.derivative(u))
        j22 = -d - float(params.G_spec.derivative(v))
        det = j11 * j22 - b * c
        du = (-r1 * j22 + b * r2) / det
        dv = (-j11 * r2 + c * r1) / det
        norm0 = math.hypot(r1, r2)
        step = 1.0
        # damping: stay in the positive quadrant and do not increase the residual
        while True:
            un, vn = u + step * du, v + step * dv
            if un > 0 and vn > 0:
                s1, s2 = resid(un, vn)
                if math.hypot(s1, s2) <= norm0 or step < 1e-3:
                    break
            step *= 0.5
            if step < 1e-12:
                return u, v, False
        u, v, r1, r2 = un, vn, s1, s2
        if abs(step * du) <= 4e-16 * u and abs(step * dv) <= 4e-16 * v:
            break
    # the trivial state is also a root; only the stable positive one has det J > 0
    j11 = a + float(params.F_spec.derivative(u))
    j22 = d + float(params.G_spec.derivative(v))
    return u, v, max(abs(r1), abs(r2)) <= 1e-12 and j11 * j22 - b * c > 0


def solve_equilibrium(params: ModelParams, guess: tuple[float, float] | None = None) -> Equilibrium:
    """Unique positive root of ``-a u + b v = F(u)``, ``c u - d v = G(v)``.

    Damped Newton from a scale heuristic; if that stalls, the kinetic ODE is
    integrated towards the attractor and Newton is restarted from there.
    """
    problems = validate(params, require_H=True)
    if problems:
        raise DomainError("; ".join(problems))
    if guess is None:
        p = min(params.F_spec.p, params.G_spec.p)
        scale = (params.b * params.c / (params.a * params.d)) ** (1.0 / (p - 1.0))
        scale /= max(params.F_spec.kappa, params.G_spec.kappa) ** (1.0 / (p - 1.0))
        guess = (scale, scale)
    u, v, ok = _newton(params, float(guess[0]), float(guess[1]))
    if not ok:
        dt = 0.1 / lipschitz_bound(params, 1.0, 1.0)
        traj = integrate_homogeneous(params, 1.0, 1.0, t_end=200.0, dt=dt)
        u, v, ok = _newton(params, float(traj.U[-1]), float(traj.V[-1]))
    eq = Equilibrium(u, v)
    res = eq.residual(params)
    if not ok or max(abs(res[0]), abs(res[1])) > 1e-12 or u <= 0 or v <= 0:
        raise NumericalFailure(
            "equilibrium Newton iteration did not converge",
            last_iterate=(u, v),
            residual=res,
        )
    return eq


def invariant_box(params: ModelParams, U0: float, V0: float) -> float:
    """Side ``T`` of a square ``[0, T]^2`` that the kinetic flow never leaves."""
    # on U = T: -aT + bV - F(T) <= (b - a)T - kappa T^p <= 0 once kappa T^(p-1) >= b - a
    F, G = params.F_spec, params.G_spec
    top = max(U0, V0, 1e-300)
    for gain, spec in ((params.b - params.a, F), (params.c - params.d, G)):
        if gain > 0:
            try:
                top = max(top, (gain / spec.kappa) ** (1.0 / (spec.p - 1.0)))
            except OverflowError:
                return math.inf
    return top


def lipschitz_bound(params: ModelParams, U0: float, V0: float) -> float:
    """Max row sum of the kinetic Jacobian over the invariant box through ``(U0, V0)``."""
    top = invariant_box(params, U0, V0)
    j1 = params.a + float(params.F_spec.derivative(top)) + params.b
    j2 = params.c + params.d + float(params.G_spec.derivative(top))
    return max(j1, j2)


def _rk4_path(params, U, V, dt, nsteps):
    a, b, c, d = params.a, params.b, params.c, params.d
    kf, pf = params.F_spec.kappa, params.F_spec.p
    kg, pg = params.G_spec.kappa, params.G_spec.p

    def rhs(u, v):
        fu = kf * u**pf if u > 0 else 0.0
        gv = kg * v**pg if v > 0 else 0.0
        return -a * u + b * v - fu, c * u - d * v - gv

    Us = np.empty(nsteps + 1)
    Vs = np.empty(nsteps + 1)
    Us[0], Vs[0] = U, V
    h2 = 0.5 * dt
    for n in range(nsteps):
        k1u, k1v = rhs(U, V)
        k2u, k2v = rhs(U + h2 * k1u, V + h2 * k1v)
        k3u, k3v = rhs(U + h2 * k2u, V + h2 * k2v)
        k4u, k4v = rhs(U + dt * k3u, V + dt * k3v)
        U = U + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        V = V + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if not (abs(U) <= BLOWUP_LEVEL and abs(V) <= BLOWUP_LEVEL):
            raise DivergenceError(
                f"kinetic ODE exceeded {BLOWUP_LEVEL:g} at t={(n + 1) * dt:g}",
                last_iterate=(U, V),
            )
        Us[n + 1], Vs[n + 1] = U, V
    return Us, Vs


def integrate_homogeneous(
    params: ModelParams, U0: float, V0: float, t_end: float, dt: float = 1e-3
) -> OdeTrajectory:
    """Classical RK4 with fixed step for ``U' = f1(U,V)``, ``V' = f2(U,V)``.

    The last step is shortened so the trajectory ends exactly at ``t_end``.
    """
    if not (U0 > 0 and V0 > 0):
        raise DomainError("initial values must be positive")
    if not (t_end > 0 and dt > 0):
        raise DomainError("t_end and dt must be positive")
    lip = lipschitz_bound(params, U0, V0)
    if dt > 0.1 / lip * (1 + 1e-12):
        raise DomainError(f"dt={dt:g} exceeds the stability limit 0.1/Lambda = {0.1 / lip:g}")
    nsteps = int(math.floor(t_end / dt + 1e-9))
    Us, Vs = _rk4_path(params, float(U0), float(V0), dt, nsteps)
    times = dt * np.arange(nsteps + 1)
    rest = t_end - times[-1]
    if rest > 1e-12 * t_end:
        tail_u, tail_v = _rk4_path(params, Us[-1], Vs[-1], rest, 1)
        Us = np.append(Us, tail_u[-1])
        Vs = np.append(Vs, tail_v[-1])
        times = np.append(times, t_end)
    else:
        times[-1] = t_end
    return OdeTrajectory(times=times, U=Us, V=Vs)
