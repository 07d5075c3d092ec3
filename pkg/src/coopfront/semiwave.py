"""Semi-waves: monotone profiles on a truncated half-line and the Stefan-consistent speed.

A semi-wave of speed ``s`` solves

    d1 phi'' - s phi' - a phi + b psi - F(phi) = 0
    d2 psi'' - s psi' + c phi - d psi - G(psi) = 0,    0 < xi < L,

with ``(phi, psi)(0) = (0, 0)`` and ``(phi, psi)(L) = (u*, v*)`` clamped at
the truncation point. Both solvers below discretise the same second-order
central finite-difference system on a uniform grid, so they are expected to
agree to their convergence tolerances, not just to truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .equilibrium import Equilibrium, solve_equilibrium
from .errors import DomainError, InvariantViolation, NumericalFailure
from .model import ModelParams
from .spectral import critical_speed, tail_rate

__all__ = [
    "SemiWaveSolution",
    "SpeedResult",
    "SemiWaveSettings",
    "default_length",
    "solve_semiwave_relax",
    "solve_semiwave_newton",
    "solve_semiwave",
    "front_derivatives",
    "one_sided_slope",
    "speed_residual",
    "solve_speed",
    "fit_tail",
    "semiwave_residual",
]

_EPS = np.finfo(float).eps
RES_TOL = 1e-11


def one_sided_slope(w0, w1, w2, dx):
    """Second-order forward difference ``(-3 w0 + 4 w1 - w2) / (2 dx)``."""
    return (-3.0 * w0 + 4.0 * w1 - w2) / (2.0 * dx)


@dataclass(frozen=True)
class SemiWaveSolution:
    s: float
    L: float
    xi: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    u_star: float
    v_star: float
    dphi0: float = float("nan")
    dpsi0: float = float("nan")
    fitted_tail: float = float("nan")
    residual_max: float = float("nan")

    @property
    def N(self) -> int:
        return self.xi.size - 1

    def summary(self) -> dict:
        return {
            "s": self.s,
            "L": self.L,
            "N": self.N,
            "dphi0": self.dphi0,
            "dpsi0": self.dpsi0,
            "fitted_tail": self.fitted_tail,
            "residual_max": self.residual_max,
        }


@dataclass(frozen=True)
class SpeedResult:
    s_mu_rho: float
    f_values: tuple  # (s, f(s)) pairs in evaluation order
    bracket_width: float
    solution: SemiWaveSolution | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SemiWaveSettings:
    """Discretisation used when a semi-wave is solved on the caller's behalf.

    ``L`` defaults to ``length_factor / mu_hat1(s)``; ``N`` defaults to
    ``L / spacing`` rounded up.
    """

    L: float | None = None
    N: int | None = None
    length_factor: float = 20.0
    spacing: float = 0.0025
    method: str = "newton"

    def grid(self, params, s, eq=None):
        L = self.L if self.L is not None else default_length(params, s, self.length_factor, eq)
        N = self.N if self.N is not None else max(200, int(math.ceil(L / self.spacing)))
        return float(L), int(N)


def default_length(params, s, factor=20.0, eq=None):
    return factor / tail_rate(params, s, eq)


class _Discretisation:
    """Sparse operators of the collocation system; unknowns are ``[w_1..w_{N-1}, z_1..z_{N-1}]``."""

    def __init__(self, params: ModelParams, eq: Equilibrium, s: float, L: float, N: int):
        if N < 3:
            raise DomainError("need N >= 3")
        self.params, self.eq, self.s = params, eq, s
        self.L, self.N = L, N
        self.dx = L / N
        self.n = N - 1
        dx = self.dx
        lower1 = params.d1 / dx**2 + s / (2 * dx)
        upper1 = params.d1 / dx**2 - s / (2 * dx)
        lower2 = params.d2 / dx**2 + s / (2 * dx)
        upper2 = params.d2 / dx**2 - s / (2 * dx)
        n = self.n
        one = np.ones(n)
        lap1 = sp.diags(
            [lower1 * one[1:], (-2 * params.d1 / dx**2 - params.a) * one, upper1 * one[1:]],
            [-1, 0, 1],
        )
        lap2 = sp.diags(
            [lower2 * one[1:], (-2 * params.d2 / dx**2 - params.d) * one, upper2 * one[1:]],
            [-1, 0, 1],
        )
        eye = sp.identity(n)
        self.A = sp.bmat([[lap1, params.b * eye], [params.c * eye, lap2]], format="csc")
        self.bvec = np.zeros(2 * n)
        self.bvec[n - 1] = upper1 * eq.u_star
        self.bvec[2 * n - 1] = upper2 * eq.v_star
        # rounding level of the residual: |terms| ~ 4 d |w| / dx^2
        scale = max(params.d1, params.d2) * 4.0 / dx**2 + abs(s) / dx
        scale += params.a + params.b + params.c + params.d
        self.res_floor = 8 * _EPS * scale * max(eq.u_star, eq.v_star, 1.0)

    def split(self, y):
        return y[: self.n], y[self.n :]

    def nonlinear(self, y):
        w, z = self.split(y)
        return np.concatenate([self.params.F_spec.value(w), self.params.G_spec.value(z)])

    def residual(self, y):
        return self.A @ y + self.bvec - self.nonlinear(y)

    def jacobian(self, y):
        w, z = self.split(y)
        dn = np.concatenate([self.params.F_spec.derivative(w), self.params.G_spec.derivative(z)])
        return (self.A - sp.diags(dn)).tocsc()

    def pack(self, phi, psi):
        return np.concatenate([phi[1:-1], psi[1:-1]])

    def unpack(self, y):
        w, z = self.split(y)
        phi = np.concatenate([[0.0], w, [self.eq.u_star]])
        psi = np.concatenate([[0.0], z, [self.eq.v_star]])
        return phi, psi

    @property
    def xi(self):
        return np.linspace(0.0, self.L, self.N + 1)


def _check_profile(name, w, top):
    """Strictly increasing wherever increments exceed rounding, never decreasing beyond it."""
    diffs = np.diff(w)
    noise = 16 * _EPS * max(w.size, 64) * max(top, 1.0)
    if np.any(diffs < -noise):
        j = int(np.argmin(diffs))
        raise InvariantViolation(f"{name} decreases at node {j} by {-diffs[j]:.3e}")
    # below the rounding level an increment can legitimately be stored as 0
    resolvable = (top - w[1:]) > 1e3 * noise
    if np.any(diffs[resolvable] <= 0):
        raise InvariantViolation(f"{name} is not strictly increasing")
    if np.any(w[1:-1] <= 0) or np.any(w > top + noise):
        raise InvariantViolation(f"{name} leaves (0, {top}]")


def _finish(disc: _Discretisation, y, check=True) -> SemiWaveSolution:
    phi, psi = disc.unpack(y)
    res = float(np.max(np.abs(disc.residual(y)))) if disc.n else 0.0
    if check:
        _check_profile("phi", phi, disc.eq.u_star)
        _check_profile("psi", psi, disc.eq.v_star)
    sol = SemiWaveSolution(
        s=float(disc.s),
        L=disc.L,
        xi=disc.xi,
        phi=phi,
        psi=psi,
        u_star=disc.eq.u_star,
        v_star=disc.eq.v_star,
        residual_max=res,
    )
    dphi0, dpsi0 = front_derivatives(sol)
    try:
        rate = fit_tail(sol)
    except DomainError:
        rate = float("nan")
    return replace(sol, dphi0=dphi0, dpsi0=dpsi0, fitted_tail=rate)


def _prepare(params, s, L, N, eq):
    if eq is None:
        eq = solve_equilibrium(params)
    if s < 0:
        raise DomainError("speed must be nonnegative")
    if not L > 0:
        raise DomainError("truncation length must be positive")
    if N < 200:
        raise DomainError(f"need at least 200 grid intervals (got {N})")
    return _Discretisation(params, eq, float(s), float(L), int(N))


def _ramp(disc):
    x = disc.xi / disc.L
    return disc.pack(disc.eq.u_star * x, disc.eq.v_star * x)


def _relax_dt(params, eq):
    # implicit linear part: dt times the growth rate of the linear kinetics stays below 1/2;
    # explicit loss terms: dt * F'(u*) below 1/2
    tr = -(params.a + params.d)
    det = params.a * params.d - params.b * params.c
    grow = 0.5 * (tr + math.sqrt(tr * tr - 4 * det))
    rate = max(
        grow,
        float(params.F_spec.derivative(eq.u_star)),
        float(params.G_spec.derivative(eq.v_star)),
        1.0,
    )
    return 0.5 / rate


def solve_semiwave_relax(
    params: ModelParams,
    s: float,
    L: float,
    N: int,
    t_relax: float = 2000.0,
    dt: float | None = None,
    eq: Equilibrium | None = None,
    tol: float = 1e-10,
    initial=None,
) -> SemiWaveSolution:
    """Parabolic relaxation towards the semi-wave from a linear ramp.

    Marches ``y_t = A y + b - N(y)`` with the linear part implicit (one sparse
    LU factorisation) and the loss terms explicit, until successive iterates
    differ by at most ``tol`` in the sup norm.
    """
    disc = _prepare(params, s, L, N, eq)
    if dt is None:
        dt = _relax_dt(params, disc.eq)
    lu = spla.splu((sp.identity(2 * disc.n, format="csc") - dt * disc.A).tocsc())
    y = _ramp(disc) if initial is None else disc.pack(*initial)
    t = 0.0
    delta = float("inf")
    while t < t_relax:
        rhs = y + dt * (disc.bvec - disc.nonlinear(y))
        y_new = lu.solve(rhs)
        delta = float(np.max(np.abs(y_new - y)))
        y = y_new
        t += dt
        if not np.isfinite(delta):
            raise NumericalFailure("relaxation produced non-finite values", residual=delta)
        if delta <= tol:
            return _finish(disc, y)
    raise NumericalFailure(
        f"relaxation did not settle within t={t_relax:g}", last_iterate=y, residual=delta
    )


def _default_guess(disc):
    rate = tail_rate(disc.params, disc.s, disc.eq)
    shape = 1.0 - np.exp(-rate * disc.xi)
    shape /= shape[-1]
    return disc.pack(disc.eq.u_star * shape, disc.eq.v_star * shape)


def solve_semiwave_newton(
    params: ModelParams,
    s: float,
    L: float,
    N: int,
    initial=None,
    eq: Equilibrium | None = None,
    maxiter: int = 50,
    res_tol: float = RES_TOL,
) -> SemiWaveSolution:
    """Damped Newton on the collocation equations.

    ``initial`` is a ``(phi, psi)`` pair on the solver grid; by default an
    exponential saturation profile with the linearised tail rate is used.
    """
    disc = _prepare(params, s, L, N, eq)
    y = _default_guess(disc) if initial is None else disc.pack(*initial)
    target = max(res_tol, disc.res_floor)
    r = disc.residual(y)
    norm = float(np.max(np.abs(r)))
    for _ in range(maxiter):
        if norm <= target:
            # quadratic convergence: two plain steps take the iterate to rounding level
            for _ in range(2):
                trial = y + spla.spsolve(disc.jacobian(y), -r)
                r_trial = disc.residual(trial)
                if np.max(np.abs(r_trial)) > 2 * max(norm, disc.res_floor):
                    break
                y, r = trial, r_trial
                norm = float(np.max(np.abs(r)))
            return _finish(disc, y)
        step = spla.spsolve(disc.jacobian(y), -r)
        lam = 1.0
        while True:
            trial = y + lam * step
            r_trial = disc.residual(trial)
            n_trial = float(np.max(np.abs(r_trial)))
            if np.all(trial > -1e-12) and n_trial < norm * (1 - 1e-4 * lam) or n_trial <= target:
                break
            lam *= 0.5
            if lam < 1e-6:
                raise NumericalFailure(
                    "Newton line search failed", last_iterate=y, residual=norm
                )
        y, r, norm = trial, r_trial, n_trial
    if norm <= target:
        return _finish(disc, y)
    raise NumericalFailure("Newton did not converge", last_iterate=y, residual=norm)


def solve_semiwave(
    params, s, settings: SemiWaveSettings = SemiWaveSettings(), eq=None, initial=None, s_star=None
):
    """Solve with the configured method; Newton falls back to relaxation, then polishes.

    Speeds at or above ``s*`` have no monotone semi-wave and raise DomainError.
    """
    if s_star is None:
        s_star = critical_speed(params)
    if not 0 <= s < s_star:
        raise DomainError(f"speed {s:g} outside [0, s*) with s* = {s_star:g}")
    if eq is None:
        eq = solve_equilibrium(params)
    L, N = settings.grid(params, s, eq)
    if settings.method == "relax":
        return solve_semiwave_relax(params, s, L, N, eq=eq, initial=initial)
    try:
        return solve_semiwave_newton(params, s, L, N, initial=initial, eq=eq)
    except (NumericalFailure, InvariantViolation):
        relaxed = solve_semiwave_relax(params, s, L, N, eq=eq, tol=1e-8)
        return solve_semiwave_newton(params, s, L, N, initial=(relaxed.phi, relaxed.psi), eq=eq)


def semiwave_residual(params: ModelParams, sol: SemiWaveSolution) -> np.ndarray:
    """Discrete residuals at interior nodes, stacked ``[eq1, eq2]``."""
    disc = _Discretisation(params, Equilibrium(sol.u_star, sol.v_star), sol.s, sol.L, sol.N)
    return disc.residual(disc.pack(sol.phi, sol.psi))


def front_derivatives(sol: SemiWaveSolution) -> tuple[float, float]:
    dx = sol.xi[1] - sol.xi[0]
    dphi = float(one_sided_slope(sol.phi[0], sol.phi[1], sol.phi[2], dx))
    dpsi = float(one_sided_slope(sol.psi[0], sol.psi[1], sol.psi[2], dx))
    if not (dphi > 0 and dpsi > 0):
        raise InvariantViolation(f"front slopes must be positive, got ({dphi}, {dpsi})")
    return dphi, dpsi


def fit_tail(sol: SemiWaveSolution, window=(0.4, 0.7)) -> float:
    """Least-squares decay rate of ``u* - phi`` over ``xi in [0.4 L, 0.7 L]``."""
    lo, hi = window[0] * sol.L, window[1] * sol.L
    mask = (sol.xi >= lo) & (sol.xi <= hi)
    deficit = sol.u_star - sol.phi[mask]
    keep = deficit > 1e-12
    if np.count_nonzero(keep) < 10:
        raise DomainError("fewer than 10 usable nodes in the tail window")
    slope = np.polyfit(sol.xi[mask][keep], np.log(deficit[keep]), 1)[0]
    return float(-slope)


def speed_residual(
    params: ModelParams,
    s: float,
    settings: SemiWaveSettings = SemiWaveSettings(),
    eq=None,
    initial=None,
    return_solution=False,
    s_star=None,
):
    """``f(s) = mu (psi_s'(0) + rho phi_s'(0)) - s``."""
    sol = solve_semiwave(params, s, settings, eq=eq, initial=initial, s_star=s_star)
    f = params.mu * (sol.dpsi0 + params.rho * sol.dphi0) - s
    return (f, sol) if return_solution else f


def solve_speed(
    params: ModelParams,
    speed_tol: float = 1e-6,
    settings: SemiWaveSettings | None = None,
    s_star: float | None = None,
) -> SpeedResult:
    """Bisection for the zero of ``f`` on ``[0, 0.999 s*]``.

    All evaluations share one grid, sized for the slowest tail in the
    bracket, so the sampled ``f`` is a single discrete function of ``s``.
    """
    if not params.cooperation_margin > 0:
        raise DomainError("speed fixed point needs bc - ad > 0")
    eq = solve_equilibrium(params)
    if s_star is None:
        s_star = critical_speed(params)
    hi = 0.999 * s_star
    lo = 0.0
    base = settings or SemiWaveSettings()
    if base.L is None or base.N is None:
        L, N = base.grid(params, hi, eq)
        base = SemiWaveSettings(L=L, N=N, method=base.method)
    samples = []
    cache = {}

    def evaluate(s, near=None):
        f, sol = speed_residual(
            params, s, base, eq=eq, initial=near, return_solution=True, s_star=s_star
        )
        samples.append((float(s), float(f)))
        cache[s] = sol
        return f

    f_lo = evaluate(lo)
    f_hi = evaluate(hi)
    if not (f_lo > 0 and f_hi < 0):
        raise NumericalFailure(
            f"f does not change sign on [0, {hi:g}]: f(0)={f_lo:g}, f({hi:g})={f_hi:g}",
            residual=(f_lo, f_hi),
        )
    best_s, best_f = (lo, f_lo) if abs(f_lo) < abs(f_hi) else (hi, f_hi)
    while True:
        mid = 0.5 * (lo + hi)
        # warm start from the closer bracket end
        donor = cache[lo] if mid - lo <= hi - mid else cache[hi]
        f_mid = evaluate(mid, near=(donor.phi, donor.psi))
        if abs(f_mid) < abs(best_f):
            best_s, best_f = mid, f_mid
        if f_mid > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= speed_tol and abs(best_f) <= speed_tol:
            break
        if hi - lo <= 1e-15 * max(1.0, hi):
            raise NumericalFailure(
                "bisection exhausted precision before |f| met the tolerance",
                last_iterate=best_s,
                residual=best_f,
            )
    return SpeedResult(
        s_mu_rho=float(best_s),
        f_values=tuple(samples),
        bracket_width=float(hi - lo),
        solution=cache[best_s],
    )
