"""Dispersion quartic, critical wave speed, tail decay rate and habitat threshold.

For a speed ``s`` the quartic

    P_s(lam) = (d1 lam^2 - s lam - a)(d2 lam^2 - s lam - d) - b c

governs exponential solutions of the system linearised at zero; ``s*`` is
the smallest speed above which all four roots are real. The same quartic
with ``a -> a + F'(u*)`` and ``d -> d + G'(v*)`` describes the approach of a
semi-wave to the equilibrium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equilibrium import Equilibrium, solve_equilibrium
from .errors import DomainError, InvariantViolation, NumericalFailure
from .model import ModelParams

__all__ = [
    "QuarticRoots",
    "SpectralSummary",
    "quartic_coefficients",
    "eval_quartic",
    "quartic_roots",
    "critical_speed",
    "tail_rate",
    "principal_eigenvalue",
    "critical_length",
    "spectral_summary",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuarticRoots:
    roots: np.ndarray
    all_real: bool


@dataclass(frozen=True)
class SpectralSummary:
    s_star: float
    mu_hat1: float
    lambda0: float
    l_star: float


def quartic_coefficients(d1, d2, a, d, bc, s):
    """Coefficients (highest degree first) of ``(d1 x^2 - s x - a)(d2 x^2 - s x - d) - bc``."""
    p1 = np.array([d1, -s, -a], dtype=float)
    p2 = np.array([d2, -s, -d], dtype=float)
    coeffs = np.polymul(p1, p2)
    coeffs[-1] -= bc
    return coeffs


def eval_quartic(params: ModelParams, s: float, lam: complex) -> complex:
    p1 = params.d1 * lam * lam - s * lam - params.a
    p2 = params.d2 * lam * lam - s * lam - params.d
    return p1 * p2 - params.b * params.c


def _companion_roots(coeffs):
    monic = coeffs[1:] / coeffs[0]
    n = monic.size
    comp = np.zeros((n, n))
    comp[0, :] = -monic
    comp[1:, :-1] = np.eye(n - 1)
    return np.linalg.eigvals(comp).astype(complex)


def _merge_collisions(coeffs, roots):
    """Snap near-coincident root pairs onto a numerically double real root.

    A double root is ill-conditioned: the eigensolver scatters it into a pair
    with imaginary parts near sqrt(eps). If ``P'`` vanishes near the pair's
    real part and ``P`` is zero there to rounding, the pair is a collision.
    """
    roots = roots.copy()
    dcoeffs = np.polyder(coeffs)
    ddcoeffs = np.polyder(dcoeffs)
    abscoeffs = np.abs(coeffs)
    for i in range(roots.size):
        z = roots[i]
        if z.imag < 0:
            continue
        if z.imag > 0:
            if abs(z.imag) <= 1e-9 * (1 + abs(z)) or abs(z.imag) > 1e-6 * (1 + abs(z)):
                continue
            j = int(np.argmin(np.abs(roots - np.conj(z))))
        else:
            others = np.abs(roots - z)
            others[i] = np.inf
            j = int(np.argmin(others))
            if roots[j].imag != 0 or others[j] > 1e-6 * (1 + abs(z)):
                continue
            z = 0.5 * (z + roots[j])
        x = z.real
        for _ in range(30):
            dp = np.polyval(dcoeffs, x)
            ddp = np.polyval(ddcoeffs, x)
            if ddp == 0:
                break
            step = dp / ddp
            x -= step
            if abs(step) <= 4 * _EPS * (1 + abs(x)):
                break
        floor = 1e3 * _EPS * np.polyval(abscoeffs, abs(x))
        if abs(np.polyval(coeffs, x)) <= floor and abs(x - z.real) <= 1e-6 * (1 + abs(x)):
            roots[i] = x
            roots[j] = x
    return roots


def _roots_of(coeffs) -> QuarticRoots:
    roots = _merge_collisions(coeffs, _companion_roots(coeffs))
    roots = roots[np.lexsort((roots.imag, roots.real))]
    all_real = bool(np.all(np.abs(roots.imag) <= 1e-9 * (1 + np.abs(roots))))
    return QuarticRoots(roots=roots, all_real=all_real)


def quartic_roots(params: ModelParams, s: float) -> QuarticRoots:
    """The four roots of ``P_s`` from the companion matrix eigenvalues."""
    if s < 0:
        raise DomainError("speed must be nonnegative")
    coeffs = quartic_coefficients(
        params.d1, params.d2, params.a, params.d, params.b * params.c, s
    )
    return _roots_of(coeffs)


def critical_speed(params: ModelParams, tol: float = 1e-10) -> float:
    """Infimum of speeds beyond which ``P_s`` has only real roots (bisection)."""
    if not params.cooperation_margin > 0:
        raise DomainError("critical speed needs bc - ad > 0")
    if not tol > 0:
        raise DomainError("tol must be positive")
    real = lambda s: quartic_roots(params, s).all_real  # noqa: E731
    cap = 1e3 * max(1.0, math.sqrt(params.a + params.d))
    s_lo = 0.0
    if real(s_lo):
        raise NumericalFailure("P_0 has only real roots although bc > ad")
    s_hi = 1.0
    while True:
        while not real(s_hi):
            s_lo = s_hi
            s_hi *= 2.0
            if s_hi > cap:
                raise NumericalFailure(f"no all-real speed found below {cap:g}", last_iterate=s_lo)
        while s_hi - s_lo > tol:
            mid = 0.5 * (s_lo + s_hi)
            if mid <= s_lo or mid >= s_hi:
                break
            if real(mid):
                s_hi = mid
            else:
                s_lo = mid
        # the definition is an infimum over tails; reality must persist above the bracket
        bad = [f * s_hi for f in (1.5, 2.0, 4.0) if not real(f * s_hi)]
        if not bad:
            return s_hi
        s_lo = max(bad)
        s_hi = 2.0 * s_lo


def tail_rate(params: ModelParams, s: float, equilibrium: Equilibrium | None = None) -> float:
    """Exponential rate at which a semi-wave of speed ``s`` approaches ``(u*, v*)``.

    It is minus the largest strictly negative real root of the quartic
    linearised at the equilibrium.
    """
    if equilibrium is None:
        equilibrium = solve_equilibrium(params)
    a_eff = params.a + float(params.F_spec.derivative(equilibrium.u_star))
    d_eff = params.d + float(params.G_spec.derivative(equilibrium.v_star))
    coeffs = quartic_coefficients(params.d1, params.d2, a_eff, d_eff, params.b * params.c, s)
    roots = _roots_of(coeffs).roots
    tol = 1e-9 * (1 + np.abs(roots))
    neg = roots.real[(np.abs(roots.imag) <= tol) & (roots.real < 0)]
    if neg.size == 0:
        raise InvariantViolation("linearised quartic has no negative real root")
    return float(-neg.max())


def _eigen_matrix(params, l):
    k2 = (math.pi / (2.0 * l)) ** 2
    return np.array(
        [[params.d1 * k2 + params.a, -params.b], [-params.c, params.d2 * k2 + params.d]]
    )


def principal_eigenvalue(params: ModelParams, l: float, return_vector: bool = False):
    """Principal eigenvalue of the cooperative Dirichlet problem on ``(-l, l)``.

    The principal eigenfunction is ``(delta cos(kx), cos(kx))`` with
    ``k = pi/(2l)``, so the problem reduces to the smaller eigenvalue of a
    2x2 matrix with negative off-diagonal entries.
    """
    if not l > 0:
        raise DomainError("half-length must be positive")
    m = _eigen_matrix(params, l)
    tr = m[0, 0] + m[1, 1]
    gap = math.hypot(m[0, 0] - m[1, 1], 2.0 * math.sqrt(params.b * params.c))
    lam = 0.5 * (tr - gap)
    if not return_vector:
        return lam
    # (m00 - lam) w = b nu; both factors positive
    vec = np.array([params.b, m[0, 0] - lam])
    if m[0, 0] - lam <= 0:
        vec = np.array([m[1, 1] - lam, params.c])
    vec = vec / np.linalg.norm(vec)
    if not np.all(vec > 0):
        raise InvariantViolation("principal eigenvector is not positive")
    return lam, vec


def critical_length(params: ModelParams, tol: float = 1e-13) -> float:
    """Half-length where the principal eigenvalue changes sign (bisection)."""
    if not params.cooperation_margin > 0:
        raise DomainError("critical length needs bc - ad > 0")
    lo, hi = 1.0, 1.0
    while principal_eigenvalue(params, lo) <= 0:
        lo *= 0.5
    while principal_eigenvalue(params, hi) >= 0:
        hi *= 2.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if principal_eigenvalue(params, mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def spectral_summary(params: ModelParams, s: float, l: float | None = None) -> SpectralSummary:
    eq = solve_equilibrium(params)
    l_star = critical_length(params)
    return SpectralSummary(
        s_star=critical_speed(params),
        mu_hat1=tail_rate(params, s, eq),
        lambda0=principal_eigenvalue(params, l_star if l is None else l),
        l_star=l_star,
    )
