import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from coopfront import (
    DomainError,
    InvariantViolation,
    SemiWaveSettings,
    front_derivatives,
    reference_params,
    semiwave_residual,
    solve_semiwave,
    solve_speed,
    speed_residual,
    tail_rate,
)
from coopfront.semiwave import (
    SemiWaveSolution,
    default_length,
    fit_tail,
    one_sided_slope,
    solve_semiwave_newton,
    solve_semiwave_relax,
)

# frozen from solve_speed(R, 1e-6) on the default grid; the shooting oracle
# below lands within 6e-7 of it
GOLDEN_SPEED = 0.547685751914978


def _overshoots(s, sigma, t_max=80.0):
    def rhs(t, y):
        return [y[1], s * y[1] - y[0] + y[0] ** 2]

    def hit(t, y):
        return y[0] - 1.0

    def turn(t, y):
        return y[1]

    hit.terminal, hit.direction = True, 1
    turn.terminal, turn.direction = True, -1
    sol = solve_ivp(rhs, (0, t_max), [0.0, sigma], events=(hit, turn),
                    rtol=1e-12, atol=1e-14, method="DOP853")
    if sol.t_events[0].size:
        return True
    if sol.t_events[1].size:
        return False
    return None


def shooting_slope(s):
    """phi'(0) for R, where phi = psi reduces the system to phi'' = s phi' - phi + phi^2."""
    lo, hi = 0.05, 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        verdict = _overshoots(s, mid)
        if verdict is None:
            return mid
        lo, hi = (lo, mid) if verdict else (mid, hi)
    return 0.5 * (lo + hi)


def test_zero_speed_profile(R):
    sol = solve_semiwave_newton(R, 0.0, 40.0, 2000)
    assert sol.phi[-1] == pytest.approx(1.0) and sol.psi[-1] == pytest.approx(1.0)
    np.testing.assert_allclose(sol.phi, sol.psi, atol=1e-12)
    assert sol.dphi0 == pytest.approx(sol.dpsi0, abs=1e-12) and sol.dphi0 > 0
    assert np.max(np.abs(semiwave_residual(R, sol))) <= 1e-11
    assert sol.phi[0] == sol.psi[0] == 0.0
    # strict increase wherever the increment is above rounding level
    resolvable = 1.0 - sol.phi[1:] > 1e-10
    assert np.all(np.diff(sol.phi)[resolvable] > 0)


def test_zero_speed_slope_closed_form(R):
    # first integral at s = 0: phi'^2/2 + phi^2/2 - phi^3/3 is conserved
    assert solve_semiwave(R, 0.0).dphi0 == pytest.approx(1 / math.sqrt(3), abs=5e-6)


@pytest.mark.parametrize("s", [0.5, 1.0])
def test_slope_against_shooting(R, s):
    assert solve_semiwave(R, s).dphi0 == pytest.approx(shooting_slope(s), abs=1e-5)


def test_profiles_collapse_near_critical_speed(R):
    fast = solve_semiwave_newton(R, 1.9, 40.0, 4000)
    slow = solve_semiwave_newton(R, 0.5, 40.0, 4000)
    assert fast.phi[fast.xi <= 10].max() < slow.phi[slow.xi <= 10].max()


def test_grid_refinement(R):
    coarse = solve_semiwave_newton(R, 0.5, 40.0, 1000)
    fine = solve_semiwave_newton(R, 0.5, 40.0, 2000)
    assert np.max(np.abs(coarse.phi - fine.phi[::2])) <= 1e-4
    assert np.max(np.abs(coarse.psi - fine.psi[::2])) <= 1e-4


def test_solvers_agree(R):
    newton = solve_semiwave_newton(R, 0.5, 40.0, 4000)
    relax = solve_semiwave_relax(R, 0.5, 40.0, 4000)
    assert np.max(np.abs(newton.phi - relax.phi)) <= 1e-6
    assert np.max(np.abs(newton.psi - relax.psi)) <= 1e-6


def test_truncation_insensitivity(R):
    short = solve_semiwave_newton(R, 0.5, 40.0, 16000)
    long = solve_semiwave_newton(R, 0.5, 60.0, 24000)
    assert abs(short.dphi0 - long.dphi0) <= 1e-8


def test_front_slope_refinement(R):
    L, N = SemiWaveSettings().grid(R, 0.5)
    a = solve_semiwave_newton(R, 0.5, L, N)
    b = solve_semiwave_newton(R, 0.5, L, 2 * N)
    assert abs(a.dphi0 - b.dphi0) <= 1e-6


def test_one_sided_slope_exactness():
    xi = np.linspace(0, 0.3, 4)
    dx = xi[1] - xi[0]
    assert one_sided_slope(*xi[:3], dx) == pytest.approx(1.0, abs=1e-14)
    assert one_sided_slope(*(xi[:3] ** 2), dx) == pytest.approx(0.0, abs=1e-14)


def test_front_derivatives_reject_flat_front():
    xi = np.linspace(0, 1, 5)
    sol = SemiWaveSolution(0.0, 1.0, xi, xi**2, xi, 1.0, 1.0)
    with pytest.raises(InvariantViolation):
        front_derivatives(sol)


def test_fit_tail_on_exact_exponential():
    xi = np.linspace(0, 10, 2001)
    phi = 1.0 - np.exp(-2 * xi)
    sol = SemiWaveSolution(0.0, 10.0, xi, phi, phi, 1.0, 1.0)
    assert fit_tail(sol) == pytest.approx(2.0, abs=1e-6)


@pytest.mark.parametrize("s", [0.0, 1.0])
def test_fitted_tail_matches_spectral_rate(R, s):
    sol = solve_semiwave(R, s)
    assert sol.fitted_tail == pytest.approx(tail_rate(R, s), rel=0.05)


def test_supercritical_speed_rejected(R):
    with pytest.raises(DomainError):
        solve_semiwave(R, 2.5)


def test_small_grid_rejected(R):
    with pytest.raises(DomainError):
        solve_semiwave_newton(R, 0.5, 40.0, 100)


def test_speed_residual_signs(R):
    assert speed_residual(R, 0.0) > 0
    assert speed_residual(R, 0.0) == pytest.approx(2 / math.sqrt(3), abs=1e-5)
    assert speed_residual(R, 1.95) < 0
    assert speed_residual(R, 0.3) > speed_residual(R, 0.6)


def test_speed_ordering_and_slope_monotonicity(R):
    speeds = [0.0, 0.6, 1.2, 1.8]
    L = default_length(R, speeds[-1])
    sols = [solve_semiwave_newton(R, s, L, 8000) for s in speeds]
    for slow, fast in zip(sols, sols[1:]):
        assert np.all(slow.phi - fast.phi >= -1e-8)
        assert np.all(slow.psi - fast.psi >= -1e-8)
        assert fast.dphi0 <= slow.dphi0 and fast.dpsi0 <= slow.dpsi0


def test_golden_speed(golden_speed):
    res = golden_speed
    assert 0 < res.s_mu_rho < 2
    assert res.s_mu_rho == pytest.approx(GOLDEN_SPEED, abs=1e-6)
    f_at = dict(res.f_values)
    assert abs(min(f_at.values(), key=abs)) <= 1e-6
    assert res.bracket_width <= 1e-6


def test_golden_speed_against_shooting():
    oracle = brentq(lambda s: 2 * shooting_slope(s) - s, 0.1, 1.5, xtol=1e-12)
    assert oracle == pytest.approx(GOLDEN_SPEED, abs=1e-6)


def test_sampled_residual_is_decreasing(golden_speed):
    samples = sorted(golden_speed.f_values)
    assert all(f1 > f2 for (_, f1), (_, f2) in zip(samples, samples[1:]))


@pytest.mark.parametrize("changes", [dict(mu=0.01), dict(rho=0.0)])
def test_speed_decreases_with_weaker_front_coupling(changes, golden_speed):
    res = solve_speed(reference_params(**changes), 1e-6)
    assert 0 < res.s_mu_rho < golden_speed.s_mu_rho
