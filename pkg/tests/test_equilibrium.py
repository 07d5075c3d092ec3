import numpy as np
import pytest
from scipy.optimize import brentq

from coopfront import (
    DivergenceError,
    DomainError,
    NonlinearitySpec,
    integrate_homogeneous,
    invariant_box,
    reference_params,
    solve_equilibrium,
)
from coopfront.equilibrium import lipschitz_bound


def brentq_equilibrium(p):
    """Eliminate v through the first equation and bracket the positive root in u."""
    F, G = p.F_spec, p.G_spec

    def v_of(u):
        return (p.a * u + F.kappa * u**F.p) / p.b

    def g(u):
        v = v_of(u)
        return p.c * u - p.d * v - G.kappa * v**G.p

    lo, hi = 1e-12, 1.0
    while g(hi) > 0:
        hi *= 2.0
    u = brentq(g, lo, hi, xtol=1e-15, rtol=1e-15)
    return u, v_of(u)


def random_params(rng, n):
    out = []
    while len(out) < n:
        a, d = rng.uniform(0.3, 2.0, 2)
        b, c = rng.uniform(0.3, 3.0, 2)
        if b * c - a * d < 0.2:
            continue
        out.append(
            reference_params(
                d1=rng.uniform(0.5, 2), d2=rng.uniform(0.5, 2), a=a, b=b, c=c, d=d,
                F_spec=NonlinearitySpec(rng.uniform(0.5, 2), rng.uniform(2, 3)),
                G_spec=NonlinearitySpec(rng.uniform(0.5, 2), rng.uniform(2, 3)),
            )
        )
    return out


def test_reference_equilibrium(R):
    eq = solve_equilibrium(R)
    assert eq.u_star == pytest.approx(1.0, abs=1e-10)
    assert eq.v_star == pytest.approx(1.0, abs=1e-10)


def test_stronger_cooperation():
    eq = solve_equilibrium(reference_params(b=3.0, c=3.0))
    assert (eq.u_star, eq.v_star) == pytest.approx((2.0, 2.0), abs=1e-10)


def test_asymmetric_instance_against_long_integration():
    p = reference_params(d=2.0, c=3.0)
    eq = solve_equilibrium(p)
    traj = integrate_homogeneous(p, 0.5, 0.5, 1000.0, dt=0.01)
    assert abs(traj.U[-1] - eq.u_star) <= 1e-8
    assert abs(traj.V[-1] - eq.v_star) <= 1e-8
    assert max(map(abs, eq.residual(p))) <= 1e-12


def test_random_instances_against_brentq_and_ode():
    for p in random_params(np.random.default_rng(7), 20):
        eq = solve_equilibrium(p)
        u, v = brentq_equilibrium(p)
        assert eq.u_star == pytest.approx(u, rel=1e-10)
        assert eq.v_star == pytest.approx(v, rel=1e-10)
        dt = min(0.01, 0.1 / lipschitz_bound(p, 1.0, 1.0))
        traj = integrate_homogeneous(p, 1.0, 1.0, 1000.0, dt=dt)
        assert abs(traj.U[-1] - eq.u_star) <= 1e-8
        assert abs(traj.V[-1] - eq.v_star) <= 1e-8


def test_guess_independence(R):
    p = reference_params(d=2.0, c=3.0, G_spec=NonlinearitySpec(0.7, 2.5))
    ref = solve_equilibrium(p)
    for guess in [(0.01, 0.01), (10.0, 0.1), (50.0, 50.0)]:
        eq = solve_equilibrium(p, guess=guess)
        assert eq.u_star == pytest.approx(ref.u_star, abs=1e-10)
        assert eq.v_star == pytest.approx(ref.v_star, abs=1e-10)


def test_requires_cooperation():
    with pytest.raises(DomainError):
        solve_equilibrium(reference_params(b=0.5, c=0.5))


def test_fixed_point_trajectory(R):
    traj = integrate_homogeneous(R, 1.0, 1.0, 1.0)
    assert np.all(traj.U == 1.0) and np.all(traj.V == 1.0)
    assert traj.times[-1] == 1.0


@pytest.mark.parametrize("start", [(2.0, 2.0), (0.1, 0.1)])
def test_attraction(R, start):
    traj = integrate_homogeneous(R, *start, 50.0, dt=1e-3)
    assert abs(traj.U[-1] - 1.0) <= 1e-6 and abs(traj.V[-1] - 1.0) <= 1e-6
    # monotone approach from above and from below
    sign = -1.0 if start[0] > 1 else 1.0
    assert np.all(sign * np.diff(traj.U) >= -1e-10)
    assert np.all(sign * np.diff(traj.V) >= -1e-10)


def test_order_preservation(R):
    lo = integrate_homogeneous(R, 0.2, 0.5, 20.0, dt=1e-3)
    hi = integrate_homogeneous(R, 0.3, 0.5, 20.0, dt=1e-3)
    assert np.all(hi.U - lo.U >= -1e-8) and np.all(hi.V - lo.V >= -1e-8)


def test_fourth_order_endpoint(R):
    ends = [integrate_homogeneous(R, 0.1, 0.3, 2.0, dt=h).U[-1] for h in (0.02, 0.01, 0.005)]
    ratio = (ends[0] - ends[1]) / (ends[1] - ends[2])
    assert 12.0 < ratio < 20.0


def test_stability_precondition(R):
    with pytest.raises(DomainError):
        integrate_homogeneous(R, 1.0, 1.0, 1.0, dt=1.0)


def test_weak_sink_fails_the_stability_check():
    # the invariant box is astronomically large, so no fixed dt is admissible
    p = reference_params(F_spec=NonlinearitySpec(1e-9, 1.01), G_spec=NonlinearitySpec(1e-9, 1.01))
    assert invariant_box(p, 1.0, 1.0) == float("inf")
    with pytest.raises(DomainError):
        integrate_homogeneous(p, 1.0, 1.0, 100.0, dt=1e-3)


def test_divergence_above_blowup_level(R):
    with pytest.raises(DivergenceError):
        integrate_homogeneous(R, 2e6, 2e6, 1.0, dt=1e-8)


def test_invariant_box_covers_equilibrium(R):
    assert invariant_box(R, 0.5, 0.5) >= 1.0
    assert invariant_box(R, 3.0, 0.5) == 3.0
