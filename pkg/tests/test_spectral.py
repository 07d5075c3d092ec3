import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from coopfront import (
    DomainError,
    critical_length,
    critical_speed,
    principal_eigenvalue,
    quartic_roots,
    reference_params,
    spectral_summary,
    tail_rate,
)
from coopfront.spectral import eval_quartic


def real_root_count(p, s, span=30.0, n=200001):
    """Sign changes of P_s on a dense grid; an oracle that never forms a companion matrix."""
    lam = np.linspace(-span, span, n)
    vals = eval_quartic(p, s, lam)
    return int(np.count_nonzero(np.signbit(vals[1:]) != np.signbit(vals[:-1])))


def scan_critical_speed(p, ds=1e-3, s_max=5.0):
    """Grid speed just beyond the last one where the scan sees fewer than four real roots."""
    lo, hi, step = 0.0, s_max, (s_max - 0.0) / 50
    while step > ds:
        grid = np.arange(lo, hi + step, step)
        counts = [real_root_count(p, s) for s in grid]
        last = max(i for i, c in enumerate(counts) if c < 4)
        lo, hi = grid[last], grid[min(last + 1, len(grid) - 1)]
        step = max(step / 20, ds)
    grid = np.arange(lo, hi + ds, ds)
    counts = [real_root_count(p, s) for s in grid]
    last = max(i for i, c in enumerate(counts) if c < 4)
    return grid[last + 1]


def fd_principal_eigenvalue(p, l, n=400):
    """Smallest eigenvalue of the centred-difference Dirichlet operator on (-l, l)."""
    h = 2 * l / n
    k = n - 1
    lap = (np.diag(np.full(k, 2.0)) - np.diag(np.ones(k - 1), 1) - np.diag(np.ones(k - 1), -1)) / h**2
    eye = np.eye(k)
    op = np.block([[p.d1 * lap + p.a * eye, -p.b * eye], [-p.c * eye, p.d2 * lap + p.d * eye]])
    return float(np.min(scipy.linalg.eigvals(op).real))


def test_quartic_values(R):
    assert eval_quartic(R, 0.7, 0.0) == -3.0
    assert abs(eval_quartic(R, 0.0, math.sqrt(3.0))) < 1e-14
    assert abs(eval_quartic(R, 0.0, 1j)) < 1e-14


def test_roots_at_zero_speed(R):
    res = quartic_roots(R, 0.0)
    assert not res.all_real
    expected = sorted([-math.sqrt(3), math.sqrt(3), 1j, -1j], key=lambda z: (z.real, z.imag))
    np.testing.assert_allclose(res.roots, expected, atol=1e-12)


def test_roots_at_large_speed(R):
    assert quartic_roots(R, 3.0).all_real


def test_double_root_at_threshold(R):
    res = quartic_roots(R, 2.0)
    assert res.all_real
    np.testing.assert_allclose(res.roots.real, [-1.0, 1.0, 1.0, 3.0], atol=1e-10)


def test_negative_speed_rejected(R):
    with pytest.raises(DomainError):
        quartic_roots(R, -0.1)


@settings(max_examples=60, deadline=None)
@given(
    d1=st.floats(0.2, 5), d2=st.floats(0.2, 5), a=st.floats(0.1, 3), d=st.floats(0.1, 3),
    bc=st.floats(0.1, 20), s=st.floats(0, 10),
)
def test_root_residuals(d1, d2, a, d, bc, s):
    p = reference_params(d1=d1, d2=d2, a=a, d=d, b=math.sqrt(bc), c=math.sqrt(bc))
    for lam in quartic_roots(p, s).roots:
        # scale of the terms that cancel at a root
        scale = (d1 * abs(lam) ** 2 + s * abs(lam) + a) * (d2 * abs(lam) ** 2 + s * abs(lam) + d) + bc
        assert abs(eval_quartic(p, s, lam)) <= 1e-7 * scale


def test_critical_speed_reference(R):
    assert critical_speed(R, tol=1e-8) == pytest.approx(2.0, abs=1e-8)
    assert abs(critical_speed(R, tol=1e-3) - critical_speed(R, tol=1e-8)) <= 1e-3


def test_critical_speed_near_degenerate_cooperation():
    p = reference_params(b=1.001, c=1.001)
    s_star = critical_speed(p)
    assert 0 < s_star < 0.2
    # equal diffusion and a=d factor the quartic: s* = 2 sqrt(sqrt(bc) - a)
    assert s_star == pytest.approx(2 * math.sqrt(1.001 - 1.0), abs=1e-8)
    assert abs(scan_critical_speed(p, ds=1e-3, s_max=0.3) - s_star) <= 1.5e-3


@pytest.mark.parametrize(
    "changes", [dict(d1=2.0, d2=0.5), dict(d1=0.3, a=2.0, b=3.0, c=1.5), dict(d=0.2, c=0.5)]
)
def test_critical_speed_against_scan(changes):
    p = reference_params(**changes)
    s_star = critical_speed(p)
    assert abs(scan_critical_speed(p, ds=2e-3, s_max=s_star + 0.5) - s_star) <= 3e-3


def test_reality_switches_once(R):
    p = reference_params(d1=2.0, d2=0.5)
    s_star, tol = critical_speed(p), 1e-10
    assert not any(quartic_roots(p, s).all_real for s in np.linspace(0, s_star - 1e-6, 200))
    assert all(quartic_roots(p, s).all_real for s in np.linspace(s_star + tol, 4 * s_star, 200))


@pytest.mark.parametrize("s", [0.0, 0.5, 1.0, 1.5, 3.0])
def test_tail_rate_closed_form(R, s):
    assert tail_rate(R, s) == pytest.approx((math.sqrt(s * s + 4) - s) / 2, abs=1e-12)


@pytest.mark.parametrize("l", [0.5, 1.0, math.pi / 2, 3.0])
def test_principal_eigenvalue_closed_form(R, l):
    assert principal_eigenvalue(R, l) == pytest.approx((math.pi / (2 * l)) ** 2 - 1, abs=1e-10)


def test_principal_eigenvalue_limit(R):
    assert principal_eigenvalue(R, 1e6) == pytest.approx(-1.0, abs=1e-10)


@pytest.mark.parametrize("changes", [dict(d1=2.0, d2=0.5), dict(a=0.5, d=1.5, b=1.0, c=3.0)])
def test_principal_eigenvalue_against_finite_differences(changes):
    p = reference_params(**changes)
    for l in (0.8, 2.0):
        assert principal_eigenvalue(p, l) == pytest.approx(fd_principal_eigenvalue(p, l), abs=2e-4)


def test_principal_eigenvector_is_positive():
    lam, vec = principal_eigenvalue(reference_params(d1=2.0, b=0.7, c=5.0), 1.3, return_vector=True)
    assert np.all(vec > 0)


@given(l1=st.floats(0.05, 50), ratio=st.floats(1.001, 10))
def test_principal_eigenvalue_decreasing(l1, ratio):
    p = reference_params(d1=1.7, d2=0.4, b=1.5)
    assert principal_eigenvalue(p, l1) > principal_eigenvalue(p, l1 * ratio)


def test_critical_length_examples(R):
    assert critical_length(R) == pytest.approx(math.pi / 2, abs=1e-8)
    assert critical_length(reference_params(d1=4.0, d2=4.0)) == pytest.approx(math.pi, abs=1e-8)
    assert critical_length(reference_params(b=1.1, c=1.1)) > critical_length(R)


def test_critical_length_requires_cooperation():
    with pytest.raises(DomainError):
        critical_length(reference_params(b=0.5, c=0.5))


def test_summary(R):
    summary = spectral_summary(R, 1.0)
    assert summary.s_star == pytest.approx(2.0, abs=1e-8)
    assert summary.lambda0 == pytest.approx(0.0, abs=1e-10)
    assert summary.mu_hat1 == pytest.approx((math.sqrt(5) - 1) / 2)
