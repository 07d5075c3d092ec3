"""Semi-wave profiles and the speed at which the Stefan condition is consistent."""

import numpy as np

from coopfront import reference_params, solve_semiwave, solve_speed, speed_residual, tail_rate

R = reference_params()

for s in (0.0, 0.5, 1.0, 1.5, 1.9):
    sol = solve_semiwave(R, s)
    mid = sol.phi[np.searchsorted(sol.xi, 5.0)]
    print(f"s={s:.1f}  L={sol.L:6.2f}  N={sol.N:5d}  phi'(0)={sol.dphi0:.6f}  "
          f"phi(5)={mid:.4f}  tail {sol.fitted_tail:.4f} vs {tail_rate(R, s):.4f}")

# f(s) = mu (psi'(0) + rho phi'(0)) - s, strictly decreasing
for s in np.linspace(0.0, 1.9, 6):
    print(f"f({s:.2f}) = {speed_residual(R, s):+.6f}")

res = solve_speed(R, 1e-6)
print("s_mu_rho =", res.s_mu_rho, "after", len(res.f_values), "evaluations")

for mu in (0.01, 0.25, 1.0, 4.0):
    print(f"mu={mu:<5}  s_mu_rho={solve_speed(reference_params(mu=mu), 1e-5).s_mu_rho:.6f}")
