"""Sweep the Stefan coefficient and write a summary table."""

import sys

from coopfront.experiments import run_sweep

out = sys.argv[1] if len(sys.argv) > 1 else "out/mu_sweep"

sweep = {
    "base": {"numerics": {"t_end": 30.0}},
    "axes": [{"path": "params.mu", "values": [0.25, 0.5, 1.0, 2.0]}],
    "max_parallel": 2,
}

rows = run_sweep(sweep, out)
for row in rows:
    print(f"mu={row['params.mu']:<5} s_mu_rho={row['s_mu_rho']:.6f}  "
          f"verdict={row['verdict']}  s_hat={row['s_hat']:.6f}")
print("table written to", out)
