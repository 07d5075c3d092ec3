"""Two initial habitats on either side of the critical length."""

from coopfront import (
    classify,
    critical_length,
    fit_speed_and_drift,
    front_speed_series,
    make_initial_preset,
    reference_params,
    run,
    solve_speed,
)

R = reference_params()
l_star = critical_length(R)
speed = solve_speed(R, 1e-6)
print(f"l* = {l_star:.4f}, s_mu_rho = {speed.s_mu_rho:.6f}")

for h0, amp in ((3.0, 0.5), (0.5, 0.01)):
    traj = run(R, make_initial_preset(h0, amp, amp), M=400, t_end=60.0, semiwave=speed.solution)
    verdict = classify(traj, params=R)
    print(f"\nh0={h0} amp={amp}: {verdict.kind}")
    print(f"  final span {verdict.final_span:.3f}, max density {verdict.final_max_density:.3e}")
    if verdict.kind == "Spreading":
        fit = fit_speed_and_drift(traj)
        series = front_speed_series(traj)
        print(f"  fitted speed {fit.s_hat:.5f} (right) {fit.s_hat_left:.5f} (left)")
        print(f"  mean h' over the last fifth {series['mean_right']:.5f}")
        print(f"  drift h* ~ {fit.h_star_hat:.4f}")
        print(f"  distance to the semi-wave at t=60: {traj['profile_err_right'][-1]:.2e}")

    for k in range(0, len(traj), 20):
        print(f"  t={traj['t'][k]:5.1f}  h={traj['h'][k]:8.3f}  max u={traj['max_u'][k]:.3e}")
