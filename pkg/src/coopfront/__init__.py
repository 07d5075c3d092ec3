"""Spreading fronts for a cooperative two-species reaction-diffusion system.

Free boundaries move by a Stefan law; the package computes the equilibrium,
the linear spectral data, semi-wave profiles with the asymptotic front speed,
and simulates the full free-boundary problem.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BlowUpError,
    DivergenceError,
    DomainError,
    GeometryError,
    InvariantViolation,
    NumericalFailure,
)
from .model import (  # noqa: E402
    InitialData,
    ModelParams,
    NonlinearitySpec,
    check_initial,
    eval_loss,
    make_initial_preset,
    reference_params,
    validate,
)
from .equilibrium import (  # noqa: E402
    Equilibrium,
    integrate_homogeneous,
    invariant_box,
    solve_equilibrium,
)
from .spectral import (  # noqa: E402
    critical_length,
    critical_speed,
    principal_eigenvalue,
    quartic_roots,
    spectral_summary,
    tail_rate,
)
from .semiwave import (  # noqa: E402
    SemiWaveSettings,
    SemiWaveSolution,
    SpeedResult,
    front_derivatives,
    semiwave_residual,
    solve_semiwave,
    solve_speed,
    speed_residual,
)
from .fbsolver import FrontState, Trajectory, init_state, run, step  # noqa: E402
from .analysis import (  # noqa: E402
    SpeedFit,
    Thresholds,
    Verdict,
    classify,
    fit_speed_and_drift,
    front_speed_series,
    profile_error,
)
