"""Linear-quadratic mean-field control with vanishing viscosity.

Riccati-cascade synthesis of the optimal affine feedback, deterministic
and viscous propagation of the controlled population, Wasserstein-2 and
cost diagnostics, and the epsilon-sweep experiment.
"""

from .dynamics import (
    EmpiricalTrajectory,
    GaussianTrajectory,
    ViscousOptions,
    propagate_deterministic,
    propagate_gaussian,
    propagate_viscous,
    sample_initial,
)
from .lab import SweepConfig, SweepReport, epsilon_sweep, fit_rate, optimality_check
from .measures import Empirical, Gaussian, UniformBox
from .metrics import (
    CostBreakdown,
    barycenter,
    second_moment,
    sup_w2,
    total_cost,
    w2_1d,
    w2_assignment,
    w2_gaussian,
)
from .ode import TimeGrid
from .problem import (
    ProblemSpec,
    TimeVaryingMat,
    drift,
    eval_tv,
    load_problem,
    running_cost,
    terminal_cost,
    validate,
)
from .synthesis import (
    AffineFeedback,
    SynthesisSolution,
    hamiltonian,
    hamiltonian_minimizer,
    optimal_drift,
    solve_mean_flow,
    solve_offset,
    solve_P,
    solve_sigma,
    synthesize,
    z_diagnostic,
)

__version__ = "0.1.0"
