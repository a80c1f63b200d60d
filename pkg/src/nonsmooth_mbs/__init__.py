"""Mixed timestepping for nonsmooth flexible multibody systems.

Implicit base integrators with controllable high-frequency damping
(generalized-alpha, Bathe, energy-decaying alpha) combined with velocity-level
set-valued contact/friction solves and automatic impulsive corrections, plus a
floating-frame flexible slider-crank application, spectral analysis tools,
modal reduction and scenario/CSV tooling.
"""

from .contact import (
    ContactForces,
    ContactSolverError,
    ImpulseForces,
    SolveContext,
    apply_impulse,
    build_context,
    build_impulse_context,
    prox_interval,
    prox_nonneg,
    solve_contact_forces,
    solve_impulses,
)
from .core import (
    GeneralizedState,
    MechanicalModel,
    ModelError,
    SystemEvaluation,
    active_set,
    initial_acceleration,
    make_initial_state,
    newly_closed,
)
from .integrators import (
    IntegratorConfig,
    SimulationError,
    StepError,
    StepReport,
    ed_params,
    galpha_params,
    mixed_step,
    simulate,
    step_bathe,
    step_ed_alpha,
    step_generalized_alpha,
    step_moreau,
)

__version__ = "0.1.0"
