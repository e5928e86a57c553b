"""Graph-based LVDC microgrid modeling and logarithmic-norm stability.

Build a microgrid as a weighted graph (`topology`), assemble its open- and
closed-loop linear dynamics (`assembly`), score stability with the
logarithmic norm and transient-growth diagnostics (`lognorm`), integrate
trajectories (`simulate`), and iteratively improve the metric by switching
producer/consumer roles (`stabilizer`).  The `cli` module exposes the same
pipeline as the ``lognormgrid`` command.
"""

from . import errors
from .assembly import (
    ClosedLoopSystem,
    DroopConfig,
    OpenLoopSystem,
    Role,
    RoleAssignment,
    assemble_closed_loop,
    assemble_open_loop,
    equilibrium,
    permutation_matrix,
)
from .kernels import active_backend, available_backends
from .lognorm import (
    Envelope,
    StabilityReport,
    exp_envelope,
    log_norm,
    log_norm_limit,
    matrix_two_norm,
    pseudospectral_abscissa_lower_bound,
    spectral_abscissa,
    stability_report,
    stiffness_ratio,
)
from .scenario import LoadStepEvent, Scenario
from .simulate import (
    Trajectory,
    convergence_order,
    default_initial_state,
    default_step,
    dini_check,
    integrate,
    integrate_forced,
    measure_transient_growth,
)
from .stabilizer import (
    StabilizerConfig,
    StabilizerRun,
    SwitchDecision,
    detect_candidates,
    evaluate_switch,
)
from .stabilizer import run as run_stabilizer
from .topology import LineParams, MicrogridGraph, NodeParams, incidence, validate

__version__ = "0.1.0"

__all__ = [
    "ClosedLoopSystem",
    "DroopConfig",
    "Envelope",
    "LineParams",
    "LoadStepEvent",
    "MicrogridGraph",
    "NodeParams",
    "OpenLoopSystem",
    "Role",
    "RoleAssignment",
    "Scenario",
    "StabilityReport",
    "StabilizerConfig",
    "StabilizerRun",
    "SwitchDecision",
    "Trajectory",
    "active_backend",
    "assemble_closed_loop",
    "assemble_open_loop",
    "available_backends",
    "convergence_order",
    "default_initial_state",
    "default_step",
    "detect_candidates",
    "dini_check",
    "equilibrium",
    "errors",
    "evaluate_switch",
    "exp_envelope",
    "incidence",
    "integrate",
    "integrate_forced",
    "log_norm",
    "log_norm_limit",
    "matrix_two_norm",
    "measure_transient_growth",
    "permutation_matrix",
    "pseudospectral_abscissa_lower_bound",
    "run_stabilizer",
    "spectral_abscissa",
    "stability_report",
    "stiffness_ratio",
    "validate",
]
