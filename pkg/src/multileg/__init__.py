"""Planar many-legged walker: dynamics, stability, and turning toolkit.

The package simulates a chain of rigid, leg-bearing modules walking under
a wave gait, linearizes the exact straight walk to get Floquet exponents,
maps the branch of spontaneous curved walks that appears when the front
yaw joint softens, and evaluates a turning strategy that picks the front
stiffness whose natural arc passes through a target.
"""

__version__ = "0.1.0"

from .params import (
    ModelParams,
    default_params,
    nmm_deg_to_nm_rad,
    nm_rad_to_nmm_deg,
    with_k1_nmm,
    with_uniform_k_nmm,
)
from .gait import GaitSchedule, leg_phase, stance_count, stance_events
from .dynamics import State, straight_walk_state
from .integrate import SimResult, simulate_raw, simulate_state
from .floquet import (
    CriticalPoint,
    FloquetResult,
    critical_k1,
    critical_surface,
    find_bracket,
    monodromy,
    sweep_exponents,
)
from .bifurcation import (
    BifurcationDiagram,
    WalkTrace,
    curvature_radius,
    default_sweep_k1,
    fit_sqrt_branch,
    simulate_walk,
    steady_angles,
    sweep_diagram,
    variation_study,
)
from .turning import (
    ControllerState,
    StrategyTable,
    TurningOutcome,
    TurningTask,
    optimal_k1,
    required_radius,
    run_turning,
    strategy_comparison,
    supplementary_update,
)

__all__ = [
    "__version__",
    "ModelParams", "default_params", "nmm_deg_to_nm_rad",
    "nm_rad_to_nmm_deg", "with_k1_nmm", "with_uniform_k_nmm",
    "GaitSchedule", "leg_phase", "stance_count", "stance_events",
    "State", "straight_walk_state",
    "SimResult", "simulate_raw", "simulate_state",
    "CriticalPoint", "FloquetResult", "critical_k1", "critical_surface",
    "find_bracket", "monodromy", "sweep_exponents",
    "BifurcationDiagram", "WalkTrace", "curvature_radius",
    "default_sweep_k1", "fit_sqrt_branch", "simulate_walk",
    "steady_angles", "sweep_diagram", "variation_study",
    "ControllerState", "StrategyTable", "TurningOutcome", "TurningTask",
    "optimal_k1", "required_radius", "run_turning", "strategy_comparison",
    "supplementary_update",
]
