"""Binary online gradient descent over {0,1}^n.

The learner keeps a relaxed iterate in the unit box, updates it with a
closed-form proximal gradient step, and implements an unbiased Bernoulli
rounding of it each round.  The package bundles the learner (`core`),
loss oracles (`oracles`, `tcl`), a regret toolkit with closed-form bounds
and brute-force baselines (`regret`), a demand-response fleet simulator
(`tcl`), a synthetic drifting-target study (`synthetic`), and a CSV
experiment harness with a CLI (`experiments`, `cli`).
"""

from .core import (
    LossOracle,
    RestartSchedule,
    Round,
    StepConfig,
    bogd_step,
    prox_update,
    randomize,
    run,
    run_with_restarts,
)
from .oracles import LinearLoss, QuadraticLoss
from .regret import (
    BoundInputs,
    ConvergenceError,
    RegretLedger,
    VariationTracker,
    binary_round_optimum,
    dynamic_regret_bound,
    lipschitz_estimate,
    relaxed_round_optimum,
    restart_regret_bound,
    rounding_gap_bound,
    short_horizon_regret_bound,
    update_variation,
)
from .synthetic import SyntheticConfig, study
from .tcl import (
    DemandTrackingLoss,
    Fleet,
    FleetRanges,
    FleetState,
    LoadParams,
    Metrics,
    ScenarioConfig,
    Seeds,
    SimulationRecord,
    ThermalModel,
    availability_update,
    count_lockout_violations,
    generate_ambient,
    generate_setpoint,
    metrics,
    sample_fleet,
    simulate,
    thermal_step,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "LossOracle",
    "StepConfig",
    "RestartSchedule",
    "Round",
    "prox_update",
    "randomize",
    "bogd_step",
    "run",
    "run_with_restarts",
    "LinearLoss",
    "QuadraticLoss",
    "BoundInputs",
    "ConvergenceError",
    "RegretLedger",
    "VariationTracker",
    "binary_round_optimum",
    "relaxed_round_optimum",
    "dynamic_regret_bound",
    "short_horizon_regret_bound",
    "restart_regret_bound",
    "rounding_gap_bound",
    "lipschitz_estimate",
    "update_variation",
    "SyntheticConfig",
    "study",
    "LoadParams",
    "FleetRanges",
    "Fleet",
    "ThermalModel",
    "FleetState",
    "DemandTrackingLoss",
    "Seeds",
    "ScenarioConfig",
    "SimulationRecord",
    "Metrics",
    "sample_fleet",
    "thermal_step",
    "availability_update",
    "generate_setpoint",
    "generate_ambient",
    "simulate",
    "metrics",
    "count_lockout_violations",
]
