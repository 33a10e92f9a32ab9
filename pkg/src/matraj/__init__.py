"""Fairness-optimal movable-antenna deployment patterns and trajectories.

Pipeline: a Lagrangian-dual loop (ellipsoid cuts over the fairness weights,
SCA for the inner weighted-rate maximization) discovers the deployment
patterns worth time-sharing; a small LP allocates stay durations; and a
speed-constrained stay-then-move trajectory schedules the actual motion,
falling back to the best static deployment when moving does not pay off.
"""

from .baseline import grid_oracle, static_optimal
from .channel import channel_matrix, channel_vector, element_positions
from .dual import PatternSet, dual_function, run_algorithm1
from .mmse import mmse_sinr, rate_vector, sinr_vector, weighted_rate
from .scenario import (ArrayGeometry, Scenario, ScenarioError, SolverConfig,
                       UserSpec, apply_aoa_error, load_scenario,
                       save_scenario, scenario_from_dict)
from .sca import sca_iterate, solve_subproblem
from .ssmt import (SsmtPlan, SwitchSegment, order_patterns, plan_ssmt,
                   switching_rate, switching_time, transition_pattern,
                   verify_no_coupling)
from .timeshare import TimeAllocation, allocate_time

__all__ = [
    "ArrayGeometry", "PatternSet", "Scenario", "ScenarioError", "SolverConfig",
    "SsmtPlan", "SwitchSegment", "TimeAllocation", "UserSpec",
    "allocate_time", "apply_aoa_error", "channel_matrix", "channel_vector",
    "dual_function", "element_positions", "grid_oracle", "load_scenario",
    "mmse_sinr", "order_patterns", "plan_ssmt", "rate_vector",
    "run_algorithm1", "save_scenario", "scenario_from_dict", "sca_iterate",
    "sinr_vector", "solve_subproblem", "static_optimal", "switching_rate",
    "switching_time", "transition_pattern", "verify_no_coupling",
    "weighted_rate",
]

__version__ = "0.1.0"
