"""Hierarchical geographic gossip averaging on geometric random graphs.

A deterministic discrete-event simulator for a hierarchical gossip protocol
with non-convex affine pairwise updates, two classical baselines under the
same transmission accounting, and a numerical kernel with brute-force
oracles for the protocol's contraction and perturbation bounds.
"""

__version__ = "0.1.0"

from .affine import (
    AffineSystem,
    PerturbedSystem,
    affine_pair_update,
    contraction_bound,
    contraction_factor,
    expected_quadratic_form,
    mean_square_decay_bound,
    simulate_affine_gossip,
    simulate_perturbed_gossip,
)
from .baselines import boyd_step, geo_gossip_step
from .engine import (
    MetricsSeries,
    SimState,
    activate_square,
    deactivate_square,
    far_exchange,
    init_sim,
    initial_values,
    near_exchange,
    replay_ledger,
    run,
    run_logged,
    step,
)
from .experiment import (
    ConfigError,
    ExperimentConfig,
    kernel_verify,
    load_config,
    parse_config,
    run_experiment,
    sweep,
)
from .geometry import (
    GeometricGraph,
    PointSet,
    build_graph,
    connectivity_radius,
    is_connected,
    sample_points,
)
from .hierarchy import (
    EmptyCellError,
    Hierarchy,
    LevelAssignment,
    ParamSchedule,
    ScheduleOverflowError,
    SquareCell,
    build_hierarchy,
    build_schedule,
    count_concentration,
    dump_hierarchy,
    subdivision_factor,
)
from .metrics import FitResult, MetricsRecord, fit_scaling, read_csv
from .routing import FloodResult, RouteResult, flood, greedy_route, \
    route_to_position

__all__ = [
    "AffineSystem",
    "PerturbedSystem",
    "affine_pair_update",
    "contraction_bound",
    "contraction_factor",
    "expected_quadratic_form",
    "mean_square_decay_bound",
    "simulate_affine_gossip",
    "simulate_perturbed_gossip",
    "boyd_step",
    "geo_gossip_step",
    "MetricsSeries",
    "SimState",
    "init_sim",
    "replay_ledger",
    "run",
    "activate_square",
    "deactivate_square",
    "far_exchange",
    "initial_values",
    "near_exchange",
    "run_logged",
    "step",
    "ConfigError",
    "ExperimentConfig",
    "kernel_verify",
    "load_config",
    "parse_config",
    "run_experiment",
    "sweep",
    "GeometricGraph",
    "PointSet",
    "build_graph",
    "connectivity_radius",
    "is_connected",
    "sample_points",
    "EmptyCellError",
    "Hierarchy",
    "LevelAssignment",
    "ParamSchedule",
    "ScheduleOverflowError",
    "SquareCell",
    "build_hierarchy",
    "build_schedule",
    "count_concentration",
    "dump_hierarchy",
    "subdivision_factor",
    "FitResult",
    "MetricsRecord",
    "fit_scaling",
    "read_csv",
    "FloodResult",
    "RouteResult",
    "flood",
    "greedy_route",
    "route_to_position",
    "__version__",
]
