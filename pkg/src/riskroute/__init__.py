"""Adaptive routing under a budget on stochastic graphs.

Exact solver for known grid-supported arc-cost distributions, a
distributionally robust solver over piecewise-affine statistic bounds,
policy evaluation (exact, worst-case and simulated), and an experiment
harness comparing policy construction methods on cost samples.
"""

from ._sweep import PolicyTable, SolveResult
from .ambiguity import (
    AffinePiece,
    AmbiguitySet,
    PiecewiseAffineStatistic,
    StatisticBound,
    bootstrap_interval,
    hoeffding_interval,
    preset_robust_m,
    preset_robust_md,
)
from .errors import (
    ConfigurationError,
    DomainError,
    EvaluationError,
    InfeasibleAmbiguityError,
    NonconvergenceError,
    NumericalError,
    ParseError,
    RiskrouteError,
    StateError,
    UnreachableNodeError,
)
from .evaluation import (
    METHODS,
    ExperimentConfig,
    ExperimentReport,
    ReportRow,
    SimulationResult,
    run_experiment,
    simulate_policy,
)
from .io_formats import (
    bin_samples,
    load_graph,
    load_policy,
    load_samples,
    load_statistics,
    save_graph,
    save_policy,
    save_samples,
    write_report,
)
from .model import (
    Arc,
    BudgetGrid,
    Graph,
    GridDistribution,
    RiskFunction,
    RiskKind,
    shortest_path_tree,
)
from .nominal import evaluate_policy_exact, solve_nominal
from .robust import arc_for, robust_policy_guarantee, solve_robust

__version__ = "0.1.0"

__all__ = [
    "AffinePiece",
    "AmbiguitySet",
    "Arc",
    "BudgetGrid",
    "ConfigurationError",
    "DomainError",
    "EvaluationError",
    "ExperimentConfig",
    "ExperimentReport",
    "Graph",
    "GridDistribution",
    "InfeasibleAmbiguityError",
    "METHODS",
    "NonconvergenceError",
    "NumericalError",
    "ParseError",
    "PiecewiseAffineStatistic",
    "PolicyTable",
    "ReportRow",
    "RiskFunction",
    "RiskKind",
    "RiskrouteError",
    "SimulationResult",
    "SolveResult",
    "StateError",
    "StatisticBound",
    "UnreachableNodeError",
    "arc_for",
    "bin_samples",
    "bootstrap_interval",
    "evaluate_policy_exact",
    "hoeffding_interval",
    "load_graph",
    "load_policy",
    "load_samples",
    "load_statistics",
    "preset_robust_m",
    "preset_robust_md",
    "robust_policy_guarantee",
    "run_experiment",
    "save_graph",
    "save_policy",
    "save_samples",
    "shortest_path_tree",
    "simulate_policy",
    "solve_nominal",
    "solve_robust",
    "write_report",
]
