"""Distributed multi-objective optimisation with priority consensus.

Agents agree on how much each objective matters (a Laplacian consensus on
priority vectors) while running prioritised gradient steps on their own
convex objective; the network reaches a Pareto point of the weighted sum.
"""
__version__ = "0.1.0"

from .engine import RunConfig, RunResult, RunState, SweepPoint, init_run, pareto_sweep, run, step
from .errors import *  # noqa: F401,F403
from .graph import Graph, GraphMatrices, build_graph, matrices
from .objectives import (
    AffineQuadratic1D,
    Composite,
    ExponentialSum,
    Linear,
    QuadraticForm,
    SumOfSquares,
    WeightedProblem,
    centralized_minimize,
    fd_check,
    oracle_minimizer,
    quadratic_minimizer,
)
from .priorities import average_priorities, consensus_operator, eta_a, priority_step
from .scenario import Scenario, load_scenario, parse_scenario

__all__ = [
    "AffineQuadratic1D", "Composite", "ExponentialSum", "Graph", "GraphMatrices", "Linear",
    "QuadraticForm", "RunConfig", "RunResult", "RunState", "Scenario", "SumOfSquares", "SweepPoint",
    "WeightedProblem", "average_priorities", "build_graph", "centralized_minimize",
    "consensus_operator", "eta_a", "fd_check", "init_run", "load_scenario", "matrices",
    "oracle_minimizer", "pareto_sweep", "parse_scenario", "priority_step", "quadratic_minimizer",
    "run", "step",
]
