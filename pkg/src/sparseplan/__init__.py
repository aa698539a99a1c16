"""Sparse plan graphs built jointly with the obstacle map, plus a lattice baseline."""
from .core import Point2, Point3, Pose2, State, Trajectory, TrajectorySet, concatenate, cost, sample
from .grid import GridSpec, SnapError, build_grid, plan_grid
from .lazy import BUDGET, INFEASIBLE, SOLVED, IterationBudgetExceeded, PlanResult
from .oracle import SizeGuard, build_complete_graph, complete_graph_cost, exact_solve
from .search import IncrementalSearch, select_edge_to_check, update_edge
from .sparse import PlannerParams, SparseRun, lower_bound_series, plan
from .steering import SteeringSpec, free_heuristic, steer_free
from .world import (
    Cube3D, Scenario, ScenarioSpec, Segment2D, World, boundary_nodes, check_trajectory,
    generate_scenario, sensed_area,
)

__version__ = "0.1.0"
