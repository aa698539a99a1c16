"""The solve / check / block loop shared by the sparse and grid planners."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

from .core import Trajectory
from .graph import Edge, EdgeStatus, PlanGraph
from .search import IncrementalSearch, Path, select_edge_to_check, update_edge
from .world import World, check_trajectory, sensed_area

SOLVED = "solved"
INFEASIBLE = "infeasible"
BUDGET = "budget"


class IterationBudgetExceeded(RuntimeError):
    def __init__(self, result: "PlanResult"):
        super().__init__(f"no answer after {result.iterations} iterations")
        self.result = result


@dataclass
class PlanResult:
    status: str
    trajectory: Trajectory | None = None
    cost: float = math.inf
    path: Path | None = None
    iterations: int = 0
    edge_checks: int = 0
    nodes: int = 0
    edges: int = 0
    area_sensed: int = 0
    plan_time_ms: float = 0.0
    lower_bounds: list[float] = field(default_factory=list)
    checks_per_iteration: list[int] = field(default_factory=list)

    @property
    def solved(self) -> bool:
        return self.status == SOLVED

    def trace(self) -> dict:
        return {
            "lower_bounds": [c if math.isfinite(c) else None for c in self.lower_bounds],
            "checks_per_iteration": self.checks_per_iteration,
        }


def lazy_plan(
    graph: PlanGraph,
    search: IncrementalSearch,
    world: World,
    max_iterations: int,
    on_blocked: Callable[[Edge, int], None] | None = None,
    result: PlanResult | None = None,
) -> PlanResult:
    """Solve, validate the best path edge by edge from the start, repeat.

    ``on_blocked(edge, obstacle_id)`` lets the caller grow the graph after a
    hit; the search is re-run right after each blocked edge.
    """
    res = result or PlanResult(INFEASIBLE)
    t0 = time.perf_counter()
    try:
        while True:
            if res.iterations >= max_iterations:
                res.status = BUDGET
                raise IterationBudgetExceeded(res)
            res.iterations += 1
            path = search.solve()
            res.lower_bounds.append(path.cost if path else math.inf)
            if path is None:
                res.status = INFEASIBLE
                res.checks_per_iteration.append(0)
                return res
            checks = 0
            while (e := select_edge_to_check(path)) is not None:
                checks += 1
                hit = check_trajectory(world, e.trajectory)
                if hit is None:
                    update_edge(graph, e, EdgeStatus.VALID)
                    continue
                update_edge(graph, e, EdgeStatus.BLOCKED)
                if on_blocked is not None:
                    on_blocked(e, hit)
                break
            res.edge_checks += checks
            res.checks_per_iteration.append(checks)
            if e is None:
                res.status = SOLVED
                res.path = path
                res.cost = path.cost
                res.trajectory = _join(path)
                return res
    finally:
        res.plan_time_ms += (time.perf_counter() - t0) * 1e3
        res.nodes = len(graph)
        res.edges = graph.edge_count
        res.area_sensed = sensed_area(world)


def _join(path: Path) -> Trajectory:
    trajs = [e.trajectory for e in path.edges]
    out = trajs[0]
    for t in trajs[1:]:
        out = out + t
    return out
