"""Sparse plan-graph construction interleaved with lazy obstacle mapping.

The query ``start -> goal`` is split into sub-problems ``P(a, b)``. Each one
owns the free-space edges from ``a`` to ``b`` and a sub-map of the obstacles it
knows about. When a checked edge hits an obstacle, that obstacle's boundary
nodes join the graph and the edge's sub-problem spawns detour children through
them. Obstacles known to a child are pushed up to every ancestor, so a child's
sub-map is always contained in its parents'.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .core import Trajectory
from .graph import Edge, PlanGraph
from .lazy import SOLVED, IterationBudgetExceeded, PlanResult, lazy_plan  # noqa: F401
from .search import IncrementalSearch
from .steering import SteeringSpec, free_heuristic, free_members
from .world import Scenario, World, boundary_nodes

ProblemKey = tuple[int, int]


@dataclass
class SubProblem:
    a: int
    b: int
    map: set[int] = field(default_factory=set)
    parents: dict[ProblemKey, None] = field(default_factory=dict)
    children: dict[ProblemKey, None] = field(default_factory=dict)

    @property
    def key(self) -> ProblemKey:
        return (self.a, self.b)


@dataclass(frozen=True)
class PlannerParams:
    delta: float = 0.25
    angular_delta: float | None = None
    clearance: float | None = None
    max_iterations: int = 200_000
    audit: bool = False

    def __post_init__(self):
        if not self.delta > 0.0:
            raise ValueError("delta must be positive")
        if self.angular_delta is not None and not self.angular_delta > 0.0:
            raise ValueError("angular_delta must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


class SparseRun:
    """State of one planning query: graph, sub-problem registry, search."""

    def __init__(self, scenario: Scenario, params: PlannerParams,
                 steering: SteeringSpec | None = None):
        self.scenario = scenario
        self.params = params
        self.steering = steering or scenario.spec.system
        self.world: World = scenario.world.fresh()
        self.graph = PlanGraph()
        self.registry: dict[ProblemKey, SubProblem] = {}
        self.obstacle_nodes: dict[int, list[int]] = {}
        self.audit_log: list[bool] = []
        self.start = self.graph.add_node(scenario.start)
        self.goal = self.graph.add_node(scenario.goal)
        self.result = PlanResult("infeasible")

    # -- graph growth --------------------------------------------------

    def add_problem(self, a: int, b: int) -> ProblemKey:
        key = (a, b)
        if key in self.registry:
            return key
        self.registry[key] = SubProblem(a, b)
        sa, sb = self.graph.states[a], self.graph.states[b]
        for c, build in free_members(self.steering, sa, sb):
            self.graph.add_edge(a, b, cost=c, factory=build)
        return key

    def add_obstacle_nodes(self, oid: int) -> list[int]:
        nodes = self.obstacle_nodes.get(oid)
        if nodes is None:
            states = boundary_nodes(
                self.world.obstacle(oid),
                self.params.delta,
                self.params.angular_delta,
                self.steering,
                self.params.clearance,
            )
            nodes = self.obstacle_nodes[oid] = [self.graph.add_node(s) for s in states]
        return nodes

    def add_obstacle(self, key: ProblemKey, oid: int) -> None:
        """Insert ``oid`` into ``P(key)`` and restore sub-map containment."""
        reg = self.registry
        work = [(key, oid)]
        while work:
            k, o = work.pop()
            prob = reg[k]
            if o in prob.map:
                continue
            prob.map.add(o)
            a, b = k
            pmap = prob.map
            for x in self.obstacle_nodes[o]:
                for ck in ((a, x), (x, b)):
                    if ck[0] == ck[1] or ck == k:
                        continue
                    child = reg.get(ck)
                    if child is None:
                        self.add_problem(*ck)
                        child = reg[ck]
                    child.parents[k] = None
                    prob.children[ck] = None
                    if child.map:
                        work.extend((k, ob) for ob in child.map if ob not in pmap)
            work.extend((pk, o) for pk in prob.parents)
        if self.params.audit:
            self.audit_log.append(self.registry_consistent())

    def registry_consistent(self) -> bool:
        """Link symmetry, no self-parenting, and child sub-maps within parents'."""
        reg = self.registry
        for k, prob in reg.items():
            if k in prob.parents or k in prob.children:
                return False
            for ck in prob.children:
                child = reg[ck]
                if k not in child.parents or not child.map <= prob.map:
                    return False
            for pk in prob.parents:
                if k not in reg[pk].children:
                    return False
        return True

    # -- main loop -----------------------------------------------------

    def _on_blocked(self, edge: Edge, oid: int) -> None:
        self.add_obstacle_nodes(oid)
        self.add_obstacle((edge.u, edge.v), oid)

    def run(self) -> PlanResult:
        res = self.result
        if self.start == self.goal:
            res.status = SOLVED
            res.cost = 0.0
            res.trajectory = Trajectory.zero(self.scenario.start)
            res.iterations = 1
            res.lower_bounds.append(0.0)
            res.checks_per_iteration.append(0)
            res.nodes = 1
            return res
        t0 = time.perf_counter()
        self.add_problem(self.start, self.goal)
        start_state = self.scenario.start
        states = self.graph.states
        steering = self.steering
        self.search = IncrementalSearch(
            self.graph, self.start, self.goal,
            lambda n: free_heuristic(steering, start_state, states[n]),
        )
        res.plan_time_ms = (time.perf_counter() - t0) * 1e3
        return lazy_plan(
            self.graph, self.search, self.world, self.params.max_iterations,
            self._on_blocked, res,
        )

    def lower_bound_series(self) -> list[float]:
        return list(self.result.lower_bounds)


def plan(scenario: Scenario, params: PlannerParams | None = None) -> PlanResult:
    """Optimal trajectory on the boundary-discretized problem.

    Returns a result with status ``solved`` or ``infeasible``; raises
    :class:`IterationBudgetExceeded` if ``params.max_iterations`` runs out.
    """
    params = params or default_params(scenario)
    return SparseRun(scenario, params).run()


def default_params(scenario: Scenario, **overrides) -> PlannerParams:
    spec = scenario.spec
    kw = dict(delta=spec.boundary_delta, angular_delta=spec.angular_delta)
    kw.update(overrides)
    return PlannerParams(**kw)


def lower_bound_series(result: PlanResult) -> list[float]:
    return list(result.lower_bounds)

