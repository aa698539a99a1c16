"""Ground truth on the boundary-discretized complete graph.

The complete graph has the start, the goal and the boundary nodes of *every*
obstacle as nodes, and every free-space steering member between every ordered
pair as edges. :func:`build_complete_graph` materializes and fully checks it;
:func:`complete_graph_cost` computes the same optimum without materializing,
checking an edge only when it would improve a label.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

from .core import State
from .graph import INF, EdgeStatus, PlanGraph
from .steering import SteeringSpec, _word_trajectory, dubins_word_costs, dubins_words, steer_free
from .world import Scenario, World, boundary_nodes, first_hit

DEFAULT_MAX_NODES = 2000


class SizeGuard(ValueError):
    pass


def complete_node_set(scenario: Scenario, delta: float, angular_delta: float | None,
                      clearance: float | None = None) -> list[State]:
    spec = scenario.spec.system
    out = [scenario.start]
    seen = {scenario.start}
    if scenario.goal not in seen:
        out.append(scenario.goal)
        seen.add(scenario.goal)
    for ob in scenario.world.obstacles:
        for s in boundary_nodes(ob, delta, angular_delta, spec, clearance):
            if s not in seen:
                seen.add(s)
                out.append(s)
    return out


def build_complete_graph(scenario: Scenario, delta: float, angular_delta: float | None = None,
                         clearance: float | None = None,
                         max_nodes: int = DEFAULT_MAX_NODES) -> PlanGraph:
    """Materialize every edge of the discretized complete graph, all checked."""
    states = complete_node_set(scenario, delta, angular_delta, clearance)
    if len(states) > max_nodes:
        raise SizeGuard(f"{len(states)} nodes exceeds the limit of {max_nodes}")
    spec = scenario.spec.system
    world = scenario.world
    graph = PlanGraph()
    for s in states:
        graph.add_node(s)
    for u, su in enumerate(states):
        for v, sv in enumerate(states):
            if u == v:
                continue
            for traj in steer_free(spec, su, sv):
                e = graph.add_edge(u, v, traj)
                blocked = first_hit(world, traj) is not None
                e.status = EdgeStatus.BLOCKED if blocked else EdgeStatus.VALID
    graph.dirty.clear()
    return graph


def exact_solve(graph: PlanGraph, start: int = 0, goal: int = 1) -> float | None:
    """Label-setting shortest path over Valid edges; None when unreachable."""
    for e in graph.all_edges():
        if e.status is EdgeStatus.UNKNOWN:
            raise ValueError("exact_solve needs a fully checked graph")
    dist = {start: 0.0}
    heap = [(0.0, start)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        if u == goal:
            return d
        done.add(u)
        for v in graph.successors(u):
            c = graph.cost(u, v)
            if c == INF:
                continue
            nd = d + c
            if nd < dist.get(v, INF):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return None


def _free_costs(spec: SteeringSpec, coords: np.ndarray, src: State, reverse: bool = False):
    """Free-space word costs between ``src`` and every node, shape (n, words)."""
    if spec.is_dubins:
        xs, ys, ts = coords.T
        if reverse:
            return dubins_word_costs(xs, ys, ts, src.x, src.y, src.theta, spec.turning_radius)
        return dubins_word_costs(src.x, src.y, src.theta, xs, ys, ts, spec.turning_radius)
    return np.linalg.norm(coords - np.asarray(src.position), axis=1)[:, None]


def complete_graph_cost(scenario: Scenario, delta: float, angular_delta: float | None = None,
                        clearance: float | None = None) -> float | None:
    """Optimal cost on the complete graph, with on-demand edge checking.

    Exact: an edge is only skipped when even its free-space cost could not
    improve the target's label, in which case its validity is irrelevant.
    """
    spec = scenario.spec.system
    world: World = scenario.world
    states = complete_node_set(scenario, delta, angular_delta, clearance)
    if scenario.start == scenario.goal:
        return 0.0
    goal = 1
    n = len(states)
    coords = np.array([s.to_list() for s in states])
    # consistent A* heuristic: free-space cost to the goal
    h = _free_costs(spec, coords, scenario.goal, reverse=True).min(axis=1)
    dist = np.full(n, np.inf)
    dist[0] = 0.0
    done = np.zeros(n, dtype=bool)
    heap = [(h[0], 0)]
    rho = spec.turning_radius
    while heap:
        _, u = heapq.heappop(heap)
        if done[u]:
            continue
        d = dist[u]
        if u == goal:
            return float(d)
        done[u] = True
        lb = d + _free_costs(spec, coords, states[u]).min(axis=1)
        # a target is worth relaxing only if it could improve its own label
        # and, through the consistent heuristic, the goal's
        useful = ~done & (lb - 1e-9 < dist) & (lb + h - 1e-9 < dist[goal])
        cand = np.flatnonzero(useful)
        su = states[u]
        for v in cand[np.argsort(lb[cand] + h[cand], kind="stable")]:
            if v == u or not lb[v] + h[v] - 1e-9 < dist[goal]:
                continue
            sv = states[v]
            if spec.is_dubins:
                options = sorted(
                    ((rho * (t + p + q), w, (t, p, q)) for w, t, p, q in dubins_words(su, sv, rho)),
                    key=lambda o: o[0],
                )
            else:
                options = [(None, None, None)]
            for c, w, lengths in options:
                traj = _word_trajectory(su, sv, rho, w, lengths) if w else next(iter(steer_free(spec, su, sv)))
                nd = d + traj.cost
                if not nd < dist[v]:
                    break
                if first_hit(world, traj) is None:
                    dist[v] = nd
                    heapq.heappush(heap, (nd + h[v], int(v)))
                    break
    return None

