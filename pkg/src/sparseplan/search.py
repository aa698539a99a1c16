"""Incremental shortest-path search (the lifelong-planning core of D* Lite).

The search is rooted at the goal: ``g(n)`` estimates the cost-to-goal of node
``n`` and the priority keys use a heuristic measured from the start. Because
the start never moves during a single planning query, the ``k_m`` offset of
full D* Lite is not needed.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

from .graph import INF, Edge, EdgeStatus, PlanGraph

_H_SHRINK = 1.0 - 1e-9


@dataclass
class Path:
    nodes: list[int]
    edges: list[Edge]
    cost: float

    def __len__(self) -> int:
        return len(self.edges)


class IncrementalSearch:
    def __init__(self, graph: PlanGraph, start: int, goal: int,
                 heuristic: Callable[[int], float] | None = None):
        self.graph = graph
        self.start = start
        self.goal = goal
        self._h_fn = heuristic or (lambda n: 0.0)
        self._h: dict[int, float] = {}
        self.g: dict[int, float] = {}
        self.rhs: dict[int, float] = {goal: 0.0}
        self._open: dict[int, tuple[float, float]] = {}
        self._heap: list[tuple[float, float, int]] = []
        self.expansions = 0
        self._push(goal)

    def h(self, n: int) -> float:
        v = self._h.get(n)
        if v is None:
            # shrink so rounding cannot push a tight heuristic past an edge cost
            v = self._h[n] = self._h_fn(n) * _H_SHRINK
        return v

    def key(self, n: int) -> tuple[float, float]:
        m = min(self.g.get(n, INF), self.rhs.get(n, INF))
        return (m + self.h(n), m)

    def _push(self, n: int) -> None:
        k = self.key(n)
        self._open[n] = k
        heapq.heappush(self._heap, (k[0], k[1], n))

    def _top(self):
        heap, live = self._heap, self._open
        while heap:
            k1, k2, n = heap[0]
            if live.get(n) == (k1, k2):
                return heap[0]
            heapq.heappop(heap)
        return None

    def _recompute_rhs(self, u: int) -> None:
        g = self.g
        best = INF
        for v, c in self.graph.out_costs(u).items():
            gv = g.get(v)
            if gv is None:
                continue
            c += gv
            if c < best:
                best = c
        self.rhs[u] = best

    def _requeue(self, u: int) -> None:
        if self.g.get(u, INF) != self.rhs.get(u, INF):
            self._push(u)
        else:
            self._open.pop(u, None)

    def update_vertex(self, u: int) -> None:
        if u != self.goal:
            self._recompute_rhs(u)
        self._requeue(u)

    def _absorb_changes(self) -> None:
        dirty = self.graph.dirty
        if not dirty:
            return
        pending = sorted(set(dirty))
        dirty.clear()
        for u in pending:
            self.update_vertex(u)

    def compute(self) -> None:
        self._absorb_changes()
        g, rhs, s = self.g, self.rhs, self.start
        while True:
            top = self._top()
            if top is None:
                break
            k1, k2, u = top
            if not ((k1, k2) < self.key(s) or rhs.get(s, INF) != g.get(s, INF)):
                break
            heapq.heappop(self._heap)
            del self._open[u]
            self.expansions += 1
            knew = self.key(u)
            if (k1, k2) < knew:
                self._push(u)
                continue
            graph, goal = self.graph, self.goal
            if g.get(u, INF) > rhs.get(u, INF):
                gu = g[u] = rhs[u]
                for p in graph.predecessors(u):
                    if p == goal:
                        continue
                    c = graph.cost(p, u) + gu
                    if c < rhs.get(p, INF):
                        rhs[p] = c
                        self._requeue(p)
            else:
                g_old = g.get(u, INF)
                g[u] = INF
                for p in list(graph.predecessors(u)):
                    if p != goal and rhs.get(p, INF) == graph.cost(p, u) + g_old:
                        self._recompute_rhs(p)
                        self._requeue(p)
                self.update_vertex(u)

    def solve(self) -> Path | None:
        """Shortest path under current edge statuses, or None if unreachable."""
        self.compute()
        if self.g.get(self.start, INF) == INF:
            return None
        return self._extract()

    def _extract(self) -> Path:
        g, graph = self.g, self.graph
        u = self.start
        nodes, edges = [u], []
        seen = {u}
        while u != self.goal:
            best, best_v = INF, None
            for v, c in graph.out_costs(u).items():
                gv = g.get(v)
                if gv is None:
                    continue
                c += gv
                if c < best or (c == best and best_v is not None and v < best_v):
                    best, best_v = c, v
            if best_v is None or best_v in seen:
                raise RuntimeError("path extraction failed; search state is inconsistent")
            edges.append(graph.best_edge(u, best_v))
            u = best_v
            seen.add(u)
            nodes.append(u)
        return Path(nodes, edges, g[self.start])


def update_edge(graph: PlanGraph, edge: Edge, status: EdgeStatus) -> None:
    """Change an edge's status; the attached search repairs on its next solve."""
    graph.set_status(edge, status)


def select_edge_to_check(path: Path) -> Edge | None:
    """First unvalidated edge walking from the start; None when all are valid."""
    for e in path.edges:
        if e.status is EdgeStatus.UNKNOWN:
            return e
    return None


def reference_distances(graph: PlanGraph, goal: int) -> dict[int, float]:
    """From-scratch cost-to-goal for every node (backward Dijkstra)."""
    dist = {goal: 0.0}
    heap = [(0.0, goal)]
    done = set()
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for u in graph.predecessors(v):
            c = graph.cost(u, v)
            if c == INF:
                continue
            nd = c + d
            if nd < dist.get(u, INF):
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return dist


def reference_cost(graph: PlanGraph, start: int, goal: int) -> float:
    return reference_distances(graph, goal).get(start, math.inf)
