"""Plan graphs with parallel, lazily validated edges."""
from __future__ import annotations

import enum
import math
from typing import Callable, Iterable, Iterator

from .core import State, Trajectory

INF = math.inf


class EdgeStatus(enum.Enum):
    UNKNOWN = "unknown"
    VALID = "valid"
    BLOCKED = "blocked"


class Edge:
    """One free-space trajectory between two graph nodes.

    The trajectory may be produced on demand by ``factory`` so that large
    lattices do not build geometry for edges that are never checked.
    """

    __slots__ = ("u", "v", "cost", "status", "_traj", "_factory", "order")

    def __init__(self, u: int, v: int, cost: float, trajectory: Trajectory | None = None,
                 factory: Callable[[], Trajectory] | None = None, order: int = 0):
        self.u = u
        self.v = v
        self.cost = cost
        self.status = EdgeStatus.UNKNOWN
        self._traj = trajectory
        self._factory = factory
        self.order = order

    @property
    def trajectory(self) -> Trajectory:
        if self._traj is None:
            self._traj = self._factory()
            self._factory = None
        return self._traj

    @property
    def effective_cost(self) -> float:
        return INF if self.status is EdgeStatus.BLOCKED else self.cost

    def __repr__(self) -> str:
        return f"Edge({self.u}->{self.v}, {self.cost:.4f}, {self.status.value})"


class PlanGraph:
    """Directed multigraph over robot states.

    Nodes are integer ids in insertion order. Every structural change or
    status change records the edge's source in :attr:`dirty` so an attached
    incremental search can repair itself before the next solve.
    """

    def __init__(self):
        self.states: list[State] = []
        self.index: dict[State, int] = {}
        self.edges: dict[tuple[int, int], list[Edge]] = {}
        # successor -> effective (min unblocked) cost of the node pair
        self._succ: list[dict[int, float]] = []
        self._pred: list[dict[int, None]] = []
        self.dirty: list[int] = []
        self.edge_count = 0

    def __len__(self) -> int:
        return len(self.states)

    def add_node(self, s: State) -> int:
        i = self.index.get(s)
        if i is not None:
            return i
        i = len(self.states)
        self.states.append(s)
        self.index[s] = i
        self._succ.append({})
        self._pred.append({})
        return i

    def node(self, s: State) -> int:
        return self.index[s]

    def add_edge(self, u: int, v: int, trajectory: Trajectory | None = None,
                 cost: float | None = None, factory=None) -> Edge:
        if cost is None:
            cost = trajectory.cost
        e = Edge(u, v, cost, trajectory, factory, self.edge_count)
        self.edge_count += 1
        self.edges.setdefault((u, v), []).append(e)
        succ = self._succ[u]
        if cost < succ.get(v, INF):
            succ[v] = cost
        elif v not in succ:
            succ[v] = INF
        self._pred[v][u] = None
        self.dirty.append(u)
        return e

    def set_status(self, e: Edge, status: EdgeStatus) -> None:
        if e.status is status:
            return
        e.status = status
        u, v = e.u, e.v
        best = INF
        for other in self.edges[(u, v)]:
            if other.status is not EdgeStatus.BLOCKED and other.cost < best:
                best = other.cost
        if best != self._succ[u][v]:
            self._succ[u][v] = best
            self.dirty.append(u)

    def edges_between(self, u: int, v: int) -> list[Edge]:
        return self.edges.get((u, v), [])

    def cost(self, u: int, v: int) -> float:
        return self._succ[u].get(v, INF)

    def out_costs(self, u: int) -> dict[int, float]:
        """Successor -> effective pair cost; do not mutate."""
        return self._succ[u]

    def best_edge(self, u: int, v: int) -> Edge | None:
        best = None
        for e in self.edges.get((u, v), ()):
            if e.status is EdgeStatus.BLOCKED:
                continue
            if best is None or e.cost < best.cost:
                best = e
        return best

    def successors(self, u: int) -> Iterable[int]:
        return self._succ[u]

    def predecessors(self, v: int) -> Iterable[int]:
        return self._pred[v]

    def all_edges(self) -> Iterator[Edge]:
        for es in self.edges.values():
            yield from es

    def status_counts(self) -> dict[EdgeStatus, int]:
        out = {s: 0 for s in EdgeStatus}
        for e in self.all_edges():
            out[e.status] += 1
        return out
