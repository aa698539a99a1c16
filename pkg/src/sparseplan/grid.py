"""Lattice plan graphs, the baseline the sparse planner is compared against.

Nodes sit at regular positions (times regular headings for the Dubins car)
and edges follow a fixed set of neighbor offsets. The lattice is conceptually
complete but materialized on demand: a node's out- or in-edges are created the
first time the search asks for them, so ``edges`` counts what the search
actually touched.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache, partial

from .core import Point2, Point3, Pose2, State, Trajectory
from .graph import PlanGraph
from .lazy import PlanResult, SOLVED, lazy_plan
from .search import IncrementalSearch
from .steering import SteeringSpec, _word_trajectory, dubins_words, free_heuristic
from .world import Scenario, heading_count

_SNAP_TOL = 1e-6


class SnapError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    spacing: float
    connectivity: int
    angular_delta: float | None = None
    prune_factor: float = 3.0
    bounds: tuple[tuple[float, float], ...] | None = None
    trim_dubins: bool = False

    def __post_init__(self):
        if not self.spacing > 0.0:
            raise ValueError("spacing must be positive")
        if self.connectivity < 0:
            raise ValueError("connectivity must be nonnegative")
        if not self.prune_factor > 1.0:
            raise ValueError("prune_factor must exceed 1")


def _gcd(v) -> int:
    out = 0
    for x in v:
        out = math.gcd(out, abs(x))
    return out


def neighbor_offsets(dim: int, connectivity: int, trim: bool = True) -> list[tuple[int, ...]]:
    """Integer neighbor offsets for a connectivity level.

    Level 0 gives the axis neighbors. Level ``n`` gives every offset within
    Chebyshev distance ``n``; with ``trim`` an offset that is an integer
    multiple of a shorter one is dropped.
    """
    if connectivity == 0:
        out = []
        for ax in range(dim):
            for sgn in (1, -1):
                v = [0] * dim
                v[ax] = sgn
                out.append(tuple(v))
        return out
    rng = range(-connectivity, connectivity + 1)
    out = []
    for v in itertools.product(rng, repeat=dim):
        if not any(v):
            continue
        if trim and _gcd(v) > 1:
            continue
        out.append(v)
    return out


@lru_cache(maxsize=32)
def _dubins_tables(spacing, connectivity, angular_delta, rho, prune_factor, trim):
    """Translation-invariant primitive tables ``(out_by_heading, in_by_heading)``.

    Each entry is ``(di, dj, other_heading, cost, word, lengths)``.
    """
    nh = heading_count(angular_delta)
    offsets = neighbor_offsets(2, connectivity, trim)
    out = [[] for _ in range(nh)]
    inn = [[] for _ in range(nh)]
    for h0 in range(nh):
        a = Pose2(0.0, 0.0, h0 * angular_delta)
        for di, dj in offsets:
            reach = spacing * math.hypot(di, dj)
            for h1 in range(nh):
                b = Pose2(di * spacing, dj * spacing, h1 * angular_delta)
                best = min(dubins_words(a, b, rho), key=lambda w: w[1] + w[2] + w[3])
                word, t, p, q = best
                cost = rho * math.fsum((t, p, q))
                if cost > prune_factor * reach:
                    continue
                out[h0].append((di, dj, h1, cost, word, (t, p, q)))
                inn[h1].append((di, dj, h0, cost, word, (t, p, q)))
    return out, inn


class LatticeGraph(PlanGraph):
    def __init__(self, spec: GridSpec, steering: SteeringSpec, bounds):
        super().__init__()
        self.spec = spec
        self.steering = steering
        self.dubins = steering.is_dubins
        g = spec.spacing
        self.origin = tuple(lo for lo, _ in bounds)
        self.extent = tuple(int(math.floor((hi - lo) / g + _SNAP_TOL)) for lo, hi in bounds)
        self._ids: dict[tuple[int, ...], int] = {}
        self._lkey: list[tuple[int, ...]] = []
        self._out_done: set[int] = set()
        self._in_done: set[int] = set()
        if self.dubins:
            if not spec.angular_delta:
                raise ValueError("angular_delta is required for a Dubins lattice")
            self.nh = heading_count(spec.angular_delta)
            self._out_tab, self._in_tab = _dubins_tables(
                g, spec.connectivity, spec.angular_delta, steering.turning_radius,
                spec.prune_factor, spec.trim_dubins,
            )
        else:
            dim = len(bounds)
            self.offsets = [
                (v, g * math.sqrt(sum(x * x for x in v)))
                for v in neighbor_offsets(dim, spec.connectivity)
            ]

    # -- lattice bookkeeping ---------------------------------------------

    def _state(self, key: tuple[int, ...]) -> State:
        g, o = self.spec.spacing, self.origin
        if self.dubins:
            return Pose2(o[0] + key[0] * g, o[1] + key[1] * g, key[2] * self.spec.angular_delta)
        if len(key) == 3:
            return Point3(*(o[i] + key[i] * g for i in range(3)))
        return Point2(o[0] + key[0] * g, o[1] + key[1] * g)

    def _inside(self, pos) -> bool:
        return all(0 <= p <= n for p, n in zip(pos, self.extent))

    def lattice_node(self, key: tuple[int, ...]) -> int:
        i = self._ids.get(key)
        if i is None:
            i = len(self.states)
            s = self._state(key)
            self.states.append(s)
            self.index[s] = i
            self._succ.append({})
            self._pred.append({})
            self._ids[key] = i
            self._lkey.append(key)
        return i

    def snap(self, s: State) -> int:
        g = self.spec.spacing
        key = []
        for v, lo in zip(s.position, self.origin):
            f = (v - lo) / g
            r = round(f)
            if abs(f - r) > _SNAP_TOL:
                raise SnapError(f"{s!r} is not on the lattice (spacing {g})")
            key.append(r)
        if not self._inside(key):
            raise SnapError(f"{s!r} lies outside the lattice")
        if self.dubins:
            f = s.theta / self.spec.angular_delta
            r = round(f)
            if abs(f - r) > _SNAP_TOL:
                raise SnapError(f"heading of {s!r} is not a lattice heading")
            key.append(r % self.nh)
        return self.lattice_node(tuple(key))

    def _link(self, u: int, v: int, cost: float, factory) -> None:
        if (u, v) in self.edges:
            return
        self.add_edge(u, v, cost=cost, factory=factory)
        # lattice growth never needs a search repair; see module docstring
        self.dirty.pop()

    def _factory(self, u: int, v: int, prim):
        a, b = self.states[u], self.states[v]
        if prim is None:
            return partial(Trajectory.line, a, b)
        word, lengths = prim
        return partial(_word_trajectory, a, b, self.steering.turning_radius, word, lengths)

    def _expand_out(self, u: int) -> None:
        self._out_done.add(u)
        key = self._lkey[u]
        if self.dubins:
            i, j, h = key
            for di, dj, h1, cost, word, lengths in self._out_tab[h]:
                pos = (i + di, j + dj)
                if self._inside(pos):
                    v = self.lattice_node(pos + (h1,))
                    self._link(u, v, cost, self._factory(u, v, (word, lengths)))
        else:
            for off, cost in self.offsets:
                pos = tuple(a + b for a, b in zip(key, off))
                if self._inside(pos):
                    v = self.lattice_node(pos)
                    self._link(u, v, cost, self._factory(u, v, None))

    def _expand_in(self, v: int) -> None:
        self._in_done.add(v)
        key = self._lkey[v]
        if self.dubins:
            i, j, h = key
            for di, dj, h0, cost, word, lengths in self._in_tab[h]:
                pos = (i - di, j - dj)
                if self._inside(pos):
                    u = self.lattice_node(pos + (h0,))
                    self._link(u, v, cost, self._factory(u, v, (word, lengths)))
        else:
            for off, cost in self.offsets:
                pos = tuple(a - b for a, b in zip(key, off))
                if self._inside(pos):
                    u = self.lattice_node(pos)
                    self._link(u, v, cost, self._factory(u, v, None))

    # -- graph interface ---------------------------------------------------

    def out_costs(self, u: int) -> dict[int, float]:
        if u not in self._out_done:
            self._expand_out(u)
        return self._succ[u]

    def successors(self, u: int):
        return self.out_costs(u)

    def predecessors(self, v: int):
        if v not in self._in_done:
            self._expand_in(v)
        return self._pred[v]


def lattice_bounds(scenario: Scenario, steering: SteeringSpec) -> tuple[tuple[float, float], ...]:
    bounds = scenario.world.bounds
    if steering.is_dubins:
        pad = 2.0 * steering.turning_radius
        return tuple((lo - pad, hi + pad) for lo, hi in bounds)
    return bounds


def build_grid(spec: GridSpec, steering: SteeringSpec, start: State, goal: State,
               bounds=None) -> tuple[LatticeGraph, int, int]:
    """Lattice over ``bounds`` with ``start`` and ``goal`` snapped onto it."""
    bounds = bounds or spec.bounds
    if bounds is None:
        raise ValueError("lattice bounds are required")
    graph = LatticeGraph(spec, steering, bounds)
    return graph, graph.snap(start), graph.snap(goal)


def plan_grid(scenario: Scenario, spec: GridSpec, max_iterations: int = 1_000_000) -> PlanResult:
    steering = scenario.spec.system
    graph, s, g = build_grid(
        spec, steering, scenario.start, scenario.goal,
        spec.bounds or lattice_bounds(scenario, steering),
    )
    world = scenario.world.fresh()
    if s == g:
        res = PlanResult(SOLVED, Trajectory.zero(scenario.start), 0.0, iterations=1,
                         lower_bounds=[0.0], checks_per_iteration=[0], nodes=1)
        return res
    start = scenario.start
    states = graph.states
    search = IncrementalSearch(graph, s, g, lambda n: free_heuristic(steering, start, states[n]))
    return lazy_plan(graph, search, world, max_iterations)
