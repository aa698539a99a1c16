"""Obstacle fields, scenario generation and the simulated sensor.

Planners never see :attr:`World.obstacles` directly. They learn about the map
only through :func:`check_trajectory`, which reports the first obstacle hit
along a trajectory and marks the voxels the "sensor" moved through.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .core import Arc, Line, Point2, Point3, Pose2, State, Trajectory
from .steering import DUBINS, HOLONOMIC_3D, SteeringSpec

DEFAULT_VOXEL = 0.2
MAX_REDRAWS = 1000


class GenerationFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class Segment2D:
    id: int
    p: tuple[float, float]
    q: tuple[float, float]

    def __post_init__(self):
        if tuple(self.p) == tuple(self.q):
            raise ValueError("segment endpoints must differ")

    @property
    def length(self) -> float:
        return math.dist(self.p, self.q)

    def distance_to(self, pt: Sequence[float]) -> float:
        px, py = self.p
        dx, dy = self.q[0] - px, self.q[1] - py
        u = ((pt[0] - px) * dx + (pt[1] - py) * dy) / (dx * dx + dy * dy)
        u = min(1.0, max(0.0, u))
        return math.hypot(pt[0] - (px + u * dx), pt[1] - (py + u * dy))

    def within(self, bounds) -> bool:
        return all(
            lo <= v <= hi for pt in (self.p, self.q) for v, (lo, hi) in zip(pt, bounds)
        )

    def to_dict(self) -> dict:
        return {"id": self.id, "kind": "segment", "p": list(self.p), "q": list(self.q)}


@dataclass(frozen=True)
class Cube3D:
    id: int
    min_corner: tuple[float, float, float]
    side: float

    def __post_init__(self):
        if not self.side > 0.0:
            raise ValueError("cube side must be positive")

    @property
    def max_corner(self) -> tuple[float, float, float]:
        return tuple(v + self.side for v in self.min_corner)

    def distance_to(self, pt: Sequence[float]) -> float:
        """Euclidean distance to the closed cube (0 inside)."""
        d = [
            max(lo - v, 0.0, v - lo - self.side)
            for v, lo in zip(pt, self.min_corner)
        ]
        return math.hypot(*d)

    def within(self, bounds) -> bool:
        return all(
            lo <= m and m + self.side <= hi
            for m, (lo, hi) in zip(self.min_corner, bounds)
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": "cube",
            "min_corner": list(self.min_corner),
            "side": self.side,
        }


Obstacle = Union[Segment2D, Cube3D]


def obstacle_from_dict(d: dict) -> Obstacle:
    if d["kind"] == "segment":
        return Segment2D(d["id"], tuple(d["p"]), tuple(d["q"]))
    if d["kind"] == "cube":
        return Cube3D(d["id"], tuple(d["min_corner"]), d["side"])
    raise ValueError(f"unknown obstacle kind {d['kind']!r}")


class World:
    """Hidden obstacle map plus the record of sensed voxels."""

    def __init__(self, obstacles: Sequence[Obstacle], bounds, voxel_size: float = DEFAULT_VOXEL):
        self.obstacles = tuple(obstacles)
        self.bounds = tuple(tuple(map(float, b)) for b in bounds)
        self.voxel_size = float(voxel_size)
        self.sensed: set[tuple[int, ...]] = set()
        self.sensing = True
        ids = [o.id for o in self.obstacles]
        if len(set(ids)) != len(ids):
            raise ValueError("obstacle ids must be unique")
        for o in self.obstacles:
            if not o.within(self.bounds):
                raise ValueError(f"obstacle {o.id} lies outside the world bounds")
        self._by_id = {o.id: o for o in self.obstacles}
        self.dim = len(self.bounds)
        self._ids = np.array(ids, dtype=int)
        if self.dim == 2:
            segs = [o for o in self.obstacles if isinstance(o, Segment2D)]
            self._p = np.array([o.p for o in segs], dtype=float).reshape(-1, 2)
            self._q = np.array([o.q for o in segs], dtype=float).reshape(-1, 2)
        else:
            cubes = [o for o in self.obstacles if isinstance(o, Cube3D)]
            self._lo = np.array([o.min_corner for o in cubes], dtype=float).reshape(-1, 3)
            self._hi = self._lo + np.array([o.side for o in cubes], dtype=float)[:, None]

    def obstacle(self, oid: int) -> Obstacle:
        return self._by_id[oid]

    def fresh(self) -> "World":
        """Same obstacles, empty sensed record."""
        return World(self.obstacles, self.bounds, self.voxel_size)

    def to_dict(self) -> dict:
        return {
            "bounds": [list(b) for b in self.bounds],
            "voxel_size": self.voxel_size,
            "obstacles": [o.to_dict() for o in self.obstacles],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "World":
        return cls([obstacle_from_dict(o) for o in d["obstacles"]], d["bounds"], d["voxel_size"])


# --------------------------------------------------------------------------
# exact geometric predicates; each returns (param along primitive, index) of
# the earliest hit or None


def _line2_hits(world: World, a, b) -> tuple[float, int] | None:
    if not len(world._p):
        return None
    p = np.asarray(a, dtype=float)
    r = np.asarray(b, dtype=float) - p
    q0 = world._p
    s = world._q - q0
    w = q0 - p
    rxs = r[0] * s[:, 1] - r[1] * s[:, 0]
    wxs = w[:, 0] * s[:, 1] - w[:, 1] * s[:, 0]
    wxr = w[:, 0] * r[1] - w[:, 1] * r[0]
    rr = r @ r
    ss = np.einsum("ij,ij->i", s, s)
    scale = math.sqrt(rr) * np.sqrt(ss)
    parallel = np.abs(rxs) <= 1e-12 * np.maximum(scale, 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = wxs / rxs
        u = wxr / rxs
    hit = ~parallel & (t >= 0.0) & (t <= 1.0) & (u >= 0.0) & (u <= 1.0)
    tt = np.where(hit, t, np.inf)
    if parallel.any() and rr > 0.0:
        wn = np.linalg.norm(w, axis=1)
        collinear = parallel & (np.abs(wxr) <= 1e-12 * math.sqrt(rr) * np.maximum(wn, 1.0))
        if collinear.any():
            t0 = (w @ r) / rr
            t1 = t0 + (s @ r) / rr
            lo = np.minimum(t0, t1)
            hi = np.maximum(t0, t1)
            ov = collinear & (hi >= 0.0) & (lo <= 1.0)
            tt = np.where(ov, np.minimum(tt, np.maximum(lo, 0.0)), tt)
    k = int(np.argmin(tt))
    if not np.isfinite(tt[k]):
        return None
    return float(tt[k]), k


def _arc_hits(world: World, arc: Arc) -> tuple[float, int] | None:
    if not len(world._p) or arc.sweep == 0.0:
        return None
    c = np.asarray(arc.center, dtype=float)
    q0 = world._p
    s = world._q - q0
    f = q0 - c
    a = np.einsum("ij,ij->i", s, s)
    b = 2.0 * np.einsum("ij,ij->i", s, f)
    cc = np.einsum("ij,ij->i", f, f) - arc.radius**2
    disc = b * b - 4.0 * a * cc
    ok = disc >= 0.0
    if not ok.any():
        return None
    sq = np.sqrt(np.where(ok, disc, 0.0))
    sweep = abs(arc.sweep)
    sign = 1.0 if arc.sweep > 0.0 else -1.0
    best = np.full(len(a), np.inf)
    for root in ((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)):
        valid = ok & (root >= 0.0) & (root <= 1.0)
        pts = q0 + root[:, None] * s
        phi = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
        off = np.mod(sign * (phi - arc.start_angle), 2.0 * math.pi)
        # a hit numerically just before the arc start wraps to ~2*pi
        off = np.where(off > 2.0 * math.pi - 1e-12, 0.0, off)
        valid &= off <= sweep
        best = np.where(valid, np.minimum(best, off / sweep), best)
    k = int(np.argmin(best))
    if not np.isfinite(best[k]):
        return None
    return float(best[k]), k


def _line3_hits(world: World, a, b) -> tuple[float, int] | None:
    if not len(world._lo):
        return None
    p = np.asarray(a, dtype=float)
    d = np.asarray(b, dtype=float) - p
    lo, hi = world._lo, world._hi
    tenter = np.full(len(lo), -np.inf)
    texit = np.full(len(lo), np.inf)
    for ax in range(3):
        if d[ax] == 0.0:
            inside = (lo[:, ax] < p[ax]) & (p[ax] < hi[:, ax])
            texit = np.where(inside, texit, -np.inf)
            continue
        t1 = (lo[:, ax] - p[ax]) / d[ax]
        t2 = (hi[:, ax] - p[ax]) / d[ax]
        tenter = np.maximum(tenter, np.minimum(t1, t2))
        texit = np.minimum(texit, np.maximum(t1, t2))
    hit = (tenter < texit) & (texit > 0.0) & (tenter < 1.0)
    tt = np.where(hit, np.maximum(tenter, 0.0), np.inf)
    k = int(np.argmin(tt))
    if not np.isfinite(tt[k]):
        return None
    return float(tt[k]), k


def first_hit(world: World, traj: Trajectory) -> tuple[int, float] | None:
    """Earliest obstacle along ``traj`` as ``(obstacle id, arc length)``."""
    offset = 0.0
    for prim in traj.primitives:
        length = prim.length
        if isinstance(prim, Arc):
            h = _arc_hits(world, prim)
        elif world.dim == 3:
            h = _line3_hits(world, prim.start, prim.end) if length > 0.0 else None
        else:
            h = _line2_hits(world, prim.start, prim.end) if length > 0.0 else None
        if h is not None:
            t, k = h
            return int(world._ids[k]), offset + t * length
        offset += length
    return None


def _sample_positions(traj: Trajectory, upto: float, step: float) -> np.ndarray:
    chunks = [np.asarray(traj.start.position, dtype=float)[None, :]]
    offset = 0.0
    for prim in traj.primitives:
        if offset >= upto:
            break
        length = prim.length
        span = min(length, upto - offset)
        if span > 0.0:
            n = max(1, math.ceil(span / step))
            s = np.linspace(0.0, span, n + 1)
            if isinstance(prim, Arc):
                phi = prim.start_angle + np.copysign(s / prim.radius, prim.sweep)
                pts = np.column_stack(
                    (prim.center[0] + prim.radius * np.cos(phi),
                     prim.center[1] + prim.radius * np.sin(phi))
                )
            else:
                a = np.asarray(prim.start, dtype=float)
                b = np.asarray(prim.end, dtype=float)
                pts = a + np.outer(s / length, b - a)
            chunks.append(pts)
        offset += length
    return np.concatenate(chunks)


def mark_sensed(world: World, traj: Trajectory, upto: float | None = None) -> None:
    if upto is None:
        upto = traj.cost
    pts = _sample_positions(traj, upto, world.voxel_size / 4.0)
    cells = np.unique(np.floor(pts / world.voxel_size).astype(np.int64), axis=0)
    world.sensed.update(map(tuple, cells.tolist()))


def check_trajectory(world: World, traj: Trajectory) -> int | None:
    """Return the id of the first obstacle hit along ``traj``, or None if clear."""
    hit = first_hit(world, traj)
    if world.sensing:
        mark_sensed(world, traj, None if hit is None else hit[1])
    return None if hit is None else hit[0]


def sensed_area(world: World) -> int:
    return len(world.sensed)


def segments_blocked(world: World, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """Vectorized hit test for many straight segments; no sensing."""
    starts = np.asarray(starts, dtype=float)
    ends = np.asarray(ends, dtype=float)
    out = np.zeros(len(starts), dtype=bool)
    for i, (a, b) in enumerate(zip(starts, ends)):
        if np.array_equal(a, b):
            continue
        h = _line3_hits(world, a, b) if world.dim == 3 else _line2_hits(world, a, b)
        out[i] = h is not None
    return out


# --------------------------------------------------------------------------
# boundary discretization


def default_clearance(delta: float) -> float:
    return 1e-3 * delta


def heading_count(angular_delta: float) -> int:
    return max(1, math.ceil(2.0 * math.pi / angular_delta - 1e-9))


def _segment_positions(o: Segment2D, delta: float, eps: float,
                       tips: bool = True) -> list[tuple[float, float]]:
    px, py = o.p
    L = o.length
    ux, uy = (o.q[0] - px) / L, (o.q[1] - py) / L
    nx, ny = -uy, ux
    m = math.ceil(L / delta - 1e-9) + 1
    out = []
    for side in (1.0, -1.0):
        for i in range(m):
            s = L * i / (m - 1)
            out.append((px + s * ux + side * eps * nx, py + s * uy + side * eps * ny))
    if tips:
        # a point robot turns around the segment's end through these
        out.append((px - eps * ux, py - eps * uy))
        out.append((o.q[0] + eps * ux, o.q[1] + eps * uy))
    return out


def _cube_positions(o: Cube3D, delta: float, eps: float) -> list[tuple[float, float, float]]:
    m = math.ceil(o.side / delta - 1e-9) + 1
    ticks = [o.side * i / (m - 1) for i in range(m)]
    out = []
    for i in range(m):
        for j in range(m):
            for k in range(m):
                idx = (i, j, k)
                if not any(v in (0, m - 1) for v in idx):
                    continue
                pt = []
                for ax, v in enumerate(idx):
                    c = o.min_corner[ax] + ticks[v]
                    if v == 0:
                        c -= eps
                    elif v == m - 1:
                        c += eps
                    pt.append(c)
                out.append(tuple(pt))
    return out


def boundary_nodes(
    obstacle: Obstacle,
    delta: float,
    angular_delta: float | None,
    spec: SteeringSpec,
    clearance: float | None = None,
) -> list[State]:
    """States sampled at spacing ``delta`` just outside ``obstacle``."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    eps = default_clearance(delta) if clearance is None else clearance
    if isinstance(obstacle, Cube3D):
        positions = _cube_positions(obstacle, delta, eps)
    else:
        positions = _segment_positions(obstacle, delta, eps, tips=spec.system != DUBINS)
    seen: set = set()
    out: list[State] = []
    if spec.system == DUBINS:
        if not angular_delta or angular_delta <= 0.0:
            raise ValueError("angular_delta must be positive for the Dubins car")
        n = heading_count(angular_delta)
        states = (Pose2(x, y, k * angular_delta) for x, y in positions for k in range(n))
    elif spec.system == HOLONOMIC_3D:
        states = (Point3(*p) for p in positions)
    else:
        states = (Point2(*p) for p in positions)
    for s in states:
        if s not in seen:
            seen.add(s)
            out.append(s)
    return out


# --------------------------------------------------------------------------
# scenarios


@dataclass(frozen=True)
class ScenarioSpec:
    system: SteeringSpec
    obstacle_count: int
    obstacle_size: float
    bounds: tuple[tuple[float, float], ...]
    seed: int
    boundary_delta: float = 0.25
    angular_delta: float | None = None

    def __post_init__(self):
        if self.obstacle_count < 0:
            raise ValueError("obstacle_count must be nonnegative")
        if not self.obstacle_size > 0.0:
            raise ValueError("obstacle_size must be positive")
        if not self.boundary_delta > 0.0:
            raise ValueError("boundary_delta must be positive")
        if self.system.is_dubins and not (self.angular_delta and self.angular_delta > 0.0):
            raise ValueError("angular_delta must be positive for the Dubins car")
        dim = 3 if self.system.system == HOLONOMIC_3D else 2
        if len(self.bounds) != dim:
            raise ValueError(f"bounds must have {dim} axes")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def to_dict(self) -> dict:
        return {
            "system": self.system.system,
            "turning_radius": self.system.turning_radius,
            "obstacle_count": self.obstacle_count,
            "obstacle_size": self.obstacle_size,
            "bounds": [list(b) for b in self.bounds],
            "seed": self.seed,
            "boundary_delta": self.boundary_delta,
            "angular_delta": self.angular_delta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        return cls(
            SteeringSpec(d["system"], d.get("turning_radius", 1.0)),
            int(d["obstacle_count"]),
            float(d["obstacle_size"]),
            tuple(tuple(map(float, b)) for b in d["bounds"]),
            int(d["seed"]),
            float(d.get("boundary_delta", 0.25)),
            d.get("angular_delta"),
        )


@dataclass
class Scenario:
    world: World
    start: State
    goal: State
    spec: ScenarioSpec
    name: str = field(default="")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "spec": self.spec.to_dict(),
            "start": self.start.to_list(),
            "goal": self.goal.to_list(),
            "world": self.world.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        spec = ScenarioSpec.from_dict(d["spec"])
        return cls(
            World.from_dict(d["world"]),
            spec.system.make_state(d["start"]),
            spec.system.make_state(d["goal"]),
            spec,
            d.get("name", ""),
        )


def _default_start(spec: ScenarioSpec) -> tuple[float, ...]:
    return (5.0, 5.0, 5.0)[: spec.dim]


def generate_scenario(spec: ScenarioSpec, voxel_size: float = DEFAULT_VOXEL) -> Scenario:
    """Random obstacle field with a start at (5, 5[, 5]) and a goal 20 away."""
    rng = np.random.default_rng(spec.seed)
    dim = spec.dim
    start_pos = _default_start(spec)
    if dim == 2:
        ang = rng.uniform(0.0, math.pi / 2)
        direction = (math.cos(ang), math.sin(ang))
    else:
        v = np.abs(rng.normal(size=3))
        direction = tuple(v / np.linalg.norm(v))
    goal_pos = tuple(float(round(s + 20.0 * c)) for s, c in zip(start_pos, direction))
    if spec.system.is_dubins:
        h0, h1 = (float(k) * math.pi / 2 for k in rng.integers(0, 4, size=2))
        start = Pose2(*start_pos, h0)
        goal = Pose2(*goal_pos, h1)
    else:
        start = spec.system.make_state(start_pos)
        goal = spec.system.make_state(goal_pos)
    clearance = default_clearance(spec.boundary_delta)
    size = spec.obstacle_size
    obstacles: list[Obstacle] = []
    for oid in range(spec.obstacle_count):
        for _ in range(MAX_REDRAWS):
            if dim == 2:
                (x0, x1), (y0, y1) = spec.bounds
                cx = rng.uniform(x0 + size / 2, x1 - size / 2)
                cy = rng.uniform(y0 + size / 2, y1 - size / 2)
                th = rng.uniform(0.0, math.pi)
                dx, dy = 0.5 * size * math.cos(th), 0.5 * size * math.sin(th)
                ob: Obstacle = Segment2D(oid, (cx - dx, cy - dy), (cx + dx, cy + dy))
            else:
                lo = tuple(rng.uniform(b0, b1 - size) for b0, b1 in spec.bounds)
                ob = Cube3D(oid, lo, size)
            if (
                ob.distance_to(start.position) > clearance
                and ob.distance_to(goal.position) > clearance
            ):
                obstacles.append(ob)
                break
        else:
            raise GenerationFailed(f"could not place obstacle {oid} clear of start and goal")
    world = World(obstacles, spec.bounds, voxel_size)
    return Scenario(world, start, goal, spec, f"seed{spec.seed}")
