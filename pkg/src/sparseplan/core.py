"""States, motion primitives and trajectories.

Every planner in the package exchanges :class:`Trajectory` objects: ordered
sequences of straight segments and circular arcs travelled at unit speed, so
that duration, length and cost coincide.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

TWO_PI = 2.0 * math.pi

#: Coordinates are rounded to this quantum for hashing and equality.
QUANTUM = 1e-6

_THETA_WRAP = round(TWO_PI / QUANTUM)


class EndpointMismatch(ValueError):
    """Raised when two trajectories that do not meet are concatenated."""


def _q(v: float) -> int:
    return round(v / QUANTUM)


def normalize_angle(theta: float) -> float:
    """Wrap an angle into ``[0, 2*pi)``."""
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    if theta >= TWO_PI:
        theta = 0.0
    return theta


class State:
    """Base class for robot states.

    Equality and hashing go through a quantized key so that the same node
    generated twice by floating point arithmetic collapses to one.
    """

    __slots__ = ("_key",)
    dim = 0

    @property
    def position(self) -> tuple[float, ...]:
        raise NotImplementedError

    @property
    def key(self) -> tuple:
        return self._key

    def __eq__(self, other: object) -> bool:
        return type(other) is type(self) and other._key == self._key

    def __hash__(self) -> int:
        return hash(self._key)

    def to_list(self) -> list[float]:
        raise NotImplementedError

    @staticmethod
    def from_list(kind: str, values: Sequence[float]) -> "State":
        if kind == "r2":
            return Point2(*values)
        if kind == "r3":
            return Point3(*values)
        if kind == "se2":
            return Pose2(*values)
        raise ValueError(f"unknown state kind {kind!r}")


class Point2(State):
    __slots__ = ("x", "y")
    kind = "r2"
    dim = 2

    def __init__(self, x: float, y: float):
        self.x = float(x)
        self.y = float(y)
        self._key = (_q(self.x), _q(self.y))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    def to_list(self) -> list[float]:
        return [self.x, self.y]

    def __repr__(self) -> str:
        return f"Point2({self.x:g}, {self.y:g})"


class Point3(State):
    __slots__ = ("x", "y", "z")
    kind = "r3"
    dim = 3

    def __init__(self, x: float, y: float, z: float):
        self.x = float(x)
        self.y = float(y)
        self.z = float(z)
        self._key = (_q(self.x), _q(self.y), _q(self.z))

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.z]

    def __repr__(self) -> str:
        return f"Point3({self.x:g}, {self.y:g}, {self.z:g})"


class Pose2(State):
    """Planar pose; heading normalized to ``[0, 2*pi)``."""

    __slots__ = ("x", "y", "theta")
    kind = "se2"
    dim = 2

    def __init__(self, x: float, y: float, theta: float):
        self.x = float(x)
        self.y = float(y)
        self.theta = normalize_angle(float(theta))
        qt = _q(self.theta)
        if qt >= _THETA_WRAP:
            qt = 0
        self._key = (_q(self.x), _q(self.y), qt)

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.theta]

    def __repr__(self) -> str:
        return f"Pose2({self.x:g}, {self.y:g}, {self.theta:g})"


def same_position(p: Sequence[float], q: Sequence[float]) -> bool:
    return all(_q(a) == _q(b) for a, b in zip(p, q))


def distance(p: Sequence[float], q: Sequence[float]) -> float:
    return math.dist(p, q)


# --------------------------------------------------------------------------
# primitives


@dataclass(frozen=True, slots=True)
class Line:
    """Straight segment between two positions (2D or 3D)."""

    start: tuple[float, ...]
    end: tuple[float, ...]

    @property
    def length(self) -> float:
        return math.dist(self.start, self.end)

    def point_at(self, s: float) -> tuple[float, ...]:
        n = self.length
        if n == 0.0:
            return self.start
        f = s / n
        return tuple(a + f * (b - a) for a, b in zip(self.start, self.end))

    def heading(self) -> float | None:
        dx = self.end[0] - self.start[0]
        dy = self.end[1] - self.start[1]
        if dx == 0.0 and dy == 0.0:
            return None
        return normalize_angle(math.atan2(dy, dx))

    def to_dict(self) -> dict:
        return {"kind": "line", "start": list(self.start), "end": list(self.end)}


@dataclass(frozen=True, slots=True)
class Arc:
    """Circular arc; positive sweep turns left (counter-clockwise)."""

    center: tuple[float, float]
    radius: float
    start_angle: float
    sweep: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("arc radius must be positive")
        if abs(self.sweep) > TWO_PI + 1e-9:
            raise ValueError("arc sweep exceeds a full turn")

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    def angle_at(self, s: float) -> float:
        return self.start_angle + math.copysign(s / self.radius, self.sweep)

    def point_at(self, s: float) -> tuple[float, float]:
        phi = self.angle_at(s)
        return (
            self.center[0] + self.radius * math.cos(phi),
            self.center[1] + self.radius * math.sin(phi),
        )

    @property
    def start(self) -> tuple[float, float]:
        return self.point_at(0.0)

    @property
    def end(self) -> tuple[float, float]:
        return self.point_at(self.length)

    def heading_at(self, s: float) -> float:
        turn = math.pi / 2 if self.sweep >= 0.0 else -math.pi / 2
        return normalize_angle(self.angle_at(s) + turn)

    def to_dict(self) -> dict:
        return {
            "kind": "arc",
            "center": list(self.center),
            "radius": self.radius,
            "start_angle": self.start_angle,
            "sweep": self.sweep,
        }


Primitive = Union[Line, Arc]


def primitive_from_dict(d: dict) -> Primitive:
    if d["kind"] == "line":
        return Line(tuple(d["start"]), tuple(d["end"]))
    if d["kind"] == "arc":
        return Arc(tuple(d["center"]), d["radius"], d["start_angle"], d["sweep"])
    raise ValueError(f"unknown primitive kind {d['kind']!r}")


# --------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True, slots=True)
class Trajectory:
    start: State
    end: State
    primitives: tuple[Primitive, ...] = ()
    cost: float = field(default=-1.0)

    def __post_init__(self):
        if self.cost < 0.0:
            object.__setattr__(self, "cost", math.fsum(p.length for p in self.primitives))

    @classmethod
    def line(cls, a: State, b: State) -> "Trajectory":
        if a == b:
            return cls.zero(a)
        return cls(a, b, (Line(a.position, b.position),))

    @classmethod
    def zero(cls, s: State) -> "Trajectory":
        return cls(s, s, (), 0.0)

    def __len__(self) -> int:
        return len(self.primitives)

    def __add__(self, other: "Trajectory") -> "Trajectory":
        return concatenate(self, other)

    def is_continuous(self) -> bool:
        """Check that consecutive primitives meet (and headings agree for poses)."""
        pos = self.start.position
        heading = getattr(self.start, "theta", None)
        for prim in self.primitives:
            if not same_position(prim.start, pos):
                return False
            if heading is not None:
                h0 = prim.heading_at(0.0) if isinstance(prim, Arc) else prim.heading()
                if h0 is not None and not _same_heading(h0, heading):
                    return False
                if isinstance(prim, Arc):
                    heading = prim.heading_at(prim.length)
            pos = prim.end
        if not same_position(pos, self.end.position):
            return False
        if heading is not None and not _same_heading(heading, self.end.theta):
            return False
        return True

    def to_json(self) -> list[dict]:
        return [p.to_dict() for p in self.primitives]

    def to_dict(self) -> dict:
        return {
            "kind": self.start.kind,
            "start": self.start.to_list(),
            "end": self.end.to_list(),
            "cost": self.cost,
            "primitives": self.to_json(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        return cls(
            State.from_list(d["kind"], d["start"]),
            State.from_list(d["kind"], d["end"]),
            tuple(primitive_from_dict(p) for p in d["primitives"]),
            d["cost"],
        )


def _same_heading(a: float, b: float, tol: float = 1e-6) -> bool:
    d = abs(normalize_angle(a) - normalize_angle(b))
    return min(d, TWO_PI - d) <= tol


def concatenate(t1: Trajectory, t2: Trajectory) -> Trajectory:
    if t1.end != t2.start:
        raise EndpointMismatch(f"{t1.end!r} does not meet {t2.start!r}")
    return Trajectory(t1.start, t2.end, t1.primitives + t2.primitives, t1.cost + t2.cost)


def cost(t: Trajectory) -> float:
    return t.cost


@dataclass(frozen=True)
class TrajectorySet:
    """Trajectories sharing an origin and terminal, sorted by cost."""

    origin: State
    terminal: State
    members: tuple[Trajectory, ...]

    def __post_init__(self):
        for m in self.members:
            if m.start != self.origin or m.end != self.terminal:
                raise EndpointMismatch("member endpoints differ from the set's")
        object.__setattr__(
            self, "members", tuple(sorted(self.members, key=lambda t: t.cost))
        )

    def __iter__(self) -> Iterator[Trajectory]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def min_cost(self) -> float:
        return self.members[0].cost if self.members else math.inf


def _state_like(template: State, pos: Sequence[float], heading: float | None) -> State:
    if isinstance(template, Pose2):
        return Pose2(pos[0], pos[1], heading if heading is not None else template.theta)
    if isinstance(template, Point3):
        return Point3(*pos)
    return Point2(*pos)


def sample(t: Trajectory, step: float) -> list[State]:
    """States spaced at most ``step`` apart along ``t``, endpoints included."""
    if step <= 0.0:
        raise ValueError("step must be positive")
    total = t.cost
    if total == 0.0 or not t.primitives:
        return [t.start]
    n = max(1, math.ceil(total / step))
    targets = [total * i / n for i in range(n + 1)]
    out: list[State] = []
    heading = getattr(t.start, "theta", None)
    offset = 0.0
    idx = 0
    prims = t.primitives
    for k, s in enumerate(targets):
        if k == 0:
            out.append(t.start)
            continue
        if k == n:
            out.append(t.end)
            continue
        while idx < len(prims) - 1 and s > offset + prims[idx].length:
            p = prims[idx]
            if isinstance(p, Arc):
                heading = p.heading_at(p.length)
            elif p.heading() is not None:
                heading = p.heading()
            offset += p.length
            idx += 1
        p = prims[idx]
        local = min(max(s - offset, 0.0), p.length)
        if isinstance(p, Arc):
            h = p.heading_at(local)
        else:
            h = p.heading() if p.heading() is not None else heading
        out.append(_state_like(t.start, p.point_at(local), h))
    return out
