"""Closed-form free-space steering.

Holonomic systems have a single straight-line minimum. For the Dubins car we
return every feasible member of the six-word family (LSL, RSR, LSR, RSL, RLR,
LRL); each is a locally minimal free-space path and the planners keep them as
parallel edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np

from .core import TWO_PI, Arc, Line, Point2, Point3, Pose2, State, Trajectory, TrajectorySet

HOLONOMIC_2D = "holonomic2d"
HOLONOMIC_3D = "holonomic3d"
DUBINS = "dubins"
SYSTEMS = (HOLONOMIC_2D, HOLONOMIC_3D, DUBINS)

WORDS = ("LSL", "RSR", "LSR", "RSL", "RLR", "LRL")

_CLAMP_SLACK = 1e-12
_WRAP_EPS = 1e-10


@dataclass(frozen=True)
class SteeringSpec:
    system: str
    turning_radius: float = 1.0

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ValueError(f"unknown system {self.system!r}")
        if self.system == DUBINS and not self.turning_radius > 0.0:
            raise ValueError("turning_radius must be positive for the Dubins car")

    @property
    def is_dubins(self) -> bool:
        return self.system == DUBINS

    def make_state(self, values) -> State:
        if self.system == HOLONOMIC_2D:
            return Point2(values[0], values[1])
        if self.system == HOLONOMIC_3D:
            return Point3(values[0], values[1], values[2])
        return Pose2(values[0], values[1], values[2])

    def to_dict(self) -> dict:
        return {"system": self.system, "turning_radius": self.turning_radius}


def _mod2pi(x: float) -> float:
    x = x % TWO_PI
    if x > TWO_PI - _WRAP_EPS:
        return 0.0
    return x


def _acos(x: float) -> float | None:
    if x > 1.0 + _CLAMP_SLACK or x < -1.0 - _CLAMP_SLACK:
        return None
    return math.acos(min(1.0, max(-1.0, x)))


def dubins_words(a: Pose2, b: Pose2, rho: float) -> list[tuple[str, float, float, float]]:
    """Normalized segment lengths ``(word, t, p, q)`` of each feasible word."""
    dx = (b.x - a.x) / rho
    dy = (b.y - a.y) / rho
    d = math.hypot(dx, dy)
    phi = math.atan2(dy, dx) if d > 0.0 else 0.0
    al = _mod2pi(a.theta - phi)
    be = _mod2pi(b.theta - phi)
    sa, ca = math.sin(al), math.cos(al)
    sb, cb = math.sin(be), math.cos(be)
    cab = math.cos(al - be)
    out = []

    p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb)
    if p2 >= -_CLAMP_SLACK:
        tmp = math.atan2(cb - ca, d + sa - sb)
        out.append(("LSL", _mod2pi(-al + tmp), math.sqrt(max(p2, 0.0)), _mod2pi(be - tmp)))

    p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa)
    if p2 >= -_CLAMP_SLACK:
        tmp = math.atan2(ca - cb, d - sa + sb)
        out.append(("RSR", _mod2pi(al - tmp), math.sqrt(max(p2, 0.0)), _mod2pi(-be + tmp)))

    p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb)
    if p2 >= -_CLAMP_SLACK:
        p = math.sqrt(max(p2, 0.0))
        tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
        out.append(("LSR", _mod2pi(-al + tmp), p, _mod2pi(-be + tmp)))

    p2 = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb)
    if p2 >= -_CLAMP_SLACK:
        p = math.sqrt(max(p2, 0.0))
        tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
        out.append(("RSL", _mod2pi(al - tmp), p, _mod2pi(be - tmp)))

    ac = _acos((6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0)
    if ac is not None:
        p = _mod2pi(TWO_PI - ac)
        t = _mod2pi(al - math.atan2(ca - cb, d - sa + sb) + p / 2.0)
        out.append(("RLR", t, p, _mod2pi(al - be - t + p)))

    ac = _acos((6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0)
    if ac is not None:
        p = _mod2pi(TWO_PI - ac)
        t = _mod2pi(-al - math.atan2(ca - cb, d + sa - sb) + p / 2.0)
        out.append(("LRL", t, p, _mod2pi(be - al - t + p)))
    return out


def _word_trajectory(a: Pose2, b: Pose2, rho: float, word: str, lengths) -> Trajectory:
    x, y, th = a.x, a.y, a.theta
    prims = []
    for letter, seg in zip(word, lengths):
        if letter == "S":
            nx = x + seg * rho * math.cos(th)
            ny = y + seg * rho * math.sin(th)
            prims.append(Line((x, y), (nx, ny)))
            x, y = nx, ny
            continue
        if letter == "L":
            cx, cy = x - rho * math.sin(th), y + rho * math.cos(th)
            start = th - math.pi / 2
            sweep = seg
        else:
            cx, cy = x + rho * math.sin(th), y - rho * math.cos(th)
            start = th + math.pi / 2
            sweep = -seg
        arc = Arc((cx, cy), rho, start, sweep)
        prims.append(arc)
        x, y = arc.end
        th = th + sweep
    # total is computed from the normalized lengths to avoid float drift
    return Trajectory(a, b, tuple(prims), rho * math.fsum(lengths))


def dubins_trajectories(a: Pose2, b: Pose2, rho: float) -> list[Trajectory]:
    return [_word_trajectory(a, b, rho, w, (t, p, q)) for w, t, p, q in dubins_words(a, b, rho)]


def steer_free(spec: SteeringSpec, a: State, b: State) -> TrajectorySet:
    if a == b:
        return TrajectorySet(a, b, (Trajectory.zero(a),))
    if spec.is_dubins:
        return TrajectorySet(a, b, tuple(dubins_trajectories(a, b, spec.turning_radius)))
    return TrajectorySet(a, b, (Trajectory.line(a, b),))


def free_members(spec: SteeringSpec, a: State, b: State) -> list[tuple[float, Callable[[], Trajectory]]]:
    """Costs of the :func:`steer_free` members with deferred geometry, cheapest first."""
    if a == b:
        return [(0.0, partial(Trajectory.zero, a))]
    if not spec.is_dubins:
        return [(math.dist(a.position, b.position), partial(Trajectory.line, a, b))]
    rho = spec.turning_radius
    out = [
        (rho * math.fsum((t, p, q)), partial(_word_trajectory, a, b, rho, w, (t, p, q)))
        for w, t, p, q in dubins_words(a, b, rho)
    ]
    out.sort(key=lambda m: m[0])
    return out


def dubins_distance(a: Pose2, b: Pose2, rho: float) -> float:
    return rho * min(t + p + q for _, t, p, q in dubins_words(a, b, rho))


def free_heuristic(spec: SteeringSpec, a: State, g: State) -> float:
    """Cost of the cheapest free-space trajectory from ``a`` to ``g``."""
    if a == g:
        return 0.0
    if spec.is_dubins:
        return dubins_distance(a, g, spec.turning_radius)
    return math.dist(a.position, g.position)


def dubins_word_costs(x0, y0, th0, x1, y1, th1, rho: float) -> np.ndarray:
    """Vectorized word costs, shape ``(n, 6)`` in :data:`WORDS` order.

    Infeasible words are ``inf``. Arguments broadcast against each other.
    """
    x0, y0, th0, x1, y1, th1 = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (x0, y0, th0, x1, y1, th1))
    )
    dx = (x1 - x0) / rho
    dy = (y1 - y0) / rho
    d = np.hypot(dx, dy)
    phi = np.where(d > 0.0, np.arctan2(dy, dx), 0.0)

    def m2p(v):
        v = np.mod(v, TWO_PI)
        return np.where(v > TWO_PI - _WRAP_EPS, 0.0, v)

    al = m2p(th0 - phi)
    be = m2p(th1 - phi)
    sa, ca, sb, cb = np.sin(al), np.cos(al), np.sin(be), np.cos(be)
    cab = np.cos(al - be)
    out = np.full(d.shape + (6,), np.inf)

    with np.errstate(invalid="ignore"):
        p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb)
        tmp = np.arctan2(cb - ca, d + sa - sb)
        c = m2p(-al + tmp) + np.sqrt(np.maximum(p2, 0.0)) + m2p(be - tmp)
        out[..., 0] = np.where(p2 >= -_CLAMP_SLACK, c, np.inf)

        p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa)
        tmp = np.arctan2(ca - cb, d - sa + sb)
        c = m2p(al - tmp) + np.sqrt(np.maximum(p2, 0.0)) + m2p(-be + tmp)
        out[..., 1] = np.where(p2 >= -_CLAMP_SLACK, c, np.inf)

        p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb)
        p = np.sqrt(np.maximum(p2, 0.0))
        tmp = np.arctan2(-ca - cb, d + sa + sb) - np.arctan2(-2.0, p)
        c = m2p(-al + tmp) + p + m2p(-be + tmp)
        out[..., 2] = np.where(p2 >= -_CLAMP_SLACK, c, np.inf)

        p2 = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb)
        p = np.sqrt(np.maximum(p2, 0.0))
        tmp = np.arctan2(ca + cb, d - sa - sb) - np.arctan2(2.0, p)
        c = m2p(al - tmp) + p + m2p(be - tmp)
        out[..., 3] = np.where(p2 >= -_CLAMP_SLACK, c, np.inf)

        arg = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0
        ok = np.abs(arg) <= 1.0 + _CLAMP_SLACK
        p = m2p(TWO_PI - np.arccos(np.clip(arg, -1.0, 1.0)))
        t = m2p(al - np.arctan2(ca - cb, d - sa + sb) + p / 2.0)
        c = t + p + m2p(al - be - t + p)
        out[..., 4] = np.where(ok, c, np.inf)

        arg = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0
        ok = np.abs(arg) <= 1.0 + _CLAMP_SLACK
        p = m2p(TWO_PI - np.arccos(np.clip(arg, -1.0, 1.0)))
        t = m2p(-al - np.arctan2(ca - cb, d + sa - sb) + p / 2.0)
        c = t + p + m2p(be - al - t + p)
        out[..., 5] = np.where(ok, c, np.inf)
    return out * rho
