"""Shared builders and an independent Dubins reference for the tests."""
from __future__ import annotations

import math

import numpy as np

from sparseplan.core import Pose2
from sparseplan.steering import SteeringSpec
from sparseplan.world import Scenario, ScenarioSpec, Segment2D, World, generate_scenario

B2 = ((0.0, 30.0), (0.0, 30.0))
B3 = ((0.0, 30.0), (0.0, 30.0), (0.0, 30.0))
HOLO2 = SteeringSpec("holonomic2d")
HOLO3 = SteeringSpec("holonomic3d")
DUBINS = SteeringSpec("dubins", 1.0)


def random_scenario(system: SteeringSpec, count: int, seed: int, delta=0.25, angular_delta=None,
                    size=2.0) -> Scenario:
    bounds = B3 if system.system == "holonomic3d" else B2
    return generate_scenario(ScenarioSpec(system, count, size, bounds, seed, delta, angular_delta))


def custom_scenario(system: SteeringSpec, obstacles, start, goal, delta=0.25, angular_delta=None) -> Scenario:
    bounds = B3 if system.system == "holonomic3d" else B2
    spec = ScenarioSpec(system, len(obstacles), 2.0, bounds, 0, delta, angular_delta)
    return Scenario(World(obstacles, bounds), start, goal, spec, "custom")


def box_segments(cx: float, cy: float, half: float, first_id: int = 0) -> list[Segment2D]:
    """Four segments forming a closed square around (cx, cy)."""
    c = [(cx - half, cy - half), (cx + half, cy - half), (cx + half, cy + half), (cx - half, cy + half)]
    return [Segment2D(first_id + i, c[i], c[(i + 1) % 4]) for i in range(4)]


def enclosed_scenario(system: SteeringSpec, seed: int, delta=0.25, angular_delta=None) -> Scenario:
    """Random field whose goal sits inside a closed box of segments."""
    base = random_scenario(system, 6, seed, delta, angular_delta)
    gx, gy = base.goal.position
    obs = [o for o in base.world.obstacles if min(o.distance_to((gx, gy)), o.distance_to(base.start.position)) > 2.0]
    obs = [Segment2D(i, o.p, o.q) for i, o in enumerate(obs)]
    obs += box_segments(gx, gy, 1.0, len(obs))
    return custom_scenario(system, obs, base.start, base.goal, delta, angular_delta)


def free_scenario(system: SteeringSpec, seed: int, angular_delta=None) -> Scenario:
    return random_scenario(system, 0, seed, angular_delta=angular_delta)


# -- brute-force Dubins reference ---------------------------------------------
#
# Each word is found by sweeping the first arc angle t over [0, 2pi] and
# locating the t where the remaining pieces become geometrically possible:
# for CSC the straight line leaving the first arc must be tangent to the final
# circle, for CCC the middle circle must touch the final circle. Roots are
# bracketed on a grid and refined by bisection. Nothing here uses the closed
# form of the library under test.

TWO_PI = 2.0 * math.pi


def _normal(h):
    return np.stack([-np.sin(h), np.cos(h)], axis=-1)


def _mod(x):
    return np.mod(x, TWO_PI)


def _word_pieces(t, s1, s2, s3, goal, ccc):
    """Residual f(t) and total length for one word, vectorized over t."""
    gx, gy, gth = goal
    h = s1 * t
    px = np.sin(t)
    py = s1 * (1.0 - np.cos(t))
    c3x = gx - s3 * np.sin(gth)
    c3y = gy + s3 * np.cos(gth)
    n = _normal(h)
    if not ccc:
        f = (c3x - px) * n[..., 0] + (c3y - py) * n[..., 1] - s3
        tx, ty = c3x - s3 * n[..., 0], c3y - s3 * n[..., 1]
        p = (tx - px) * np.cos(h) + (ty - py) * np.sin(h)
        q = _mod(s3 * (gth - h))
        total = np.where(p >= -1e-9, t + np.maximum(p, 0.0) + q, np.inf)
        return f, total
    c2x, c2y = px + s2 * n[..., 0], py + s2 * n[..., 1]
    f = np.hypot(c2x - c3x, c2y - c3y) - 2.0
    mx, my = (c2x + c3x) / 2.0, (c2y + c3y) / 2.0
    # for turn direction s at point X on a circle centered C: n(h) = s (C - X)
    nmx, nmy = s2 * (c2x - mx), s2 * (c2y - my)
    hm = np.arctan2(-nmx, nmy)
    p = _mod(s2 * (hm - h))
    q = _mod(s3 * (gth - hm))
    return f, t + p + q


_WORDS = [(1, 0, 1, False), (-1, 0, -1, False), (1, 0, -1, False), (-1, 0, 1, False),
          (-1, 1, -1, True), (1, -1, 1, True)]


def brute_dubins(goals: np.ndarray, samples: int = 1024, iters: int = 60, chunk: int = 500) -> np.ndarray:
    """Shortest Dubins length from (0,0,0) to each goal pose (rho = 1)."""
    goals = np.asarray(goals, dtype=float)
    if len(goals) > chunk:
        return np.concatenate([
            brute_dubins(goals[i:i + chunk], samples, iters, chunk) for i in range(0, len(goals), chunk)
        ])
    n = len(goals)
    best = np.full(n, np.inf)
    grid = np.linspace(0.0, TWO_PI, samples + 1)
    for s1, s2, s3, ccc in _WORDS:
        f, _ = _word_pieces(grid[None, :], s1, s2, s3, tuple(goals.T[:, :, None]), ccc)
        sign = np.signbit(f)
        rows, cols = np.nonzero(sign[:, :-1] != sign[:, 1:])
        if rows.size == 0:
            continue
        lo, hi = grid[cols].copy(), grid[cols + 1].copy()
        g = tuple(goals[rows].T)
        flo, _ = _word_pieces(lo, s1, s2, s3, g, ccc)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            fm, _ = _word_pieces(mid, s1, s2, s3, g, ccc)
            same = np.signbit(fm) == np.signbit(flo)
            lo = np.where(same, mid, lo)
            flo = np.where(same, fm, flo)
            hi = np.where(same, hi, mid)
        t = 0.5 * (lo + hi)
        _, total = _word_pieces(t, s1, s2, s3, g, ccc)
        np.minimum.at(best, rows, total)
    return best


def to_local(a: Pose2, b: Pose2) -> tuple[float, float, float]:
    """Pose of ``b`` in the frame of ``a``."""
    dx, dy = b.x - a.x, b.y - a.y
    c, s = math.cos(a.theta), math.sin(a.theta)
    return (c * dx + s * dy, -s * dx + c * dy, b.theta - a.theta)

