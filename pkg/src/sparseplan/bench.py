"""Experiment harness: scenario files, planner sweeps, metrics and summaries."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from .grid import GridSpec, SnapError, plan_grid
from .lazy import BUDGET, IterationBudgetExceeded, PlanResult
from .sparse import PlannerParams, plan
from .steering import SYSTEMS, SteeringSpec
from .world import GenerationFailed, Scenario, ScenarioSpec, generate_scenario

CSV_HEADER = (
    "scenario_id", "seed", "planner", "grid_discr", "angular_discr", "connectivity",
    "cost", "plan_time_ms", "nodes", "edges", "edge_checks", "iterations",
    "area_sensed", "status",
)
PLANNERS = ("sparse", "grid")
ERROR = "error"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""

    def __init__(self, where: str, field: str, msg: str):
        super().__init__(f"{where}: {field}: {msg}")
        self.field = field


class MissingReference(LookupError):
    pass


# -- config parsing --------------------------------------------------------


def parse_angle(v) -> float:
    """Radians from a number or a string such as ``"pi/8"`` or ``"3*pi/4"``."""
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    if not isinstance(v, str):
        raise ValueError(f"not an angle: {v!r}")
    s = v.replace(" ", "").lower()
    num, _, den = s.partition("/")
    if "pi" in num:
        k = num.replace("*pi", "").replace("pi", "")
        num_v = (float(k) if k else 1.0) * math.pi
    else:
        num_v = float(num)
    return num_v / float(den) if den else num_v


def load_json(path) -> dict:
    path = FsPath(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), "file", exc.strerror or str(exc)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", "json", exc.msg) from exc
    if not isinstance(doc, dict):
        raise ConfigError(str(path), "document", "must be a JSON object")
    return doc


def _get(doc: dict, key: str, where: str, kind, default=None, required=True):
    if key not in doc:
        if required:
            raise ConfigError(where, key, "is required")
        return default
    v = doc[key]
    try:
        if kind is int:
            if isinstance(v, bool) or not isinstance(v, int):
                raise ValueError
            return v
        if kind == "angle":
            return parse_angle(v) if v is not None else None
        if isinstance(v, bool):
            raise ValueError
        return kind(v)
    except (TypeError, ValueError):
        raise ConfigError(where, key, f"invalid value {v!r}") from None


@dataclass(frozen=True)
class GenerateConfig:
    system: str
    turning_radius: float
    obstacle_count: int
    obstacle_size: float
    bounds: tuple[tuple[float, float], ...]
    seeds: tuple[int, ...]
    boundary_delta: float
    angular_delta: float | None

    def scenario_spec(self, seed: int) -> ScenarioSpec:
        return ScenarioSpec(
            SteeringSpec(self.system, self.turning_radius), self.obstacle_count,
            self.obstacle_size, self.bounds, seed, self.boundary_delta, self.angular_delta,
        )


def parse_generate_config(doc: dict, where: str = "config", seed: int | None = None) -> GenerateConfig:
    system = _get(doc, "system", where, str)
    if system not in SYSTEMS:
        raise ConfigError(where, "system", f"must be one of {', '.join(SYSTEMS)}")
    rho = _get(doc, "turning_radius", where, float, 1.0, required=False)
    if not rho > 0.0:
        raise ConfigError(where, "turning_radius", "must be positive")
    count = _get(doc, "obstacle_count", where, int)
    if count < 0:
        raise ConfigError(where, "obstacle_count", "must be nonnegative")
    size = _get(doc, "obstacle_size", where, float)
    if not size > 0.0:
        raise ConfigError(where, "obstacle_size", "must be positive")
    dim = 3 if system == "holonomic3d" else 2
    default_bounds = [[0.0, 30.0]] * dim
    raw = doc.get("bounds", default_bounds)
    try:
        bounds = tuple((float(lo), float(hi)) for lo, hi in raw)
    except (TypeError, ValueError):
        raise ConfigError(where, "bounds", "must be a list of [lo, hi] pairs") from None
    if len(bounds) != dim or any(not hi > lo for lo, hi in bounds):
        raise ConfigError(where, "bounds", f"must be {dim} increasing [lo, hi] pairs")
    if "seeds" in doc:
        seeds = doc["seeds"]
        if not isinstance(seeds, list) or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
            raise ConfigError(where, "seeds", "must be a list of integers")
        seeds = tuple(seeds)
        if seed is not None:
            seeds = tuple(seed + s for s in seeds)
    else:
        n = _get(doc, "seed_count", where, int)
        if n < 0:
            raise ConfigError(where, "seed_count", "must be nonnegative")
        first = _get(doc, "seed_start", where, int, 0, required=False)
        if seed is not None:
            first = seed
        seeds = tuple(range(first, first + n))
    delta = _get(doc, "boundary_delta", where, float, 0.25, required=False)
    if not delta > 0.0:
        raise ConfigError(where, "boundary_delta", "must be positive")
    ang = _get(doc, "angular_delta", where, "angle", None, required=False)
    if system == "dubins" and not (ang and ang > 0.0):
        raise ConfigError(where, "angular_delta", "must be positive for the Dubins car")
    return GenerateConfig(system, rho, count, size, bounds, seeds, delta, ang)


@dataclass(frozen=True)
class PlannerConfig:
    name: str
    planner: str
    grid_discr: float | None = None
    angular_discr: float | None = None
    connectivity: int | None = None
    prune_factor: float = 3.0
    max_iterations: int = 200_000

    @property
    def key(self) -> tuple:
        return config_key(self.planner, self.grid_discr, self.angular_discr, self.connectivity)


def config_key(planner, grid_discr, angular_discr, connectivity) -> tuple:
    def r(v):
        return None if v is None else round(float(v), 9)
    return (planner, r(grid_discr), r(angular_discr), None if connectivity is None else int(connectivity))


@dataclass(frozen=True)
class SweepConfig:
    planners: tuple[PlannerConfig, ...]
    reference: str | None


def parse_sweep_config(doc: dict, where: str = "sweep") -> SweepConfig:
    items = doc.get("planners")
    if not isinstance(items, list) or not items:
        raise ConfigError(where, "planners", "must be a nonempty list")
    budget = _get(doc, "max_iterations", where, int, 200_000, required=False)
    if budget < 1:
        raise ConfigError(where, "max_iterations", "must be at least 1")
    out = []
    names = set()
    for i, item in enumerate(items):
        w = f"{where}: planners[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(w, "entry", "must be an object")
        kind = _get(item, "planner", w, str)
        if kind not in PLANNERS:
            raise ConfigError(w, "planner", f"must be one of {', '.join(PLANNERS)}")
        ang = _get(item, "angular_discr", w, "angle", None, required=False)
        if ang is not None and not ang > 0.0:
            raise ConfigError(w, "angular_discr", "must be positive")
        if kind == "grid":
            g = _get(item, "grid_discr", w, float)
            if not g > 0.0:
                raise ConfigError(w, "grid_discr", "must be positive")
            c = _get(item, "connectivity", w, int)
            if c < 0:
                raise ConfigError(w, "connectivity", "must be nonnegative")
            prune = _get(item, "prune_factor", w, float, 3.0, required=False)
            if not prune > 1.0:
                raise ConfigError(w, "prune_factor", "must exceed 1")
        else:
            g = _get(item, "grid_discr", w, float, None, required=False)
            if g is not None and not g > 0.0:
                raise ConfigError(w, "grid_discr", "must be positive")
            c, prune = None, 3.0
        name = item.get("name") or format_key(config_key(kind, g, ang, c))
        if name in names:
            raise ConfigError(w, "name", f"duplicate name {name!r}")
        names.add(name)
        out.append(PlannerConfig(name, kind, g, ang, c, prune, budget))
    ref = doc.get("reference")
    if ref is not None and ref not in names:
        raise ConfigError(where, "reference", f"{ref!r} is not a planner name")
    return SweepConfig(tuple(out), ref)


def format_key(key: tuple) -> str:
    planner, g, a, c = key
    return ",".join([planner, _fmt(g), _fmt(a), "" if c is None else str(c)])


def parse_key(text: str) -> tuple:
    """Inverse of :func:`format_key`; angles may be written as ``pi/8``."""
    parts = text.split(",")
    if len(parts) != 4 or parts[0] not in PLANNERS:
        raise ValueError(f"reference must look like 'planner,grid_discr,angular_discr,connectivity', got {text!r}")
    planner, g, a, c = parts
    return config_key(planner, float(g) if g else None, parse_angle(a) if a else None, int(c) if c else None)


# -- metrics ---------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


@dataclass
class RunMetrics:
    scenario_id: str
    seed: int
    planner: str
    grid_discr: float | None
    angular_discr: float | None
    connectivity: int | None
    cost: float | None
    plan_time_ms: float | None
    nodes: int
    edges: int
    edge_checks: int
    iterations: int
    area_sensed: int
    status: str

    @property
    def key(self) -> tuple:
        return config_key(self.planner, self.grid_discr, self.angular_discr, self.connectivity)

    def to_row(self) -> list[str]:
        return [_fmt(getattr(self, f)) for f in CSV_HEADER]

    @classmethod
    def from_row(cls, row: dict) -> "RunMetrics":
        def opt(v, kind):
            return None if v in ("", None) else kind(v)
        return cls(
            row["scenario_id"], int(row["seed"]), row["planner"],
            opt(row["grid_discr"], float), opt(row["angular_discr"], float),
            opt(row["connectivity"], int), opt(row["cost"], float),
            opt(row["plan_time_ms"], float), int(row["nodes"]), int(row["edges"]),
            int(row["edge_checks"]), int(row["iterations"]), int(row["area_sensed"]),
            row["status"],
        )



def host_header() -> list[str]:
    return [
        f"# host: {platform.node() or 'unknown'} {platform.system()} {platform.machine()}",
        f"# python {platform.python_version()}, numpy {np.__version__}, cpus {os.cpu_count()}",
        "# plan_time_ms is wall clock around the plan call only and is host dependent",
    ]


def write_metrics(path, rows: list[RunMetrics], comments: list[str] | None = None) -> None:
    buf = io.StringIO()
    for line in comments or ():
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.to_row())
    FsPath(path).write_text(buf.getvalue())


def read_metrics(path) -> list[RunMetrics]:
    lines = [ln for ln in FsPath(path).read_text().splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ConfigError(str(path), "header", "does not match the metrics header")
    return [RunMetrics.from_row(r) for r in reader]


# -- generate ----------------------------------------------------------------


def scenario_filename(seed: int) -> str:
    return f"scenario_{seed:05d}.json"


def generate(cfg: GenerateConfig, out_dir) -> list[FsPath]:
    out_dir = FsPath(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for seed in cfg.seeds:
        sc = generate_scenario(cfg.scenario_spec(seed))
        sc.name = FsPath(scenario_filename(seed)).stem
        p = out_dir / scenario_filename(seed)
        p.write_text(sc.to_json())
        written.append(p)
    return written


def load_scenario(path) -> Scenario:
    doc = load_json(path)
    try:
        sc = Scenario.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(path), "scenario", str(exc)) from exc
    if not sc.name:
        sc.name = FsPath(path).stem
    return sc


# -- run ---------------------------------------------------------------------


def run_one(scenario: Scenario, cfg: PlannerConfig) -> tuple[PlanResult | None, str]:
    spec = scenario.spec
    ang = cfg.angular_discr if cfg.angular_discr is not None else spec.angular_delta
    try:
        if cfg.planner == "sparse":
            params = PlannerParams(
                delta=cfg.grid_discr or spec.boundary_delta,
                angular_delta=ang,
                max_iterations=cfg.max_iterations,
            )
            res = plan(scenario, params)
        else:
            gs = GridSpec(cfg.grid_discr, cfg.connectivity, ang, cfg.prune_factor)
            res = plan_grid(scenario, gs, cfg.max_iterations)
    except IterationBudgetExceeded as exc:
        return exc.result, BUDGET
    except (SnapError, ValueError, GenerationFailed):
        return None, ERROR
    return res, res.status


def metrics_for(scenario: Scenario, cfg: PlannerConfig, timing: bool = True) -> RunMetrics:
    spec = scenario.spec
    ang = cfg.angular_discr if cfg.angular_discr is not None else spec.angular_delta
    grid_discr = cfg.grid_discr
    if cfg.planner == "sparse" and grid_discr is None:
        grid_discr = spec.boundary_delta
    res, status = run_one(scenario, cfg)
    if res is None:
        vals = dict(cost=None, plan_time_ms=None, nodes=0, edges=0, edge_checks=0,
                    iterations=0, area_sensed=0)
    else:
        vals = dict(
            cost=res.cost if status == "solved" else None,
            plan_time_ms=res.plan_time_ms if timing else None,
            nodes=res.nodes, edges=res.edges, edge_checks=res.edge_checks,
            iterations=res.iterations, area_sensed=res.area_sensed,
        )
    return RunMetrics(
        scenario.name, spec.seed, cfg.planner, grid_discr,
        ang if spec.system.is_dubins else None,
        cfg.connectivity, status=status, **vals,
    )


def _run_scenario(args) -> list[RunMetrics]:
    path, planners, timing = args
    sc = load_scenario(path)
    return [metrics_for(sc, cfg, timing) for cfg in planners]


def run_sweep(scenario_dir, sweep: SweepConfig, jobs: int = 1, timing: bool = True) -> list[RunMetrics]:
    paths = sorted(FsPath(scenario_dir).glob("*.json"))
    if not paths:
        raise ConfigError(str(scenario_dir), "scenario_dir", "contains no scenario files")
    # load everything first so a bad file fails before any planning
    for p in paths:
        load_scenario(p)
    work = [(str(p), sweep.planners, timing) for p in paths]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_scenario, work))
    else:
        chunks = [_run_scenario(w) for w in work]
    order = {cfg.name: i for i, cfg in enumerate(sweep.planners)}
    rows = []
    for path, chunk in zip(paths, chunks):
        for cfg, row in zip(sweep.planners, chunk):
            rows.append((path.name, order[cfg.name], row))
    rows.sort(key=lambda t: (t[0], t[1]))
    return [r for _, _, r in rows]


# -- summarize ---------------------------------------------------------------


def _stats(values: list[float]) -> dict:
    if not values:
        return {"n": 0, "mean": None, "median": None, "p2_5": None, "p97_5": None}
    a = np.asarray(values, dtype=float)
    return {
        "n": int(a.size),
        "mean": float(a.mean()),
        "median": float(np.median(a)),
        "p2_5": float(np.percentile(a, 2.5)),
        "p97_5": float(np.percentile(a, 97.5)),
    }


def _ratio(x: float, ref: float) -> float | None:
    if ref == 0.0:
        return 1.0 if x == 0.0 else None
    return x / ref


def summarize(rows: list[RunMetrics], reference: tuple) -> dict:
    """Per-configuration cost and time ratios against ``reference`` on the same scenario."""
    by_scenario: dict[str, dict[tuple, RunMetrics]] = {}
    for r in rows:
        by_scenario.setdefault(r.scenario_id, {})[r.key] = r
    missing = sorted(s for s, d in by_scenario.items() if reference not in d)
    if missing:
        raise MissingReference(
            f"reference {format_key(reference)!r} missing for scenario(s): {', '.join(missing)}"
        )
    keys = []
    for r in rows:
        if r.key not in keys:
            keys.append(r.key)
    configs = []
    for key in keys:
        cost_r, time_r = [], []
        counts: dict[str, int] = {}
        raw = {f: [] for f in ("cost", "plan_time_ms", "nodes", "edges", "area_sensed")}
        for sid in sorted(by_scenario):
            r = by_scenario[sid].get(key)
            if r is None:
                continue
            counts[r.status] = counts.get(r.status, 0) + 1
            if r.status != "solved":
                continue
            for f in raw:
                v = getattr(r, f)
                if v is not None:
                    raw[f].append(v)
            ref = by_scenario[sid][reference]
            if ref.status == "solved":
                c = _ratio(r.cost, ref.cost)
                if c is not None:
                    cost_r.append(c)
                if r.plan_time_ms is not None and ref.plan_time_ms:
                    time_r.append(r.plan_time_ms / ref.plan_time_ms)
        configs.append({
            "config": format_key(key),
            "status_counts": dict(sorted(counts.items())),
            "normalized_cost": _stats(cost_r),
            "normalized_time": _stats(time_r),
            "mean": {f: (float(np.mean(v)) if v else None) for f, v in raw.items()},
        })
    return {"reference": format_key(reference), "scenarios": len(by_scenario), "configs": configs}


def plot_table(summary: dict) -> list[list[str]]:
    """Central-95% rectangle per configuration, as closed polygons in (time, cost)."""
    out = [["config", "vertex", "normalized_time", "normalized_cost"]]
    for c in summary["configs"]:
        t, k = c["normalized_time"], c["normalized_cost"]
        if not t["n"] or not k["n"]:
            continue
        corners = [(t["p2_5"], k["p2_5"]), (t["p97_5"], k["p2_5"]),
                   (t["p97_5"], k["p97_5"]), (t["p2_5"], k["p97_5"]), (t["p2_5"], k["p2_5"])]
        for i, (x, y) in enumerate(corners):
            out.append([c["config"], str(i), repr(x), repr(y)])
    return out


def write_summary(summary: dict, out_dir) -> tuple[FsPath, FsPath]:
    out_dir = FsPath(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    js = out_dir / "summary.json"
    js.write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(plot_table(summary))
    table = out_dir / "plot_data.csv"
    table.write_text(buf.getvalue())
    return js, table


def render_figure(summary: dict, path) -> FsPath:
    """Normalized time vs cost with the central-95% box of each configuration."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for c in summary["configs"]:
        t, k = c["normalized_time"], c["normalized_cost"]
        if not t["n"] or not k["n"]:
            continue
        style = "-" if c["config"].startswith("sparse") else "--"
        xs = [t["p2_5"], t["p97_5"], t["p97_5"], t["p2_5"], t["p2_5"]]
        ys = [k["p2_5"], k["p2_5"], k["p97_5"], k["p97_5"], k["p2_5"]]
        line, = ax.plot(xs, ys, style, lw=1.2)
        ax.plot([t["median"]], [k["median"]], "o", color=line.get_color(), label=c["config"])
    ax.set_xscale("log")
    ax.set_xlabel("normalized plan time")
    ax.set_ylabel("normalized cost")
    ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    path = FsPath(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


# -- oracle check --------------------------------------------------------------


def oracle_check(system: str, count: int, obstacles: int, seed: int = 0,
                 delta: float = 0.25, angular_delta: float | None = None,
                 size: float = 2.0, tol: float = 1e-6) -> dict:
    """Sparse planner vs the complete-graph optimum on small scenarios."""
    from .oracle import complete_graph_cost

    if system == "dubins" and angular_delta is None:
        angular_delta = math.pi / 4
    dim = 3 if system == "holonomic3d" else 2
    bounds = ((0.0, 30.0),) * dim
    worst = 0.0
    mismatched = []
    solved = infeasible = 0
    t0 = time.perf_counter()
    for s in range(seed, seed + count):
        spec = ScenarioSpec(SteeringSpec(system), obstacles, size, bounds, s, delta,
                            angular_delta if system == "dubins" else None)
        sc = generate_scenario(spec)
        res = plan(sc, PlannerParams(delta=delta, angular_delta=spec.angular_delta))
        ref = complete_graph_cost(sc, delta, spec.angular_delta)
        if ref is None:
            infeasible += 1
            if res.solved:
                mismatched.append(s)
            continue
        solved += 1
        gap = abs(res.cost - ref) if res.solved else math.inf
        worst = max(worst, gap)
        if not gap <= tol:
            mismatched.append(s)
    return {
        "system": system, "scenarios": count, "solved": solved, "infeasible": infeasible,
        "max_discrepancy": worst, "mismatched_seeds": mismatched,
        "seconds": round(time.perf_counter() - t0, 3),
    }


__all__ = [
    "CSV_HEADER", "ConfigError", "MissingReference", "RunMetrics", "PlannerConfig", "SweepConfig",
    "GenerateConfig", "parse_generate_config", "parse_sweep_config", "parse_angle", "parse_key",
    "format_key", "config_key", "generate", "load_scenario", "run_sweep", "metrics_for",
    "read_metrics", "write_metrics", "summarize", "plot_table", "write_summary", "render_figure",
    "oracle_check", "host_header",
]
