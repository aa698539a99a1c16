"""``sparseplan`` command line: generate, run, summarize, oracle-check."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import bench


def _generate(args) -> int:
    doc = bench.load_json(args.config)
    cfg = bench.parse_generate_config(doc, str(args.config), args.seed)
    paths = bench.generate(cfg, args.out)
    print(f"wrote {len(paths)} scenario(s) to {args.out}")
    return 0


def _run(args) -> int:
    sweep = bench.parse_sweep_config(bench.load_json(args.sweep), str(args.sweep))
    if args.jobs < 1:
        raise bench.ConfigError("--jobs", "jobs", "must be at least 1")
    rows = bench.run_sweep(args.scenario_dir, sweep, jobs=args.jobs, timing=not args.no_timing)
    comments = bench.host_header()
    if sweep.reference is not None:
        ref = next(c for c in sweep.planners if c.name == sweep.reference)
        comments.append(f"# reference: {bench.format_key(ref.key)}")
    bench.write_metrics(args.out, rows, comments)
    bad = sum(r.status == bench.ERROR for r in rows)
    print(f"wrote {len(rows)} row(s) to {args.out}" + (f" ({bad} errored)" if bad else ""))
    return 0


def _reference_from_csv(path) -> str | None:
    for line in Path(path).read_text().splitlines():
        if not line.startswith("#"):
            break
        if line.startswith("# reference: "):
            return line[len("# reference: "):].strip()
    return None


def _summarize(args) -> int:
    rows = bench.read_metrics(args.csv)
    ref_text = args.reference or _reference_from_csv(args.csv)
    if not ref_text:
        raise bench.ConfigError("--reference", "reference", "is required (no reference recorded in the CSV)")
    try:
        ref = bench.parse_key(ref_text)
    except ValueError as exc:
        raise bench.ConfigError("--reference", "reference", str(exc)) from None
    summary = bench.summarize(rows, ref)
    js, table = bench.write_summary(summary, args.out)
    print(f"wrote {js} and {table}")
    if args.figure:
        fig = bench.render_figure(summary, Path(args.out) / "summary.png")
        print(f"wrote {fig}")
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["config", "n", "cost_mean", "cost_median", "cost_p2_5", "cost_p97_5", "time_median"])
    for c in summary["configs"]:
        k, t = c["normalized_cost"], c["normalized_time"]
        w.writerow([c["config"], k["n"], *(_short(k[f]) for f in ("mean", "median", "p2_5", "p97_5")),
                    _short(t["median"])])
    return 0


def _short(v) -> str:
    return "" if v is None else f"{v:.4f}"


def _oracle_check(args) -> int:
    ang = bench.parse_angle(args.angular_delta) if args.angular_delta else None
    report = bench.oracle_check(
        args.system, args.count, args.obstacles, args.seed, args.delta, ang, args.size, args.tol,
    )
    print(json.dumps(report, sort_keys=True))
    return 0 if not report["mismatched_seeds"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparseplan", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write one scenario JSON file per seed")
    g.add_argument("config", type=Path)
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--seed", type=int, default=None, help="first seed (overrides seed_start)")
    g.set_defaults(func=_generate)

    r = sub.add_parser("run", help="run a planner sweep over a scenario directory")
    r.add_argument("scenario_dir", type=Path)
    r.add_argument("sweep", type=Path)
    r.add_argument("--out", type=Path, required=True)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--no-timing", action="store_true",
                   help="leave plan_time_ms empty so output is byte-reproducible")
    r.set_defaults(func=_run)

    s = sub.add_parser("summarize", help="normalize a metrics CSV against a reference config")
    s.add_argument("csv", type=Path)
    s.add_argument("--reference", default=None,
                   help="planner,grid_discr,angular_discr,connectivity (e.g. 'sparse,2.0,pi/8,')")
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--figure", action="store_true", help="also render summary.png")
    s.set_defaults(func=_summarize)

    o = sub.add_parser("oracle-check", help="compare the sparse planner with the complete-graph optimum")
    o.add_argument("--system", choices=("holonomic2d", "holonomic3d", "dubins"), default="holonomic2d")
    o.add_argument("--count", type=int, default=10)
    o.add_argument("--obstacles", type=int, default=10)
    o.add_argument("--size", type=float, default=2.0)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--delta", type=float, default=0.25)
    o.add_argument("--angular-delta", default=None)
    o.add_argument("--tol", type=float, default=1e-6)
    o.set_defaults(func=_oracle_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (bench.ConfigError, bench.MissingReference) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
