"""Command-line entry point.

Exit status: 0 on success, 1 when a config or the command line fails
validation, 2 when a pipeline stage fails at run time.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from dataclasses import fields, replace
from importlib import resources
from pathlib import Path

from . import export
from .config import STRATEGIES, format_config, validate_config
from .engine import algorithm_by_name, emit_traces
from .errors import ConfigError, NocGraphError
from .experiment import pick_source, run_experiment
from .graph import generate_power_law_graph, load_edge_list, write_edge_list
from .noc import NoCParams, compare, replay
from .partition import capacities_from_bytes, class_load_profile, edge_imbalance, partition
from .placement import (
    CONSTRAINT_MODES,
    COST_MODES,
    TOPOLOGIES,
    GridSpec,
    build_topology_graph,
    random_placement,
    solve_placement_exact,
    solve_placement_heuristic,
)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("nocgraph")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


class _Invalid(Exception):
    pass


def demo_config_path():
    return resources.files("nocgraph") / "configs" / "demo.ini"


def _config_path(arg):
    return Path(str(demo_config_path())) if arg == "demo" else Path(arg)


def _key_values(text):
    out = {}
    for part in text.split(","):
        if not part.strip():
            continue
        if "=" not in part:
            raise _Invalid(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _grid(text, topology, cost_mode):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
        return GridSpec(w, h, topology, cost_mode)
    except ValueError as exc:
        raise _Invalid(f"bad grid {text!r}: expected WIDTHxHEIGHT ({exc})") from None


def _noc_params(arg):
    if arg in ("default", "-"):
        return NoCParams()
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(arg) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise _Invalid(f"cannot read NoC parameters from {arg}: {exc}") from None
    defaults = NoCParams()
    values = {}
    section = "noc" if parser.has_section("noc") else None
    if section is None:
        raise _Invalid(f"{arg} has no [noc] section")
    for f in fields(NoCParams):
        if parser.has_option(section, f.name):
            values[f.name] = type(getattr(defaults, f.name))(parser.get(section, f.name))
    try:
        return NoCParams(**values)
    except ValueError as exc:
        raise _Invalid(str(exc)) from None


# -- verbs ------------------------------------------------------------------

def cmd_run(args):
    check = validate_config(_config_path(args.config))
    if not check.ok:
        for v in check.violations:
            print(f"invalid: {v}", file=sys.stderr)
        return EXIT_INVALID
    cfg = check.config
    overrides = {}
    if args.topology:
        overrides["topologies"] = (args.topology,)
    if args.cost_mode:
        overrides["cost_mode"] = args.cost_mode
    if args.strategy:
        overrides["strategies"] = tuple(args.strategy)
    if args.seed is not None:
        overrides["heuristic_seed"] = args.seed
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    cfg = replace(cfg, **overrides)
    result = run_experiment(cfg, args.output_dir)
    print(f"wrote {result.output_dir}")
    print(f"{'algorithm':<10} {'topology':<16} {'strategy':<10} {'avg_hop':>8} {'speedup':>8} "
          f"{'energy':>8} {'hop_red':>8}")
    for r in result.table.rows:
        print(f"{r.algorithm:<10} {r.topology:<16} {r.strategy:<10} {r.avg_hop:8.3f} {r.speedup:8.3f} "
              f"{r.energy_ratio:8.3f} {r.hop_reduction:8.3f}")
    return EXIT_OK


def cmd_validate(args):
    check = validate_config(_config_path(args.config))
    if not check.ok:
        for v in check.violations:
            print(f"invalid: {v}")
        return EXIT_INVALID
    sys.stdout.write(format_config(check.config))
    return EXIT_OK


def cmd_gen_graph(args):
    params = _key_values(args.params)
    known = {"num_vertices", "avg_degree", "skew", "max_weight"}
    unknown = set(params) - known
    if unknown:
        raise _Invalid(f"unknown generator parameters {sorted(unknown)}; use {sorted(known)}")
    try:
        g = generate_power_law_graph(int(params.get("num_vertices", 1 << 14)), float(params.get("avg_degree", 8)),
                                     float(params.get("skew", 1.5)), args.seed,
                                     max_weight=int(params.get("max_weight", 1)))
    except ValueError as exc:
        raise _Invalid(str(exc)) from None
    write_edge_list(g, args.out)
    print(f"wrote {args.out}: {g.num_vertices} vertices, {g.num_edges} edges")
    return EXIT_OK


def _partition_args(args):
    cap_e, cap_v = capacities_from_bytes(args.capacity_bytes)
    return dict(capacity_edges=cap_e, capacity_vertices=cap_v, cyclic=args.cyclic)


def cmd_partition(args):
    g = load_edge_list(args.graph, weighted=args.weighted, densify=args.densify)
    pmap = partition(g, args.K, **_partition_args(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export.write_partition_csv(pmap, out / "shards.csv", out / "membership.csv")
    export.write_topology_json(build_topology_graph(pmap), out / "topology.json")
    profile = class_load_profile(pmap)
    print(f"wrote {out}: {pmap.num_shards} shards, edge imbalance {edge_imbalance(profile):.3f}")
    return EXIT_OK


def cmd_trace(args):
    g = load_edge_list(args.graph, weighted=args.weighted, densify=args.densify)
    pmap = partition(g, args.K, **_partition_args(args))
    spec = algorithm_by_name(args.algorithm)
    source = pick_source(g, args.source)
    trace, stats = emit_traces(g, spec, source if spec.requires_source else None, pmap)
    export.write_trace_csv(trace, args.out)
    print(f"wrote {args.out}: {len(trace)} records over {stats.iterations} iterations")
    return EXIT_OK


def cmd_place(args):
    tg = export.read_topology_json(args.topology_file)
    grid = _grid(args.grid, args.topology or "mesh", args.cost_mode or "paper")
    seed = args.seed if args.seed is not None else 0
    if args.strategy == "exact":
        p = solve_placement_exact(tg, grid, constraints=args.constraints)
    elif args.strategy == "heuristic":
        p = solve_placement_heuristic(tg, grid, seed=seed, budget=args.budget, constraints=args.constraints)
    else:
        p = random_placement(tg, grid, seed=seed)
    export.write_placement_csv(p, args.out, grid, {"constraints": args.constraints, "seed": seed})
    print(f"wrote {args.out}: objective {p.objective:g}")
    return EXIT_OK


def cmd_replay(args):
    trace = export.read_trace_csv(args.trace)
    placement, grid = export.read_placement_csv(args.placement)
    if grid is None and not args.grid:
        raise _Invalid("placement has no grid sidecar; pass --grid WxH")
    if args.grid:
        grid = _grid(args.grid, grid.topology if grid else "mesh", grid.cost_mode if grid else "paper")
    if args.topology or args.cost_mode:
        grid = replace(grid, topology=args.topology or grid.topology, cost_mode=args.cost_mode or grid.cost_mode)
    report = replay(trace, placement, grid, _noc_params(args.params))
    out = str(args.out)
    export.write_report_csv(report, out + ".summary.csv", out + ".per_iteration.csv")
    print(f"wrote {out}.summary.csv: avg hop {report.avg_hop_count:.4f}, "
          f"parallel latency {report.parallel_latency * export.NS:.1f} ns")
    return EXIT_OK


def cmd_compare(args):
    a = export.read_report_summary(args.report_a)
    b = export.read_report_summary(args.report_b)
    c = compare(a, b)
    print("speedup,energy_ratio,hop_reduction")
    print(f"{c.speedup!r},{c.energy_ratio!r},{c.hop_reduction!r}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser():
    p = _Parser(prog="nocgraph", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log pipeline progress")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def common(sp, *names):
        if "seed" in names:
            sp.add_argument("--seed", type=int, help="RNG seed")
        if "topology" in names:
            sp.add_argument("--topology", choices=TOPOLOGIES)
            sp.add_argument("--cost-mode", choices=COST_MODES)

    def graph_flags(sp):
        sp.add_argument("--weighted", action="store_true", help="read a third weight column")
        sp.add_argument("--densify", action="store_true", help="renumber vertex ids to 0..n-1")
        sp.add_argument("--capacity-bytes", type=int, default=1 << 20, help="per-engine capacity (default 1 MiB)")
        sp.add_argument("--cyclic", choices=("position", "vertex_id"), default="position")

    sp = sub.add_parser("run", help="run an experiment config ('demo' for the bundled one)")
    sp.add_argument("config")
    sp.add_argument("--output-dir")
    sp.add_argument("--strategy", choices=STRATEGIES, action="append",
                    help="placement strategy (repeatable; random is always included)")
    sp.add_argument("--jobs", type=int)
    common(sp, "seed", "topology")
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("validate", help="check a config and echo it canonically")
    sp.add_argument("config")
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("gen-graph", help="write a synthetic power-law edge list")
    sp.add_argument("params", help="e.g. num_vertices=16384,avg_degree=8,skew=1.5")
    sp.add_argument("out")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_gen_graph)

    sp = sub.add_parser("partition", help="partition an edge list into K classes")
    sp.add_argument("graph")
    sp.add_argument("K", type=int)
    sp.add_argument("out", help="output directory")
    graph_flags(sp)
    sp.set_defaults(fn=cmd_partition)

    sp = sub.add_parser("trace", help="run an algorithm and write its shard traffic trace")
    sp.add_argument("graph")
    sp.add_argument("K", type=int)
    sp.add_argument("algorithm", choices=("bfs", "sssp", "pagerank"))
    sp.add_argument("out")
    sp.add_argument("--source", type=int, help="source vertex (default: highest out-degree)")
    graph_flags(sp)
    sp.set_defaults(fn=cmd_trace)

    sp = sub.add_parser("place", help="place a topology graph on a grid")
    sp.add_argument("topology_file")
    sp.add_argument("grid", help="WIDTHxHEIGHT")
    sp.add_argument("strategy", choices=STRATEGIES)
    sp.add_argument("out")
    sp.add_argument("--budget", type=int, default=50_000)
    sp.add_argument("--constraints", choices=CONSTRAINT_MODES, default="banded")
    common(sp, "seed", "topology")
    sp.set_defaults(fn=cmd_place)

    sp = sub.add_parser("replay", help="replay a trace over a placement")
    sp.add_argument("trace")
    sp.add_argument("placement")
    sp.add_argument("params", help="INI file with a [noc] section, or 'default'")
    sp.add_argument("out", help="output prefix")
    sp.add_argument("--grid", help="WIDTHxHEIGHT when the placement has no sidecar")
    common(sp, "topology")
    sp.set_defaults(fn=cmd_replay)

    sp = sub.add_parser("compare", help="compare an optimized report against a baseline")
    sp.add_argument("report_a", help="optimized summary CSV")
    sp.add_argument("report_b", help="baseline summary CSV")
    sp.set_defaults(fn=cmd_compare)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (_Invalid, ConfigError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NocGraphError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
