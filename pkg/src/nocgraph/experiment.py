"""End-to-end pipeline: load -> partition -> execute -> place -> replay -> compare.

:func:`run_experiment` writes every artifact into a scratch directory next to
the requested output directory and moves it into place only when all stages
succeed, so a failed run leaves nothing behind.
"""

from __future__ import annotations

import logging
import os
import shutil
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import export, plots
from .config import format_config
from .engine import PHASES, algorithm_by_name, emit_traces, normalized_data_movement
from .errors import NocGraphError, PipelineError
from .graph import (
    coverage_at,
    degree_histogram,
    edge_coverage_curve,
    fit_power_law,
    generate_power_law_graph,
    load_edge_list,
)
from .noc import compare, mean_report, replay
from .partition import class_load_profile, edge_imbalance, partition
from .placement import (
    PAPER_LITERAL,
    GridSpec,
    build_topology_graph,
    random_placement,
    solve_placement_exact,
    solve_placement_heuristic,
)

log = logging.getLogger(__name__)

TABLE_HEADER = ["graph", "algorithm", "topology", "strategy", "avg_hop", "serial_latency_ns",
                "parallel_latency_ns", "energy_pj", "total_hop_packets", "speedup", "energy_ratio",
                "hop_reduction", "report", "baseline_report"]
STRATEGY_ORDER = ("exact", "heuristic", "random")
DISPLAY = {"bfs": "BFS", "sssp": "SSSP", "pagerank": "PageRank"}


@dataclass(frozen=True)
class ComparisonRow:
    graph: str
    algorithm: str
    topology: str
    strategy: str
    avg_hop: float
    serial_latency: float
    parallel_latency: float
    energy: float
    total_hop_packets: float
    speedup: float
    energy_ratio: float
    hop_reduction: float
    report: str
    baseline_report: str

    def as_csv(self):
        return [self.graph, self.algorithm, self.topology, self.strategy, self.avg_hop,
                self.serial_latency * export.NS, self.parallel_latency * export.NS, self.energy * export.PJ,
                self.total_hop_packets, self.speedup, self.energy_ratio, self.hop_reduction,
                self.report, self.baseline_report]

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class ComparisonTable:
    rows: list = field(default_factory=list)

    def groups(self):
        out = {}
        for r in self.rows:
            out.setdefault((r.graph, r.algorithm, r.topology), []).append(r)
        return out

    def row(self, algorithm, topology, strategy):
        for r in self.rows:
            if (r.algorithm, r.topology, r.strategy) == (algorithm, topology, strategy):
                return r
        raise KeyError((algorithm, topology, strategy))

    def missing_baselines(self):
        return [k for k, rows in self.groups().items() if not any(r.strategy == "random" for r in rows)]

    def geomean_summary(self):
        """Geometric-mean speedup and energy ratio across algorithms, per (topology, strategy)."""
        buckets = {}
        for r in self.rows:
            if r.strategy != "random":
                buckets.setdefault((r.topology, r.strategy), []).append(r)
        out = []
        for (topo, strategy), rows in buckets.items():
            out.append([topo, strategy, len(rows),
                        statistics.geometric_mean([r.speedup for r in rows]),
                        statistics.geometric_mean([r.energy_ratio for r in rows]),
                        statistics.fmean([r.hop_reduction for r in rows])])
        return out


@dataclass
class ExperimentResult:
    table: ComparisonTable
    output_dir: Path
    movement: dict
    reports: dict
    traces: dict
    stats: dict
    placements: dict
    graph: object
    pmap: object


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except (NocGraphError, ValueError, OSError) as exc:
        raise PipelineError(name, exc) from exc


def topology_label(topology, cost_mode):
    return topology if topology == "mesh" else f"{topology}-{cost_mode}"


def strategies_for(cfg):
    chosen = set(cfg.strategies) | {"random"}
    return [s for s in STRATEGY_ORDER if s in chosen]


def load_graph(cfg):
    if cfg.graph_path is not None:
        return load_edge_list(cfg.graph_path, weighted=cfg.weighted, densify=cfg.densify)
    return generate_power_law_graph(cfg.num_vertices, cfg.avg_degree, cfg.skew, cfg.graph_seed,
                                    max_weight=cfg.max_weight)


def pick_source(g, source=None):
    """``source`` if given, else the highest out-degree vertex (lowest id on ties)."""
    if source is not None:
        return source
    return int(np.argmax(g.out_degree)) if g.num_vertices else 0


def _write_graph_artifacts(g, out):
    d = out / "graph"
    d.mkdir()
    hist = degree_histogram(g, "out")
    export.write_rows_csv(d / "degree_histogram.csv", ["degree", "count"], hist.items())
    try:
        fit = fit_power_law(hist)
    except NocGraphError:
        fit = None
    coverage = coverage_at(edge_coverage_curve(g), 0.10) if g.num_edges else 0.0
    export.write_rows_csv(d / "summary.csv", ["vertices", "edges", "alpha", "r_squared", "top10_edge_share"],
                          [[g.num_vertices, g.num_edges, fit.alpha if fit else "", fit.r_squared if fit else "",
                            coverage]])
    return hist, fit


def _write_partition_artifacts(pmap, tg, out):
    d = out / "partition"
    d.mkdir()
    export.write_partition_csv(pmap, d / "shards.csv", d / "membership.csv")
    export.write_rows_csv(d / "class_load.csv", ["class", "edges", "vertices"],
                          [[c.cls, c.edges, c.vertices] for c in class_load_profile(pmap)])
    if tg is not None:
        export.write_topology_json(tg, d / "topology.json")


def _write_stats(stats, path):
    rows = []
    for i in range(stats.iterations):
        b = stats.phase_bytes[i]
        rows.append([i + 1, stats.frontier_sizes[i], stats.processed_edges[i], stats.reduced_edges[i],
                     stats.updated_vertices[i], b["Process"], b["Reduce"], b["Apply"]])
    export.write_rows_csv(path, ["iteration", "frontier", "processed_edges", "reduced_edges",
                                 "updated_vertices", "process_bytes", "reduce_bytes", "apply_bytes"], rows)


def _place(strategy, tg, grid, cfg, seed=None):
    if strategy == "exact":
        return solve_placement_exact(tg, grid, constraints=cfg.constraints)
    if strategy == "heuristic":
        return solve_placement_heuristic(tg, grid, seed=cfg.heuristic_seed, budget=cfg.budget,
                                         constraints=cfg.constraints)
    return random_placement(tg, grid, seed=seed)


def _map(jobs, fn, items):
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _execute_pipeline(cfg, out):
    (out / "config.ini").write_text(format_config(cfg))
    log.info("loading graph")
    g = _stage("load", load_graph, cfg)
    hist, fit = _stage("analyze", _write_graph_artifacts, g, out)
    source = pick_source(g, cfg.source)

    log.info("partitioning %d vertices / %d edges into %d classes", g.num_vertices, g.num_edges, cfg.clusters)
    pmap = _stage("partition", partition, g, cfg.clusters, cfg.capacity_edges, cfg.capacity_vertices, cfg.cyclic)
    literal_tg = _stage("topology", build_topology_graph, pmap, PAPER_LITERAL)
    _write_partition_artifacts(pmap, literal_tg, out)

    traces, stats, movement = {}, {}, {}
    (out / "traces").mkdir()
    for name in cfg.algorithms:
        log.info("executing %s", name)
        spec = _stage("execute", algorithm_by_name, name, cfg.damping, cfg.epsilon, cfg.max_iterations)
        src = source if spec.requires_source else None
        trace, st = _stage("execute", emit_traces, g, spec, src, pmap, reduce_all=cfg.reduce_all)
        traces[name], stats[name] = trace, st
        movement[DISPLAY[name]] = normalized_data_movement(trace, g)
        export.write_trace_csv(trace, out / "traces" / f"{name}.csv")
        _write_stats(st, out / "traces" / f"{name}_iterations.csv")
    export.write_rows_csv(out / "movement.csv", ["algorithm"] + list(PHASES),
                          [[a] + [m[p] for p in PHASES] for a, m in movement.items()])

    (out / "placements").mkdir()
    (out / "reports").mkdir()
    table = ComparisonTable()
    reports, placements = {}, {}
    strategies = strategies_for(cfg)
    for topology in cfg.topologies:
        grid = GridSpec(cfg.width, cfg.height, topology, cfg.cost_mode)
        label = topology_label(topology, cfg.cost_mode)
        random_cache = {}
        for name in cfg.algorithms:
            if cfg.affinity == PAPER_LITERAL:
                tg, tag = literal_tg, label
            else:
                tg = _stage("topology", build_topology_graph, pmap, cfg.affinity, traces[name])
                tag = f"{label}_{name}"
            by_strategy = {}
            for strategy in strategies:
                if strategy == "random":
                    continue
                key = (tag, strategy)
                if key not in placements:
                    log.info("placing %s (%s)", tag, strategy)
                    p = _stage("place", _place, strategy, tg, grid, cfg)
                    placements[key] = p
                    export.write_placement_csv(p, out / "placements" / f"{tag}_{strategy}.csv", grid,
                                               {"affinity": cfg.affinity, "constraints": cfg.constraints,
                                                "budget": cfg.budget, "seed": cfg.heuristic_seed})
                by_strategy[strategy] = placements[key]
            if not random_cache:
                for seed in cfg.seeds:
                    p = _stage("place", random_placement, literal_tg, grid, seed)
                    random_cache[seed] = p
                    placements[(label, f"random_seed{seed}")] = p
                    export.write_placement_csv(p, out / "placements" / f"{label}_random_seed{seed}.csv", grid,
                                               {"seed": seed})

            log.info("replaying %s on %s", name, label)
            trace = traces[name]
            seed_reports = _stage("replay", _map, cfg.jobs, lambda s: replay(trace, random_cache[s], grid, cfg.noc),
                                  list(cfg.seeds))
            baseline = mean_report(seed_reports)
            base_file = f"reports/{name}_{label}_random_mean.summary.csv"
            export.write_report_csv(baseline, out / base_file,
                                    out / f"reports/{name}_{label}_random_mean.per_iteration.csv")
            export.write_rows_csv(out / f"reports/{name}_{label}_random_seeds.csv",
                                  ["seed"] + export.SUMMARY_HEADER,
                                  [[s, r.total_packets, r.total_hop_packets, r.avg_hop_count,
                                    r.serial_latency * export.NS, r.parallel_latency * export.NS,
                                    r.energy * export.PJ] for s, r in zip(cfg.seeds, seed_reports)])
            reports[(name, label, "random")] = baseline

            for strategy in strategies:
                if strategy == "random":
                    report, rep_file = baseline, base_file
                else:
                    report = _stage("replay", replay, trace, by_strategy[strategy], grid, cfg.noc)
                    rep_file = f"reports/{name}_{label}_{strategy}.summary.csv"
                    export.write_report_csv(report, out / rep_file,
                                            out / f"reports/{name}_{label}_{strategy}.per_iteration.csv")
                    reports[(name, label, strategy)] = report
                cmp = _stage("compare", compare, report, baseline)
                table.rows.append(ComparisonRow(
                    cfg.graph_name, DISPLAY[name], label, strategy, report.avg_hop_count, report.serial_latency,
                    report.parallel_latency, report.energy, report.total_hop_packets, cmp.speedup,
                    cmp.energy_ratio, cmp.hop_reduction, rep_file, base_file))

    missing = table.missing_baselines()
    if missing:
        raise PipelineError("compare", NocGraphError(f"groups without a random baseline: {missing}"))
    export.write_rows_csv(out / "comparison.csv", TABLE_HEADER, [r.as_csv() for r in table.rows])
    export.write_rows_csv(out / "summary.csv", ["topology", "strategy", "algorithms", "geomean_speedup",
                                                "geomean_energy_ratio", "mean_hop_reduction"],
                          table.geomean_summary())

    log.info("rendering figures")
    figs = out / "figures"
    figs.mkdir()
    chart_rows = [r.as_dict() for r in table.rows]
    _stage("report", plots.hop_count_chart, chart_rows, figs / "hop_count.svg")
    _stage("report", plots.speedup_energy_chart, chart_rows, figs / "speedup_energy.svg")
    _stage("report", plots.data_movement_chart, movement, figs / "data_movement.svg")
    _stage("report", plots.degree_chart, hist, fit, figs / "degree.svg")

    return ExperimentResult(table, out, movement, reports, traces, stats, placements, g, pmap)


def run_experiment(cfg, output_dir=None):
    """Run the whole pipeline for ``cfg``; returns an :class:`ExperimentResult`.

    Errors surface as :class:`PipelineError` naming the failed stage. Output
    goes to ``output_dir`` (default ``cfg.output_dir``), which is replaced as a
    whole on success and left untouched on failure.
    """
    final = Path(output_dir if output_dir is not None else cfg.output_dir).resolve()
    final.parent.mkdir(parents=True, exist_ok=True)
    scratch = final.parent / f".{final.name}.partial-{os.getpid()}"
    if scratch.exists():
        shutil.rmtree(scratch)
    scratch.mkdir()
    try:
        result = _execute_pipeline(cfg, scratch)
    except BaseException:
        shutil.rmtree(scratch, ignore_errors=True)
        raise
    if final.exists():
        shutil.rmtree(final)
    scratch.rename(final)
    result.output_dir = final
    return result
