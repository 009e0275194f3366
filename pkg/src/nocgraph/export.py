"""CSV and JSON artifacts: traces, partitions, topology graphs, placements, reports.

Times are written in nanoseconds and energies in picojoules. Floats use
``repr`` so a value read back is the value written.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .engine import PHASES, TrafficTrace
from .errors import NocGraphError
from .noc import SimReport, Tally
from .placement import GridSpec, Placement, TopoNode, TopologyGraph

NS = 1e9
PJ = 1e12

TRACE_HEADER = ["iteration", "phase", "src_shard", "dst_shard", "bytes"]
SHARD_HEADER = ["shard_id", "kind", "rank", "class", "size", "capacity"]
MEMBER_HEADER = ["item_id", "kind", "shard_id"]
PLACEMENT_HEADER = ["shard_id", "index", "rank", "x", "y"]
SUMMARY_HEADER = ["total_packets", "total_hop_packets", "avg_hop_count", "serial_latency_ns",
                  "parallel_latency_ns", "energy_pj"]
PER_ITERATION_HEADER = ["iteration", "phase", "packets", "hop_packets", "serial_latency_ns",
                        "parallel_latency_ns", "energy_pj"]


def _num(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _writer(path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _rows(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got != header:
            raise NocGraphError(f"{path}: expected header {','.join(header)}, found {got}")
        return [row for row in reader if row]


# -- traces -----------------------------------------------------------------

def write_trace_csv(trace, path):
    fh, w = _writer(path)
    with fh:
        w.writerow(TRACE_HEADER)
        for it, phase, s, d, b in trace.messages():
            w.writerow([it, phase, s, d, b])


def read_trace_csv(path, word_bytes=8):
    rows = _rows(path, TRACE_HEADER)
    if not rows:
        return TrafficTrace.empty(word_bytes)
    phase_index = {p: i for i, p in enumerate(PHASES)}
    cols = list(zip(*rows))
    try:
        phases = [phase_index[p] for p in cols[1]]
    except KeyError as exc:
        raise NocGraphError(f"{path}: unknown phase {exc}") from None
    as_int = lambda c: np.array([int(v) for v in c], dtype=np.int64)  # noqa: E731
    return TrafficTrace(as_int(cols[0]), np.array(phases, dtype=np.int64), as_int(cols[2]),
                        as_int(cols[3]), as_int(cols[4]), word_bytes)


# -- partitions and topology graphs -----------------------------------------

def write_partition_csv(pmap, shards_path, membership_path):
    fh, w = _writer(shards_path)
    with fh:
        w.writerow(SHARD_HEADER)
        for s in pmap.shards:
            w.writerow([s.id, s.kind, s.rank, s.cls, s.size, s.capacity])
    fh, w = _writer(membership_path)
    with fh:
        w.writerow(MEMBER_HEADER)
        for s in pmap.shards:
            for item in s.contents.tolist():
                w.writerow([item, s.kind, s.id])


def write_topology_json(tg, path):
    doc = {
        "mode": tg.mode,
        "nodes": [{"shard_id": n.shard_id, "index": n.index, "rank": n.rank} for n in tg.nodes],
        "edges": [[i, j, w] for i, j, w in tg.edges()],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def read_topology_json(path):
    try:
        doc = json.loads(Path(path).read_text())
        nodes = [TopoNode(int(n["shard_id"]), int(n["index"]), int(n["rank"])) for n in doc["nodes"]]
        w = np.zeros((len(nodes), len(nodes)))
        for i, j, f in doc["edges"]:
            w[i, j] = w[j, i] = float(f)
        return TopologyGraph(nodes, w, doc.get("mode", "paper_literal"))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise NocGraphError(f"{path}: bad topology file ({exc})") from None


# -- placements -------------------------------------------------------------

def write_placement_csv(p, path, grid, extra=None):
    """Placement table plus a ``.json`` sidecar with the grid, objective and solver metadata."""
    path = Path(path)
    fh, w = _writer(path)
    with fh:
        w.writerow(PLACEMENT_HEADER)
        for n, (x, y) in zip(p.nodes, p.coords):
            w.writerow([n.shard_id, n.index, n.rank, x, y])
    meta = {
        "strategy": p.strategy,
        "objective": p.objective,
        "grid": {"width": grid.width, "height": grid.height, "topology": grid.topology,
                 "cost_mode": grid.cost_mode},
    }
    meta.update(extra or {})
    sidecar(path).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def sidecar(path):
    return Path(path).with_suffix(".json")


def read_placement_csv(path):
    """``(Placement, GridSpec)``; the grid comes from the sidecar when present."""
    rows = _rows(path, PLACEMENT_HEADER)
    nodes = tuple(TopoNode(int(r[0]), int(r[1]), int(r[2])) for r in rows)
    coords = tuple((int(r[3]), int(r[4])) for r in rows)
    meta = {}
    if sidecar(path).exists():
        meta = json.loads(sidecar(path).read_text())
    g = meta.get("grid")
    grid = None
    if g:
        grid = GridSpec(g["width"], g["height"], g.get("topology", "mesh"), g.get("cost_mode", "paper"))
    return Placement(nodes, coords, float(meta.get("objective", 0.0)), meta.get("strategy", "")), grid


# -- reports ----------------------------------------------------------------

def write_report_csv(report, summary_path, per_iteration_path=None):
    fh, w = _writer(summary_path)
    with fh:
        w.writerow(SUMMARY_HEADER)
        w.writerow([_num(report.total_packets), _num(report.total_hop_packets), _num(report.avg_hop_count),
                    _num(report.serial_latency * NS), _num(report.parallel_latency * NS),
                    _num(report.energy * PJ)])
    if per_iteration_path is None:
        return
    fh, w = _writer(per_iteration_path)
    with fh:
        w.writerow(PER_ITERATION_HEADER)
        for it in sorted(report.per_iteration):
            t = report.per_iteration[it]
            w.writerow([it, "all", _num(t.packets), _num(t.hop_packets), _num(t.serial_latency * NS),
                        _num(t.parallel_latency * NS), _num(t.energy * PJ)])
        for phase in PHASES:
            t = report.per_phase.get(phase, Tally())
            w.writerow(["all", phase, _num(t.packets), _num(t.hop_packets), _num(t.serial_latency * NS),
                        _num(t.parallel_latency * NS), _num(t.energy * PJ)])


def read_report_summary(path):
    """Headline totals of a summary CSV as a :class:`SimReport` in seconds and joules."""
    rows = _rows(path, SUMMARY_HEADER)
    if len(rows) != 1:
        raise NocGraphError(f"{path}: expected one summary row, found {len(rows)}")
    r = rows[0]
    num = lambda v: float(v) if any(c in v for c in ".eEn") else int(v)  # noqa: E731
    return SimReport(
        total_packets=num(r[0]),
        total_hop_packets=num(r[1]),
        avg_hop_count=float(r[2]),
        serial_latency=float(r[3]) / NS,
        parallel_latency=float(r[4]) / NS,
        energy=float(r[5]) / PJ,
    )


# -- tables -----------------------------------------------------------------

def write_rows_csv(path, header, rows):
    fh, w = _writer(path)
    with fh:
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])


def read_rows_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return list(reader)

