"""Trace replay over a placed NoC: hop counts, latency and energy.

Packets follow dimension-ordered routes (X first, then Y). On a mesh a route
steps one router at a time. On a flattened butterfly in ``corrected`` cost
mode, each dimension is crossed by a single express link.

Latency is accumulated two ways:

* serial: every packet pays ``hops * per_hop_latency`` with no overlap.
* parallel: within one (iteration, phase) all transfers overlap, and the
  phase lasts as long as its busiest directed link needs to drain.
  Phases and iterations run back to back.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import PHASES
from .errors import UnplacedShard
from .placement import FBFLY


@dataclass(frozen=True)
class NoCParams:
    frequency: float = 1e9
    packet_size: int = 8
    per_hop_latency: float = 1e-9
    ports: int = 4
    energy_per_hop: float = 0.1e-12
    energy_per_injection: float = 0.05e-12

    def __post_init__(self):
        if self.packet_size <= 0:
            raise ValueError("packet_size must be positive")
        if self.per_hop_latency <= 0:
            raise ValueError("per_hop_latency must be positive")
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        if self.energy_per_hop < 0 or self.energy_per_injection < 0:
            raise ValueError("energies must be nonnegative")


def packetize(nbytes, packet_size):
    if nbytes < 0:
        raise ValueError("byte count must be nonnegative")
    return -(-int(nbytes) // int(packet_size))


def route(grid, a, b):
    """Directed links ``((x, y), (x', y'))`` traversed from ``a`` to ``b``."""
    (x0, y0), (x1, y1) = a, b
    if grid.topology == FBFLY and grid.cost_mode == "corrected":
        links = []
        if x0 != x1:
            links.append(((x0, y0), (x1, y0)))
        if y0 != y1:
            links.append(((x1, y0), (x1, y1)))
        return links
    links = []
    x, y = x0, y0
    step = 1 if x1 > x0 else -1
    while x != x1:
        links.append(((x, y), (x + step, y)))
        x += step
    step = 1 if y1 > y0 else -1
    while y != y1:
        links.append(((x, y), (x, y + step)))
        y += step
    return links


def route_path(grid, a, b):
    """Routers visited after leaving ``a``, ending at ``b``."""
    return [link[1] for link in route(grid, a, b)]


def _coords(placement):
    return placement.as_dict() if hasattr(placement, "as_dict") else dict(placement)


def route_hops(grid, placement, src_shard, dst_shard):
    coords = _coords(placement)
    for s in (src_shard, dst_shard):
        if s not in coords:
            raise UnplacedShard(f"shard {s} has no coordinate")
    return len(route(grid, coords[src_shard], coords[dst_shard]))


@dataclass(frozen=True)
class Tally:
    packets: int = 0
    hop_packets: int = 0
    serial_latency: float = 0.0
    parallel_latency: float = 0.0
    energy: float = 0.0

    def __add__(self, other):
        return Tally(self.packets + other.packets, self.hop_packets + other.hop_packets,
                     self.serial_latency + other.serial_latency,
                     self.parallel_latency + other.parallel_latency, self.energy + other.energy)


@dataclass
class SimReport:
    """Replay totals. ``per_iteration`` maps iteration -> :class:`Tally`,
    ``per_phase`` phase name -> :class:`Tally`. Headline totals are the sum of
    ``per_iteration`` in iteration order."""

    total_packets: int = 0
    total_hop_packets: int = 0
    avg_hop_count: float = 0.0
    serial_latency: float = 0.0
    parallel_latency: float = 0.0
    energy: float = 0.0
    per_iteration: dict = field(default_factory=dict)
    per_phase: dict = field(default_factory=dict)
    link_hop_packets: dict = field(default_factory=dict)

    @classmethod
    def from_groups(cls, groups, link_hop_packets):
        """Build from ``{(iteration, phase_index): Tally}``; summation order is fixed."""
        per_iteration, per_phase = {}, {p: Tally() for p in PHASES}
        for it, ph in sorted(groups):
            t = groups[(it, ph)]
            per_iteration[it] = per_iteration.get(it, Tally()) + t
            per_phase[PHASES[ph]] = per_phase[PHASES[ph]] + t
        total = Tally()
        for it in sorted(per_iteration):
            total = total + per_iteration[it]
        avg = total.hop_packets / total.packets if total.packets else 0.0
        return cls(total.packets, total.hop_packets, avg, total.serial_latency, total.parallel_latency,
                   total.energy, per_iteration, per_phase, link_hop_packets)


def _replay_rows(trace, rows, paths, params):
    """Replay the trace rows ``rows`` (ascending); returns (groups, link loads).

    ``paths[r]`` lists the link ids message ``r`` crosses.
    """
    groups, link_loads = {}, {}
    if len(rows) == 0:
        return groups, link_loads
    rows = np.asarray(rows, dtype=np.int64)
    pk = -(-trace.bytes[rows] // params.packet_size)
    hops = np.array([len(paths[r]) for r in rows], dtype=np.int64)
    key = trace.iteration[rows] * len(PHASES) + trace.phase[rows]
    keys, group = np.unique(key, return_inverse=True)
    flat_links = np.array([lid for r in rows for lid in paths[r]], dtype=np.int64)
    flat_group = np.repeat(group, hops)
    flat_pk = np.repeat(pk, hops)
    num_links = int(flat_links.max()) + 1 if len(flat_links) else 0
    loads = np.zeros((len(keys), num_links), dtype=np.int64)
    np.add.at(loads, (flat_group, flat_links), flat_pk)
    packets = np.bincount(group, weights=pk, minlength=len(keys)).astype(np.int64)
    hop_packets = np.bincount(group, weights=pk * hops, minlength=len(keys)).astype(np.int64)
    busiest = loads.max(axis=1) if num_links else np.zeros(len(keys), dtype=np.int64)
    lat = params.per_hop_latency
    for k, code in enumerate(keys.tolist()):
        p, hp = int(packets[k]), int(hop_packets[k])
        groups[divmod(code, len(PHASES))] = Tally(
            p, hp, hp * lat, int(busiest[k]) * lat,
            hp * params.energy_per_hop + p * params.energy_per_injection)
    total = loads.sum(axis=0)
    for lid in np.flatnonzero(total).tolist():
        link_loads[lid] = int(total[lid])
    return groups, link_loads


def replay(trace, placement, grid, params=None, jobs=1):
    """Replay ``trace`` over ``placement``; see the module docstring for the cost model.

    With ``jobs > 1`` iterations are replayed in parallel segments and merged;
    the report is bit-identical to a sequential replay.
    """
    params = params or NoCParams()
    coords = _coords(placement)
    link_index, pair_links = {}, {}
    for s, d in sorted(set(zip(trace.src_shard.tolist(), trace.dst_shard.tolist()))):
        for shard in (s, d):
            if shard not in coords:
                raise UnplacedShard(f"shard {shard} appears in the trace but has no coordinate")
        pair_links[(s, d)] = [link_index.setdefault(link, len(link_index))
                              for link in route(grid, coords[s], coords[d])]
    paths = [pair_links[(s, d)] for s, d in zip(trace.src_shard.tolist(), trace.dst_shard.tolist())]

    rows = np.arange(len(trace))
    if jobs > 1 and len(trace):
        iters = np.unique(trace.iteration)
        segments = [rows[np.isin(trace.iteration, iters[k::jobs])] for k in range(min(jobs, len(iters)))]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda seg: _replay_rows(trace, seg, paths, params), segments))
        groups, link_loads = {}, {}
        for g, ll in parts:
            groups.update(g)
            for lid, v in ll.items():
                link_loads[lid] = link_loads.get(lid, 0) + v
    else:
        groups, link_loads = _replay_rows(trace, rows, paths, params)

    names = {v: k for k, v in link_index.items()}
    links = {names[lid]: link_loads[lid] for lid in sorted(link_loads)}
    return SimReport.from_groups(groups, links)


def mean_report(reports):
    """Arithmetic mean of several replays of the same trace (random-baseline aggregate)."""
    if not reports:
        raise ValueError("no reports to average")
    k = len(reports)

    def mean(values):
        return math.fsum(values) / k

    iters = sorted(reports[0].per_iteration)
    per_iteration = {}
    for it in iters:
        rows = [r.per_iteration[it] for r in reports]
        per_iteration[it] = Tally(
            rows[0].packets,
            mean([t.hop_packets for t in rows]),
            mean([t.serial_latency for t in rows]),
            mean([t.parallel_latency for t in rows]),
            mean([t.energy for t in rows]),
        )
    per_phase = {}
    for p in PHASES:
        rows = [r.per_phase.get(p, Tally()) for r in reports]
        per_phase[p] = Tally(rows[0].packets, mean([t.hop_packets for t in rows]),
                             mean([t.serial_latency for t in rows]), mean([t.parallel_latency for t in rows]),
                             mean([t.energy for t in rows]))
    return SimReport(
        total_packets=reports[0].total_packets,
        total_hop_packets=mean([r.total_hop_packets for r in reports]),
        avg_hop_count=mean([r.avg_hop_count for r in reports]),
        serial_latency=mean([r.serial_latency for r in reports]),
        parallel_latency=mean([r.parallel_latency for r in reports]),
        energy=mean([r.energy for r in reports]),
        per_iteration=per_iteration,
        per_phase=per_phase,
    )


def _ratio(num, den):
    if den == 0:
        return 1.0 if num == 0 else math.inf
    return num / den


@dataclass(frozen=True)
class Comparison:
    speedup: float
    energy_ratio: float
    hop_reduction: float


def compare(optimized, baseline):
    """Speedup (parallel latency), energy ratio and fractional hop reduction of
    ``optimized`` against ``baseline``. A zero optimized cost against a nonzero
    baseline yields ``inf`` rather than an error."""
    hop = 0.0 if baseline.avg_hop_count == 0 else 1.0 - optimized.avg_hop_count / baseline.avg_hop_count
    return Comparison(
        speedup=_ratio(baseline.parallel_latency, optimized.parallel_latency),
        energy_ratio=_ratio(baseline.energy, optimized.energy),
        hop_reduction=hop,
    )

