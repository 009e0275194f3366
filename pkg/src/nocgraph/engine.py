"""Vertex-centric Process / Reduce / Apply execution with shard traffic accounting.

Each iteration runs three phases over numpy arrays:

* Process: every active vertex u writes ``eprop[e] = process(u.prop, w_e)`` for
  each out-edge e.
* Reduce: each processed edge (u, v) folds its eprop into ``v.temp``.
* Apply: vertices that received something (all vertices for PageRank)
  combine temp with prop. Vertices whose property dropped form the next
  active list.

When a :class:`~nocgraph.partition.PartitionMap` is supplied, the same run also
counts the words moved between shards, one 8-byte word per message:

=========  ==========================================  ==========================
phase      message                                     count
=========  ==========================================  ==========================
Process    ET(s) -> vprop(owner u)                     per (active u, ET shard s)
Process    vprop(owner u) -> eprop(mirror of s)        per processed out-edge
Reduce     ET(shard of e) -> vtemp(owner v)            per reduced edge e=(u, v)
Reduce     eprop(shard of e) -> vtemp(owner v)         per reduced edge
Apply      vtemp(owner v) -> vprop(owner v)            per vertex whose prop changed
=========  ==========================================  ==========================

Messages between shards hosted on the same NoC node are dropped, and the rest
are summed into one bulk record per (iteration, phase, src, dst).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidSource, NegativeWeight, UnmappedEdge, UnmappedVertex
from .partition import EDGE_PROP, EDGE_TABLE, VERTEX_PROP, VERTEX_TEMP

WORD_BYTES = 8
PHASES = ("Process", "Reduce", "Apply")
PROCESS, REDUCE, APPLY = 0, 1, 2

INF = float("inf")


@dataclass(frozen=True)
class ApplyContext:
    num_vertices: int
    out_degree: np.ndarray
    touched: np.ndarray


@dataclass(frozen=True)
class AlgorithmSpec:
    """Process/Reduce/Apply triple plus initialisation and stopping rules.

    ``reduce`` is a numpy ufunc so it can be scattered with ``ufunc.at``; it
    must be commutative and associative with ``identity`` as its neutral value.
    """

    name: str
    process: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    reduce: np.ufunc
    identity: float
    apply: Callable[[np.ndarray, np.ndarray, ApplyContext], np.ndarray]
    initial: Callable[[int, int | None], np.ndarray]
    activation: Callable[[np.ndarray, np.ndarray], np.ndarray]
    converged: Callable[[np.ndarray, np.ndarray, np.ndarray], bool]
    requires_source: bool = True
    all_active: bool = False
    max_iterations: int | None = None
    check_graph: Callable | None = None


def _single_source(num_vertices, source):
    prop = np.full(num_vertices, INF)
    prop[source] = 0.0
    return prop


def _min_apply(temp, prop, ctx):
    return np.where(ctx.touched, np.minimum(prop, temp), prop)


def _strict_decrease(old, new):
    return new < old


def _frontier_empty(old, new, next_active):
    return not next_active.any()


def bfs_spec():
    return AlgorithmSpec(
        name="BFS",
        process=lambda prop, w, deg: prop + 1.0,
        reduce=np.minimum,
        identity=INF,
        apply=_min_apply,
        initial=_single_source,
        activation=_strict_decrease,
        converged=_frontier_empty,
    )


def _reject_negative(g):
    if g.num_edges and g.weights.min() < 0:
        raise NegativeWeight(f"SSSP needs nonnegative weights, found {g.weights.min()}")


def sssp_spec():
    return AlgorithmSpec(
        name="SSSP",
        process=lambda prop, w, deg: prop + w,
        reduce=np.minimum,
        identity=INF,
        apply=_min_apply,
        initial=_single_source,
        activation=_strict_decrease,
        converged=_frontier_empty,
        check_graph=_reject_negative,
    )


def pagerank_spec(damping=0.85, epsilon=1e-6, max_iterations=100):
    """Power-iteration PageRank; rank held by sinks is spread uniformly each round."""
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")

    def apply(temp, prop, ctx):
        n = ctx.num_vertices
        dangling = float(prop[ctx.out_degree == 0].sum())
        return (1.0 - damping) / n + damping * (temp + dangling / n)

    return AlgorithmSpec(
        name="PageRank",
        process=lambda prop, w, deg: prop / deg,
        reduce=np.add,
        identity=0.0,
        apply=apply,
        initial=lambda n, source: np.full(n, 1.0 / n) if n else np.zeros(0),
        activation=lambda old, new: np.ones(len(new), dtype=bool),
        converged=lambda old, new, nxt: float(np.abs(new - old).sum()) < epsilon,
        requires_source=False,
        all_active=True,
        max_iterations=max_iterations,
    )


@dataclass
class IterationStats:
    """Per-iteration execution counters; independent of any partitioning.

    ``phase_bytes[i]`` holds the logical bytes each phase reads or writes in
    iteration i, counting one word per active vertex with out-edges plus one
    per processed edge (Process), two per reduced edge (Reduce) and one per
    changed vertex (Apply).
    """

    iterations: int = 0
    frontier_sizes: list = field(default_factory=list)
    final_frontier: int = 0
    converged: bool = True
    processed_edges: list = field(default_factory=list)
    reduced_edges: list = field(default_factory=list)
    updated_vertices: list = field(default_factory=list)
    phase_bytes: list = field(default_factory=list)

    @property
    def non_convergence(self):
        return not self.converged


@dataclass
class TrafficTrace:
    """Bulk shard-to-shard transfers in canonical order
    (iteration, phase, src_shard, dst_shard); every record is nonlocal.

    ``words_before_drop[phase][i]`` counts every word the message model
    generated in iteration i, including those between co-located shards, and
    ``active_shard_pairs[i]`` the distinct (active vertex, ET shard) pairs.
    """

    iteration: np.ndarray
    phase: np.ndarray
    src_shard: np.ndarray
    dst_shard: np.ndarray
    bytes: np.ndarray
    word_bytes: int = WORD_BYTES
    words_before_drop: dict = field(default_factory=dict)
    active_shard_pairs: list = field(default_factory=list)

    def __len__(self):
        return len(self.bytes)

    @classmethod
    def empty(cls, word_bytes=WORD_BYTES):
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z.copy(), z.copy(), z.copy(), z.copy(), word_bytes)

    def messages(self):
        for i in range(len(self)):
            yield (int(self.iteration[i]), PHASES[self.phase[i]], int(self.src_shard[i]),
                   int(self.dst_shard[i]), int(self.bytes[i]))

    @property
    def totals(self):
        return {name: int(self.bytes[self.phase == p].sum()) for p, name in enumerate(PHASES)}

    @property
    def num_iterations(self):
        return int(self.iteration.max()) if len(self) else 0

    def shard_ids(self):
        return set(np.unique(np.concatenate([self.src_shard, self.dst_shard])).tolist())


def _edge_ranges(indptr, vertices):
    starts = indptr[vertices]
    lens = indptr[vertices + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    offsets = np.repeat(starts - (np.cumsum(lens) - lens), lens)
    return offsets + np.arange(total, dtype=np.int64)


class _TraceBuilder:
    def __init__(self, g, pmap, word_bytes):
        if pmap.num_edges != g.num_edges or pmap.num_vertices != g.num_vertices:
            if pmap.num_edges != g.num_edges:
                raise UnmappedEdge(f"partition covers {pmap.num_edges} edges, graph has {g.num_edges}")
            raise UnmappedVertex(f"partition covers {pmap.num_vertices} vertices, graph has {g.num_vertices}")
        pmap.check_complete()
        self.g = g
        self.et = pmap.edge_shard[EDGE_TABLE]
        self.ep = pmap.edge_shard[EDGE_PROP]
        self.vp = pmap.vertex_shard[VERTEX_PROP]
        self.vt = pmap.vertex_shard[VERTEX_TEMP]
        self.node_of = pmap.node_of
        self.num_shards = pmap.num_shards
        self.word_bytes = word_bytes
        self.records = []
        self.words = {name: [] for name in PHASES}
        self.pairs = []

    def _emit(self, it, phase, src, dst):
        self.words[PHASES[phase]].append(len(src))
        keep = self.node_of[src] != self.node_of[dst]
        if not keep.any():
            return
        codes = src[keep] * self.num_shards + dst[keep]
        uniq, counts = np.unique(codes, return_counts=True)
        n = len(uniq)
        self.records.append((np.full(n, it), np.full(n, phase), uniq // self.num_shards,
                             uniq % self.num_shards, counts * self.word_bytes))

    def iteration(self, it, active, processed, reduced, changed):
        g = self.g
        psrc = g.src[processed]
        pair_codes = np.unique(psrc * self.num_shards + self.et[processed])
        self.pairs.append(len(pair_codes))
        pair_vertex, pair_shard = pair_codes // self.num_shards, pair_codes % self.num_shards
        self._emit(it, PROCESS,
                   np.concatenate([pair_shard, self.vp[psrc]]),
                   np.concatenate([self.vp[pair_vertex], self.ep[processed]]))
        rdst = self.vt[g.dst[reduced]]
        self._emit(it, REDUCE,
                   np.concatenate([self.et[reduced], self.ep[reduced]]),
                   np.concatenate([rdst, rdst]))
        self._emit(it, APPLY, self.vt[changed], self.vp[changed])

    def build(self):
        if not self.records:
            trace = TrafficTrace.empty(self.word_bytes)
        else:
            cols = [np.concatenate([r[i] for r in self.records]).astype(np.int64) for i in range(5)]
            trace = TrafficTrace(*cols, word_bytes=self.word_bytes)
        trace.words_before_drop = self.words
        trace.active_shard_pairs = self.pairs
        return trace


def _execute(g, spec, source, pmap=None, reduce_all=False, edge_order=None, word_bytes=WORD_BYTES):
    n = g.num_vertices
    if spec.check_graph is not None:
        spec.check_graph(g)
    if spec.requires_source:
        if source is None or not 0 <= source < n:
            raise InvalidSource(f"{spec.name} needs a source vertex in [0, {n}), got {source}")
    builder = _TraceBuilder(g, pmap, word_bytes) if pmap is not None else None

    max_iterations = spec.max_iterations if spec.max_iterations is not None else n + 1
    out_degree = g.out_degree
    prop = spec.initial(n, source).astype(np.float64)
    if spec.all_active:
        active = np.ones(n, dtype=bool)
    else:
        active = np.zeros(n, dtype=bool)
        active[source] = True
    eprop = np.full(g.num_edges, spec.identity, dtype=np.float64)
    rank = None
    if edge_order is not None:
        rank = np.empty(g.num_edges, dtype=np.int64)
        rank[np.asarray(edge_order)] = np.arange(g.num_edges)

    stats = IterationStats(converged=False)
    for it in range(1, max_iterations + 1):
        act = np.flatnonzero(active)
        processed = _edge_ranges(g.indptr, act)
        if len(processed):
            psrc = g.src[processed]
            eprop[processed] = spec.process(prop[psrc], g.weights[processed], out_degree[psrc])

        reduced = np.arange(g.num_edges, dtype=np.int64) if reduce_all else processed
        if rank is not None:
            reduced = reduced[np.argsort(rank[reduced], kind="stable")]
        temp = np.full(n, spec.identity, dtype=np.float64)
        touched = np.zeros(n, dtype=bool)
        if len(reduced):
            rdst = g.dst[reduced]
            spec.reduce.at(temp, rdst, eprop[reduced])
            touched[rdst] = True

        new = spec.apply(temp, prop, ApplyContext(n, out_degree, touched))
        changed = np.flatnonzero(new != prop)
        next_active = spec.activation(prop, new)
        done = spec.converged(prop, new, next_active)

        stats.iterations = it
        stats.frontier_sizes.append(len(act))
        stats.processed_edges.append(len(processed))
        stats.reduced_edges.append(len(reduced))
        stats.updated_vertices.append(len(changed))
        senders = int(np.count_nonzero(out_degree[act])) if len(act) else 0
        stats.phase_bytes.append({
            "Process": (senders + len(processed)) * word_bytes,
            "Reduce": 2 * len(reduced) * word_bytes,
            "Apply": len(changed) * word_bytes,
        })
        if builder is not None:
            builder.iteration(it, act, processed, reduced, changed)

        prop = new
        active = next_active
        if done:
            stats.converged = True
            break

    if spec.all_active:
        stats.final_frontier = 0 if stats.converged else n
    else:
        stats.final_frontier = int(np.count_nonzero(active))
    trace = builder.build() if builder is not None else None
    return prop, stats, trace


def run_algorithm(g, spec, source=None, reduce_all=False, edge_order=None):
    """Run ``spec`` on ``g``; returns ``(properties, IterationStats)``.

    Hitting the iteration cap is reported via ``stats.converged = False``
    rather than raised. ``edge_order`` permutes the order in which the Reduce
    phase folds edges (results do not depend on it for min-reductions).
    """
    prop, stats, _ = _execute(g, spec, source, reduce_all=reduce_all, edge_order=edge_order)
    return prop, stats


def emit_traces(g, spec, source, pmap, reduce_all=False, word_bytes=WORD_BYTES):
    """Run ``spec`` while accounting shard traffic under ``pmap``; returns ``(TrafficTrace, IterationStats)``."""
    _, stats, trace = _execute(g, spec, source, pmap=pmap, reduce_all=reduce_all, word_bytes=word_bytes)
    return trace, stats


def normalized_data_movement(trace, g):
    """Phase bytes divided by the graph's footprint, ``(E + V) * word``."""
    denom = (g.num_edges + g.num_vertices) * trace.word_bytes
    totals = trace.totals
    if denom == 0:
        return {p: 0.0 for p in PHASES}
    return {p: totals[p] / denom for p in PHASES}


def algorithm_by_name(name, damping=0.85, epsilon=1e-6, max_iterations=100):
    key = name.strip().lower()
    if key == "bfs":
        return bfs_spec()
    if key == "sssp":
        return sssp_spec()
    if key in ("pagerank", "pr"):
        return pagerank_spec(damping, epsilon, max_iterations)
    raise ValueError(f"unknown algorithm {name!r}")
