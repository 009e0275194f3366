"""Directed weighted graphs in compressed adjacency form, plus degree analytics.

Edges are stored once in CSR order (by source, then destination, then weight);
an edge's position in that order is its edge id everywhere else in the package.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    EmptyGraph,
    InsufficientSupport,
    MalformedEdgeList,
    MissingWeight,
    NonPositiveSlope,
)

_HEADER_COUNT = re.compile(r"\b(?:nodes|vertices)\s*:?\s*(\d+)", re.IGNORECASE)


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class Graph:
    """Immutable directed multigraph with dense vertex ids ``0..num_vertices-1``.

    ``labels`` holds the original vertex ids when a file was densified on load.
    """

    def __init__(self, num_vertices, src, dst, weights=None, labels=None):
        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        if src.shape != dst.shape:
            raise ValueError("src and dst must have the same length")
        if weights is None:
            weights = np.ones(len(src), dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if weights.shape != src.shape:
            raise ValueError("weights must match the edge count")
        num_vertices = int(num_vertices)
        if num_vertices < 0:
            raise ValueError("num_vertices must be nonnegative")
        if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= num_vertices):
            raise ValueError("edge endpoint out of range")

        order = np.lexsort((weights, dst, src))
        self.num_vertices = num_vertices
        self.indices = _frozen(dst[order])
        self.weights = _frozen(weights[order])
        self.src = _frozen(src[order])
        counts = np.bincount(self.src, minlength=num_vertices)
        indptr = np.zeros(num_vertices + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        self.indptr = _frozen(indptr)
        self.labels = None if labels is None else _frozen(np.asarray(labels, dtype=np.int64))

    @property
    def num_edges(self):
        return len(self.indices)

    @property
    def dst(self):
        return self.indices

    @cached_property
    def out_degree(self):
        return _frozen(np.diff(self.indptr))

    @cached_property
    def in_degree(self):
        return _frozen(np.bincount(self.indices, minlength=self.num_vertices))

    @cached_property
    def in_edge_ids(self):
        """Edge ids grouped by destination (stable, so sources stay ascending)."""
        return _frozen(np.argsort(self.indices, kind="stable"))

    @cached_property
    def in_indptr(self):
        indptr = np.zeros(self.num_vertices + 1, dtype=np.int64)
        np.cumsum(self.in_degree, out=indptr[1:])
        return _frozen(indptr)

    def out_edges(self, u):
        """Edge ids of vertex ``u``'s out-edges, ascending destination."""
        return range(self.indptr[u], self.indptr[u + 1])

    def neighbors(self, u):
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def edges(self):
        for e in range(self.num_edges):
            yield int(self.src[e]), int(self.indices[e]), float(self.weights[e])

    def is_weighted(self):
        return bool(np.any(self.weights != 1.0))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.num_vertices == other.num_vertices
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    def __repr__(self):
        return f"Graph(num_vertices={self.num_vertices}, num_edges={self.num_edges})"


def load_edge_list(path, weighted=False, densify=False):
    """Read a SNAP-style edge list.

    Lines starting with ``#`` are comments; a comment such as
    ``# Nodes: 334863 Edges: 925872`` fixes the vertex count. With
    ``densify`` the ids actually used are renumbered to ``0..n-1`` in
    ascending order and the originals kept in ``Graph.labels``.
    """
    path = Path(path)
    srcs, dsts, ws = [], [], []
    declared = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                m = _HEADER_COUNT.search(text)
                if m and declared is None:
                    declared = int(m.group(1))
                continue
            parts = text.split()
            if len(parts) not in (2, 3):
                raise MalformedEdgeList(path, lineno, f"expected 2 or 3 columns, got {len(parts)}")
            if weighted and len(parts) == 2:
                raise MissingWeight(path, lineno, "weight column missing")
            try:
                s, d = int(parts[0]), int(parts[1])
            except ValueError:
                raise MalformedEdgeList(path, lineno, f"non-integer vertex id in {text!r}") from None
            if s < 0 or d < 0:
                raise MalformedEdgeList(path, lineno, "negative vertex id")
            w = 1.0
            if weighted:
                try:
                    w = float(parts[2])
                except ValueError:
                    raise MalformedEdgeList(path, lineno, f"bad weight {parts[2]!r}") from None
                if not math.isfinite(w):
                    raise MalformedEdgeList(path, lineno, f"non-finite weight {parts[2]!r}")
            srcs.append(s)
            dsts.append(d)
            ws.append(w)

    src = np.array(srcs, dtype=np.int64)
    dst = np.array(dsts, dtype=np.int64)
    if densify:
        labels, inverse = np.unique(np.concatenate([src, dst]), return_inverse=True)
        src, dst = inverse[: len(src)], inverse[len(src):]
        return Graph(len(labels), src, dst, ws, labels=labels)

    n = int(max(src.max(), dst.max())) + 1 if len(src) else 0
    if declared is not None:
        if declared < n:
            raise MalformedEdgeList(path, 0, f"header declares {declared} vertices but ids reach {n - 1}")
        n = declared
    return Graph(n, src, dst, ws)


def write_edge_list(g, path, weighted=None):
    if weighted is None:
        weighted = g.is_weighted()
    with open(path, "w") as fh:
        fh.write(f"# Nodes: {g.num_vertices} Edges: {g.num_edges}\n")
        for s, d, w in g.edges():
            fh.write(f"{s} {d} {w!r}\n" if weighted else f"{s} {d}\n")


def power_law_degree_sequence(num_vertices, avg_degree, skew):
    """Deterministic out-degree multiset with ``n(d) ~ C / d**skew``.

    With ``C = d_max**skew`` the top degree occurs about once. ``d_max`` is
    the smallest value whose rounded sequence reaches
    ``round(num_vertices * avg_degree)`` edges. If the sequence runs out of
    vertices first (steep skew, high mean degree), the largest sequence that
    fits is scaled up uniformly instead, which keeps the log-log slope.
    Surplus edges are trimmed from the top degrees so the total is exact;
    vertices left over get out-degree 0. Returns ``(degrees, counts)``.
    """
    target = int(round(num_vertices * avg_degree))
    if target == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    d = np.arange(1, target + 1, dtype=np.float64)
    s0 = np.cumsum(d ** -skew)
    # d_max candidates whose sequence fits in num_vertices vertices
    fits = d ** skew * s0 <= num_vertices
    limit = max(int(np.count_nonzero(fits)) - 1, 0)

    def rounded(i):
        counts = np.rint(d[i] ** skew * d[: i + 1] ** -skew).astype(np.int64)
        counts[-1] = max(counts[-1], 1)
        return counts

    def edges(i):
        return int((rounded(i) * np.arange(1, i + 2)).sum())

    hi = limit
    if edges(limit) >= target:
        lo = 0
        while lo < hi:
            mid = (lo + hi) // 2
            if edges(mid) >= target:
                hi = mid
            else:
                lo = mid + 1
    counts = rounded(hi)
    degrees = np.arange(1, hi + 2, dtype=np.int64)

    while counts.sum() > num_vertices:
        j = int(np.flatnonzero(counts)[0])
        counts[j] -= min(counts[j], counts.sum() - num_vertices)

    seq = np.repeat(degrees, counts)
    surplus = int(seq.sum()) - target
    if surplus < 0:
        scaled = seq * (target / seq.sum())
        base = np.floor(scaled).astype(np.int64)
        short = target - int(base.sum())
        # largest remainders round up, higher degrees first on ties
        bump = np.lexsort((-np.arange(len(seq)), -(scaled - base)))[:short]
        base[bump] += 1
        seq = np.sort(base)
        surplus = 0
    i = len(seq) - 1
    while surplus > 0 and i >= 0:
        take = min(surplus, int(seq[i]) - 1)
        seq[i] -= take
        surplus -= take
        i -= 1
    vals, cnts = np.unique(seq, return_counts=True)
    return vals, cnts


def generate_power_law_graph(num_vertices, avg_degree, skew, seed, max_weight=1):
    """Synthetic directed graph with a power-law out-degree distribution.

    Out-degrees follow :func:`power_law_degree_sequence` and are dealt to
    vertices in a seeded random order; each edge's destination is drawn
    uniformly. Self-loops and parallel edges are kept. With ``max_weight > 1``
    edges get integer weights drawn uniformly from ``1..max_weight``.
    """
    if num_vertices < 1:
        raise ValueError("num_vertices must be >= 1")
    if avg_degree < 0:
        raise ValueError("avg_degree must be >= 0")
    if skew <= 0:
        raise ValueError("skew must be > 0")
    if max_weight < 1:
        raise ValueError("max_weight must be >= 1")
    rng = np.random.default_rng(seed)
    vals, cnts = power_law_degree_sequence(num_vertices, avg_degree, skew)
    degrees = np.zeros(num_vertices, dtype=np.int64)
    seq = np.repeat(vals, cnts)
    degrees[: len(seq)] = seq
    degrees = degrees[rng.permutation(num_vertices)]
    src = np.repeat(np.arange(num_vertices, dtype=np.int64), degrees)
    dst = rng.integers(0, num_vertices, size=len(src), dtype=np.int64)
    weights = None
    if max_weight > 1:
        weights = rng.integers(1, max_weight + 1, size=len(src)).astype(np.float64)
    return Graph(num_vertices, src, dst, weights)


@dataclass(frozen=True)
class DegreeHistogram:
    entries: dict = field(default_factory=dict)

    @property
    def num_vertices(self):
        return sum(self.entries.values())

    def items(self):
        return sorted(self.entries.items())


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    r_squared: float


def degree_histogram(g, direction="out"):
    if direction == "out":
        deg = g.out_degree
    elif direction == "in":
        deg = g.in_degree
    elif direction == "total":
        deg = g.out_degree + g.in_degree
    else:
        raise ValueError(f"unknown direction {direction!r}")
    vals, cnts = np.unique(deg, return_counts=True)
    return DegreeHistogram({int(d): int(c) for d, c in zip(vals, cnts)})


def fit_power_law(h):
    """Least-squares line through ``(log d, log n(d))``; alpha is minus the slope."""
    pts = [(d, n) for d, n in h.items() if d > 0 and n > 0]
    if len(pts) < 3:
        raise InsufficientSupport(f"need >= 3 nonzero degrees, have {len(pts)}")
    x = np.log(np.array([p[0] for p in pts], dtype=np.float64))
    y = np.log(np.array([p[1] for p in pts], dtype=np.float64))
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    ss_tot = float(((y - ym) ** 2).sum())
    resid = y - (ym + slope * (x - xm))
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 0.0
    alpha = -slope
    if alpha <= 1e-12:
        raise NonPositiveSlope(f"log-log slope {slope:.6g} gives alpha <= 0")
    return PowerLawFit(alpha=alpha, r_squared=min(max(r2, 0.0), 1.0))


def edge_coverage_curve(g):
    """Points ``(k/N, share of edges owned by the k highest out-degree vertices)``, k = 1..N."""
    if g.num_edges == 0:
        raise EmptyGraph("edge coverage undefined for a graph without edges")
    deg = np.sort(g.out_degree)[::-1]
    cum = np.cumsum(deg)
    n = g.num_vertices
    return [((k + 1) / n, float(cum[k]) / g.num_edges) for k in range(n)]


def coverage_at(curve, vertex_fraction):
    """Edge share covered by the top ``vertex_fraction`` of vertices."""
    best = 0.0
    for vf, ef in curve:
        if vf <= vertex_fraction + 1e-12:
            best = ef
        else:
            break
    return best
