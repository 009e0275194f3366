"""Degree-sorted, modulo-scheduled source-cut partitioning.

Vertices are sorted by descending out-degree and dealt round-robin to K
cyclic classes, so each class receives a similar share of the heavy hitters.
Each class gets shards of four kinds: Edge Table (1), Vertex Prop (2),
Vertex Temp (3) and Edge Prop (4). Edge shards hold the out-edges of the
class's vertices; vertex shards hold the vertices themselves. A shard that
would exceed its capacity spills into further shards of the same kind and
class, which share the group's rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityTooSmall, UnmappedEdge, UnmappedVertex, ZeroClusters

EDGE_TABLE = 1
VERTEX_PROP = 2
VERTEX_TEMP = 3
EDGE_PROP = 4
KINDS = (EDGE_TABLE, VERTEX_PROP, VERTEX_TEMP, EDGE_PROP)
KIND_NAMES = {EDGE_TABLE: "ET", VERTEX_PROP: "vprop", VERTEX_TEMP: "vtemp", EDGE_PROP: "eprop"}
EDGE_KINDS = (EDGE_TABLE, EDGE_PROP)
VERTEX_KINDS = (VERTEX_PROP, VERTEX_TEMP)

EDGE_RECORD_BYTES = 16
VERTEX_RECORD_BYTES = 8
ENGINE_CAPACITY_BYTES = 1 << 20


def capacities_from_bytes(capacity_bytes=ENGINE_CAPACITY_BYTES):
    """(edges, vertices) that fit one engine: 16 B per (src, dst, weight) edge, 8 B per vertex."""
    return capacity_bytes // EDGE_RECORD_BYTES, capacity_bytes // VERTEX_RECORD_BYTES


@dataclass(frozen=True)
class Shard:
    id: int
    kind: int
    rank: int
    cls: int
    contents: np.ndarray
    capacity: int

    @property
    def size(self):
        return len(self.contents)

    @property
    def is_edge_shard(self):
        return self.kind in EDGE_KINDS


class PartitionMap:
    """Shards plus item lookups. ``node_of[shard_id]`` is the NoC node hosting a shard;
    by default every shard has a node of its own."""

    def __init__(self, shards, num_classes, order, vertex_class, num_vertices, num_edges, node_of=None):
        self.shards = list(shards)
        self.num_classes = num_classes
        self.order = order
        self.vertex_class = vertex_class
        self.num_vertices = num_vertices
        self.num_edges = num_edges
        self.edge_shard = {k: np.full(num_edges, -1, dtype=np.int64) for k in EDGE_KINDS}
        self.vertex_shard = {k: np.full(num_vertices, -1, dtype=np.int64) for k in VERTEX_KINDS}
        for s in self.shards:
            lookup = self.edge_shard if s.is_edge_shard else self.vertex_shard
            lookup[s.kind][s.contents] = s.id
        if node_of is None:
            node_of = np.arange(len(self.shards), dtype=np.int64)
        self.node_of = np.asarray(node_of, dtype=np.int64)
        self._group_rank = {}
        for s in self.shards:
            if s.kind == VERTEX_PROP:
                self._group_rank[s.cls] = s.rank

    @property
    def num_shards(self):
        return len(self.shards)

    def shard(self, shard_id):
        return self.shards[shard_id]

    def group_rank(self, cls):
        """Rank shared by the co-rank group of class ``cls``: its minimum vertex id."""
        return self._group_rank[cls]

    def shards_of(self, kind=None, cls=None):
        return [s for s in self.shards if (kind is None or s.kind == kind) and (cls is None or s.cls == cls)]

    def with_nodes(self, node_of):
        """Same shards, different shard-to-node hosting (e.g. co-located shards)."""
        return PartitionMap(self.shards, self.num_classes, self.order, self.vertex_class,
                            self.num_vertices, self.num_edges, node_of=node_of)

    def check_complete(self):
        for k in EDGE_KINDS:
            missing = np.flatnonzero(self.edge_shard[k] < 0)
            if len(missing):
                raise UnmappedEdge(f"edge {int(missing[0])} has no kind-{k} shard")
        for k in VERTEX_KINDS:
            missing = np.flatnonzero(self.vertex_shard[k] < 0)
            if len(missing):
                raise UnmappedVertex(f"vertex {int(missing[0])} has no kind-{k} shard")

    def __repr__(self):
        return (f"PartitionMap(classes={self.num_classes}, shards={self.num_shards}, "
                f"vertices={self.num_vertices}, edges={self.num_edges})")


def sort_vertices_by_degree(g):
    """Permutation of vertex ids by descending out-degree, ties by ascending id."""
    ids = np.arange(g.num_vertices, dtype=np.int64)
    return np.lexsort((ids, -g.out_degree)).astype(np.int64)


def _chunks(items, capacity):
    if len(items) == 0:
        return []
    return [items[i:i + capacity] for i in range(0, len(items), capacity)]


def partition(g, num_clusters, capacity_edges=None, capacity_vertices=None, cyclic="position"):
    """Partition ``g`` into ``num_clusters`` cyclic classes.

    ``cyclic="position"`` assigns the vertex at sorted position p to class
    p mod K; ``cyclic="vertex_id"`` uses v mod K on raw ids instead. Classes
    without vertices get no shards, and classes without edges get no edge
    shards.
    """
    if num_clusters < 1:
        raise ZeroClusters("need at least one node cluster")
    default_e, default_v = capacities_from_bytes()
    capacity_edges = default_e if capacity_edges is None else int(capacity_edges)
    capacity_vertices = default_v if capacity_vertices is None else int(capacity_vertices)
    if capacity_edges < 1 and g.num_edges:
        raise CapacityTooSmall("edge capacity below one edge")
    if capacity_vertices < 1 and g.num_vertices:
        raise CapacityTooSmall("vertex capacity below one vertex")

    order = sort_vertices_by_degree(g)
    position = np.empty(g.num_vertices, dtype=np.int64)
    position[order] = np.arange(g.num_vertices)
    if cyclic == "position":
        vertex_class = position % num_clusters
    elif cyclic == "vertex_id":
        vertex_class = np.arange(g.num_vertices, dtype=np.int64) % num_clusters
    else:
        raise ValueError(f"unknown cyclic rule {cyclic!r}")

    # vertices grouped by class, each group in sorted-position order
    by_class = order[np.argsort(vertex_class[order], kind="stable")]
    vcounts = np.bincount(vertex_class, minlength=num_clusters)
    vbounds = np.concatenate([[0], np.cumsum(vcounts)])

    eids = np.arange(g.num_edges, dtype=np.int64)
    esrc_pos = position[g.src]
    eclass = vertex_class[g.src]
    edge_order = np.lexsort((eids, esrc_pos, eclass))
    ecounts = np.bincount(eclass, minlength=num_clusters)
    ebounds = np.concatenate([[0], np.cumsum(ecounts)])

    shards = []
    for c in range(num_clusters):
        members = by_class[vbounds[c]:vbounds[c + 1]]
        if len(members) == 0:
            continue
        class_edges = edge_order[ebounds[c]:ebounds[c + 1]]
        vrank = int(members.min())
        erank = int(g.src[class_edges].min()) if len(class_edges) else vrank
        for kind in KINDS:
            if kind in EDGE_KINDS:
                pieces, rank, cap = _chunks(class_edges, capacity_edges), erank, capacity_edges
            else:
                pieces, rank, cap = _chunks(members, capacity_vertices), vrank, capacity_vertices
            for piece in pieces:
                contents = np.array(piece, dtype=np.int64)
                contents.setflags(write=False)
                shards.append(Shard(len(shards), kind, rank, c, contents, cap))

    return PartitionMap(shards, num_clusters, order, vertex_class, g.num_vertices, g.num_edges)


@dataclass(frozen=True)
class ClassLoad:
    cls: int
    edges: int
    vertices: int


def class_load_profile(pmap):
    """Edge and vertex counts per cyclic class, read off the shards."""
    edges = [0] * pmap.num_classes
    vertices = [0] * pmap.num_classes
    for s in pmap.shards:
        if s.kind == EDGE_TABLE:
            edges[s.cls] += s.size
        elif s.kind == VERTEX_PROP:
            vertices[s.cls] += s.size
    return [ClassLoad(c, edges[c], vertices[c]) for c in range(pmap.num_classes)]


def edge_imbalance(profile):
    """max / mean class edge load (1.0 for a perfectly even split or no edges)."""
    loads = [p.edges for p in profile]
    total = sum(loads)
    if total == 0:
        return 1.0
    return max(loads) / (total / len(loads))
