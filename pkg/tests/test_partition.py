import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graphs, random_graph
from nocgraph.errors import CapacityTooSmall, ZeroClusters
from nocgraph.graph import Graph, generate_power_law_graph
from nocgraph.partition import (
    EDGE_PROP,
    EDGE_TABLE,
    KINDS,
    VERTEX_PROP,
    VERTEX_TEMP,
    capacities_from_bytes,
    class_load_profile,
    edge_imbalance,
    partition,
    sort_vertices_by_degree,
)


def check_partition_properties(g, pmap, k):
    """Exactness, mirror, modulo and rank-alignment properties; raises AssertionError."""
    order = sort_vertices_by_degree(g)
    position = np.empty(g.num_vertices, dtype=np.int64)
    position[order] = np.arange(g.num_vertices)

    # exactness: each kind's shards partition its domain
    for kind in KINDS:
        items = [x for s in pmap.shards_of(kind) for x in s.contents.tolist()]
        domain = g.num_edges if kind in (EDGE_TABLE, EDGE_PROP) else g.num_vertices
        assert sorted(items) == list(range(domain)), f"kind {kind} is not an exact cover"
    for s in pmap.shards:
        assert s.size <= s.capacity

    # mirror: ET <-> eprop and vprop <-> vtemp, same contents and rank
    for a, b in ((EDGE_TABLE, EDGE_PROP), (VERTEX_PROP, VERTEX_TEMP)):
        left = sorted((s.cls, s.rank, tuple(s.contents.tolist())) for s in pmap.shards_of(a))
        right = sorted((s.cls, s.rank, tuple(s.contents.tolist())) for s in pmap.shards_of(b))
        assert left == right

    # modulo: class of v's vprop shard is position mod K, and its out-edges follow
    vclass = {v: pmap.shard(int(pmap.vertex_shard[VERTEX_PROP][v])).cls for v in range(g.num_vertices)}
    for v in range(g.num_vertices):
        assert vclass[v] == position[v] % k
    for e in range(g.num_edges):
        et = pmap.shard(int(pmap.edge_shard[EDGE_TABLE][e]))
        assert et.cls == vclass[int(g.src[e])]

    # ranks: a co-rank group shares the minimum id of its class
    for s in pmap.shards:
        if s.kind in (VERTEX_PROP, VERTEX_TEMP):
            members = [v for v in range(g.num_vertices) if vclass[v] == s.cls]
            assert s.rank == min(members)
        else:
            sources = [int(g.src[e]) for e in range(g.num_edges) if vclass[int(g.src[e])] == s.cls]
            assert s.rank == min(sources)


class TestSort:
    def test_degrees(self):
        g = Graph(3, [0, 1, 1, 1, 2, 2], [1, 0, 2, 0, 0, 1])
        assert sort_vertices_by_degree(g).tolist() == [1, 2, 0]

    def test_ties_identity(self):
        g = Graph(4, [0, 1, 2, 3], [1, 2, 3, 0])
        assert sort_vertices_by_degree(g).tolist() == [0, 1, 2, 3]

    def test_star_center_first(self):
        g = Graph(5, [3, 3, 3, 3], [0, 1, 2, 4])
        assert sort_vertices_by_degree(g)[0] == 3

    @given(graphs())
    def test_is_permutation(self, g):
        order = sort_vertices_by_degree(g)
        assert sorted(order.tolist()) == list(range(g.num_vertices))
        deg = g.out_degree[order]
        assert np.all(np.diff(deg) <= 0)


class TestPartition:
    def test_single_class(self):
        g = Graph(4, [1, 1, 2], [0, 3, 3])
        pmap = partition(g, 1)
        assert [s.kind for s in pmap.shards] == [1, 2, 3, 4]
        ranks = {s.kind: s.rank for s in pmap.shards}
        assert ranks[EDGE_TABLE] == 1 and ranks[EDGE_PROP] == 1
        assert ranks[VERTEX_PROP] == 0 and ranks[VERTEX_TEMP] == 0

    def test_modulo_classes(self):
        # vertex i has out-degree 8 - i, so the sorted order is the identity
        src = [v for v in range(8) for _ in range(8 - v)]
        g = Graph(8, src, [0] * len(src))
        pmap = partition(g, 4)
        classes = {c: sorted(s.contents.tolist()) for s in pmap.shards_of(VERTEX_PROP) for c in [s.cls]}
        assert classes == {0: [0, 4], 1: [1, 5], 2: [2, 6], 3: [3, 7]}

    def test_vertex_id_modulo_option(self):
        g = Graph(4, [3, 3, 3, 2], [0, 1, 2, 0])
        pmap = partition(g, 2, cyclic="vertex_id")
        assert sorted(pmap.shards_of(VERTEX_PROP, cls=0)[0].contents.tolist()) == [0, 2]
        with pytest.raises(ValueError):
            partition(g, 2, cyclic="bogus")

    def test_overflow_spawns_co_rank_shards(self):
        g = Graph(6, [0] * 10, list(range(5)) * 2)
        pmap = partition(g, 1, capacity_edges=4, capacity_vertices=4)
        ets = pmap.shards_of(EDGE_TABLE)
        assert [s.size for s in ets] == [4, 4, 2]
        assert len({s.rank for s in ets}) == 1
        assert [s.size for s in pmap.shards_of(VERTEX_PROP)] == [4, 2]

    def test_errors(self):
        g = Graph(2, [0], [1])
        with pytest.raises(ZeroClusters):
            partition(g, 0)
        with pytest.raises(CapacityTooSmall):
            partition(g, 1, capacity_edges=0)

    def test_more_classes_than_vertices(self):
        g = Graph(2, [0], [1])
        pmap = partition(g, 4)
        assert {s.cls for s in pmap.shards} == {0, 1}
        pmap.check_complete()

    def test_capacities_from_bytes(self):
        assert capacities_from_bytes() == (65536, 131072)
        assert capacities_from_bytes(160) == (10, 20)

    @given(graphs(max_vertices=40, max_edges=120), st.sampled_from([1, 2, 4, 16]),
           st.integers(1, 20), st.integers(1, 20))
    @settings(max_examples=80, deadline=None)
    def test_properties(self, g, k, cap_e, cap_v):
        check_partition_properties(g, partition(g, k, cap_e, cap_v), k)


class TestLoad:
    def test_single_class_profile(self, rng):
        g = random_graph(rng, 50, 120)
        [only] = class_load_profile(partition(g, 1))
        assert (only.edges, only.vertices) == (120, 50)

    def test_uniform_ring_halves(self):
        g = Graph(6, [0, 1, 2, 3, 4, 5], [1, 2, 3, 4, 5, 0])
        profile = class_load_profile(partition(g, 2))
        assert [(p.edges, p.vertices) for p in profile] == [(3, 3), (3, 3)]
        assert edge_imbalance(profile) == 1.0

    def test_profile_matches_recount(self):
        g = generate_power_law_graph(1 << 14, 8, 1.5, 7)
        pmap = partition(g, 16)
        profile = class_load_profile(pmap)
        vclass = pmap.vertex_class
        edges = np.bincount(vclass[g.src], minlength=16)
        verts = np.bincount(vclass, minlength=16)
        assert [p.edges for p in profile] == edges.tolist()
        assert [p.vertices for p in profile] == verts.tolist()
        assert edge_imbalance(profile) == pytest.approx(edges.max() / edges.mean())

    @pytest.mark.parametrize("skew", [1.0, 1.5, 2.0])
    def test_power_law_balance(self, skew):
        g = generate_power_law_graph(1 << 14, 8, skew, 7)
        assert edge_imbalance(class_load_profile(partition(g, 16))) <= 1.5

    def test_empty_imbalance(self):
        assert edge_imbalance(class_load_profile(partition(Graph(3, [], []), 2))) == 1.0
