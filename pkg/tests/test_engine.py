import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graphs, random_graph
from oracles import dense_pagerank, dijkstra, naive_trace, queue_bfs
from nocgraph.engine import (
    PHASES,
    TrafficTrace,
    algorithm_by_name,
    bfs_spec,
    emit_traces,
    normalized_data_movement,
    pagerank_spec,
    run_algorithm,
    sssp_spec,
)
from nocgraph.errors import InvalidSource, NegativeWeight, UnmappedEdge, UnmappedVertex
from nocgraph.graph import Graph, generate_power_law_graph
from nocgraph.partition import EDGE_PROP, EDGE_TABLE, VERTEX_PROP, VERTEX_TEMP, partition
from nocgraph.placement import build_topology_graph

INF = math.inf


def edge_list(g):
    return list(g.edges())


def two_node_example():
    """Path 0->1; ET and eprop on node A, vprop and vtemp on node B."""
    g = Graph(2, [0], [1])
    pmap = partition(g, 1)
    node_of = [0 if s.kind in (EDGE_TABLE, EDGE_PROP) else 1 for s in pmap.shards]
    return g, pmap.with_nodes(node_of)


class TestSpecs:
    @pytest.mark.parametrize("spec", [bfs_spec(), sssp_spec(), pagerank_spec()])
    def test_reduce_identity_and_commutativity(self, spec):
        xs = np.array([3.0, 0.5, 7.0, 2.0])
        assert np.all(spec.reduce(spec.identity, xs) == xs)
        assert np.all(spec.reduce(xs, xs[::-1]) == spec.reduce(xs[::-1], xs))

    def test_pagerank_rejects_bad_parameters(self):
        for kwargs in [dict(damping=0.0), dict(damping=1.0), dict(damping=1.2), dict(epsilon=0.0)]:
            with pytest.raises(ValueError):
                pagerank_spec(**kwargs)

    def test_by_name(self):
        assert algorithm_by_name("PR").name == "PageRank"
        assert algorithm_by_name("bfs").name == "BFS"
        with pytest.raises(ValueError):
            algorithm_by_name("dfs")


class TestBFS:
    def test_path(self):
        depth, stats = run_algorithm(Graph(3, [0, 1], [1, 2]), bfs_spec(), 0)
        assert depth.tolist() == [0, 1, 2]
        assert stats.iterations == 3
        assert stats.frontier_sizes == [1, 1, 1]
        assert stats.final_frontier == 0

    def test_unreachable(self):
        depth, _ = run_algorithm(Graph(3, [0], [1]), bfs_spec(), 0)
        assert depth[2] == INF

    def test_source_required(self):
        with pytest.raises(InvalidSource):
            run_algorithm(Graph(2, [0], [1]), bfs_spec())
        with pytest.raises(InvalidSource):
            run_algorithm(Graph(2, [0], [1]), bfs_spec(), 5)

    def test_edgeless_graph(self):
        for spec, src in [(bfs_spec(), 0), (sssp_spec(), 0), (pagerank_spec(), None)]:
            _, stats = run_algorithm(Graph(3, [], []), spec, src)
            assert stats.iterations == 1
            assert stats.processed_edges == [0]

    def test_power_law_matches_queue(self):
        g = generate_power_law_graph(3000, 6, 1.5, 4)
        src = int(np.argmax(g.out_degree))
        depth, _ = run_algorithm(g, bfs_spec(), src)
        assert depth.tolist() == queue_bfs(edge_list(g), g.num_vertices, src)


class TestSSSP:
    def test_weighted_path(self):
        dist, _ = run_algorithm(Graph(3, [0, 1], [1, 2], [2, 3]), sssp_spec(), 0)
        assert dist.tolist() == [0, 2, 5]

    def test_unit_weights_equal_bfs(self, rng):
        g = random_graph(rng, 200, 800)
        a, _ = run_algorithm(g, sssp_spec(), 0)
        b, _ = run_algorithm(g, bfs_spec(), 0)
        assert a.tolist() == b.tolist()

    def test_negative_weight(self):
        with pytest.raises(NegativeWeight):
            run_algorithm(Graph(2, [0], [1], [-1.0]), sssp_spec(), 0)

    @given(graphs(weighted=True), st.data())
    @settings(max_examples=60, deadline=None)
    def test_matches_dijkstra(self, g, data):
        src = data.draw(st.integers(0, g.num_vertices - 1))
        dist, stats = run_algorithm(g, sssp_spec(), src)
        assert dist.tolist() == dijkstra(edge_list(g), g.num_vertices, src)
        assert stats.final_frontier == 0


class TestPageRank:
    def test_two_cycle(self):
        r, stats = run_algorithm(Graph(2, [0, 1], [1, 0]), pagerank_spec())
        assert r == pytest.approx([0.5, 0.5], abs=1e-12)
        assert stats.converged

    def test_single_vertex(self):
        r, _ = run_algorithm(Graph(1, [], []), pagerank_spec())
        assert r.tolist() == [1.0]

    def test_four_vertex_oracle(self):
        g = Graph(4, [0, 0, 1, 2], [1, 2, 2, 0])
        r, _ = run_algorithm(g, pagerank_spec())
        assert np.abs(r - dense_pagerank(edge_list(g), 4)).sum() < 1e-6

    def test_near_fixed_point_with_tight_epsilon(self, rng):
        g = random_graph(rng, 150, 600)
        r, _ = run_algorithm(g, pagerank_spec(epsilon=1e-12, max_iterations=500))
        exact = dense_pagerank(edge_list(g), 150, epsilon=1e-15, max_iterations=2000)
        assert np.abs(r - exact).sum() < 1e-9

    @given(graphs(max_vertices=40, max_edges=120))
    @settings(max_examples=40, deadline=None)
    def test_rank_sums_to_one(self, g):
        r, _ = run_algorithm(g, pagerank_spec())
        assert r.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(r > 0)

    def test_non_convergence_is_reported(self, rng):
        g = random_graph(rng, 50, 200)
        _, stats = run_algorithm(g, pagerank_spec(epsilon=1e-15, max_iterations=3))
        assert stats.iterations == 3
        assert stats.non_convergence
        assert stats.final_frontier == 50

    def test_more_iterations_than_bfs(self):
        g = generate_power_law_graph(1 << 14, 8, 1.5, 7)
        _, pr = run_algorithm(g, pagerank_spec())
        _, bfs = run_algorithm(g, bfs_spec(), int(np.argmax(g.out_degree)))
        assert pr.iterations > bfs.iterations


class TestOrderIndependence:
    @given(graphs(weighted=True), st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_min_reductions_are_bit_identical(self, g, seed):
        order = np.random.default_rng(seed).permutation(g.num_edges)
        for spec in (bfs_spec(), sssp_spec()):
            a, _ = run_algorithm(g, spec, 0)
            b, _ = run_algorithm(g, spec, 0, edge_order=order)
            assert a.tobytes() == b.tobytes()

    @given(graphs(), st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_pagerank_sum_within_rounding(self, g, seed):
        # floating-point addition is only approximately associative
        order = np.random.default_rng(seed).permutation(g.num_edges)
        a, _ = run_algorithm(g, pagerank_spec())
        b, _ = run_algorithm(g, pagerank_spec(), edge_order=order)
        assert np.abs(a - b).sum() < 1e-12

    def test_reduce_all_same_results(self, rng):
        g = random_graph(rng, 100, 400, weighted=True)
        a, _ = run_algorithm(g, sssp_spec(), 0)
        b, stats = run_algorithm(g, sssp_spec(), 0, reduce_all=True)
        assert a.tolist() == b.tolist()
        assert all(r == g.num_edges for r in stats.reduced_edges)


class TestTraces:
    def test_two_node_example(self):
        g, pmap = two_node_example()
        trace, _ = emit_traces(g, bfs_spec(), 0, pmap)
        assert trace.totals == {"Process": 16, "Reduce": 16, "Apply": 0}
        by_kind = {(pmap.shard(s).kind, pmap.shard(d).kind): b
                   for _, _, s, d, b in trace.messages()}
        assert by_kind == {(EDGE_TABLE, VERTEX_PROP): 8, (VERTEX_PROP, EDGE_PROP): 8,
                           (EDGE_TABLE, VERTEX_TEMP): 8, (EDGE_PROP, VERTEX_TEMP): 8}

    def test_two_node_normalized(self):
        g, pmap = two_node_example()
        trace, _ = emit_traces(g, bfs_spec(), 0, pmap)
        m = normalized_data_movement(trace, g)
        assert m["Process"] == pytest.approx(16 / 24)
        assert m["Reduce"] == pytest.approx(16 / 24)
        assert m["Apply"] == 0

    def test_all_colocated_gives_empty_trace(self, rng):
        g = random_graph(rng, 100, 300)
        pmap = partition(g, 4)
        trace, _ = emit_traces(g, pagerank_spec(), None, pmap.with_nodes([0] * pmap.num_shards))
        assert len(trace) == 0
        assert normalized_data_movement(trace, g) == {p: 0.0 for p in PHASES}

    def test_empty_trace_normalization(self):
        assert normalized_data_movement(TrafficTrace.empty(), Graph(0, [], [])) == {p: 0.0 for p in PHASES}

    def test_stats_match_run_algorithm(self, rng):
        g = random_graph(rng, 300, 1200, weighted=True)
        pmap = partition(g, 4)
        for spec, src in [(bfs_spec(), 0), (sssp_spec(), 0), (pagerank_spec(), None)]:
            _, a = run_algorithm(g, spec, src)
            _, b = emit_traces(g, spec, src, pmap)
            assert a == b

    def test_incomplete_partition(self, rng):
        g = random_graph(rng, 20, 40)
        other = random_graph(rng, 20, 41)
        with pytest.raises(UnmappedEdge):
            emit_traces(g, bfs_spec(), 0, partition(other, 2))
        with pytest.raises(UnmappedVertex):
            emit_traces(g, bfs_spec(), 0, partition(Graph(21, g.src, g.dst), 2))

    @given(graphs(max_vertices=25, max_edges=60), st.sampled_from([1, 2, 3, 4]), st.data())
    @settings(max_examples=60, deadline=None)
    def test_bfs_trace_matches_naive_enumeration(self, g, k, data):
        src = data.draw(st.integers(0, g.num_vertices - 1))
        cap = data.draw(st.integers(1, 12))
        pmap = partition(g, k, capacity_edges=cap, capacity_vertices=cap)
        trace, _ = emit_traces(g, bfs_spec(), src, pmap)

        depth = queue_bfs(edge_list(g), g.num_vertices, src)
        levels = {}
        for v, d in enumerate(depth):
            if d != INF:
                levels.setdefault(d, set()).add(v)
        rounds = [(levels[d], levels.get(d + 1, set())) for d in range(max(levels) + 1)]
        shard_of = {EDGE_TABLE: pmap.edge_shard[EDGE_TABLE], EDGE_PROP: pmap.edge_shard[EDGE_PROP],
                    VERTEX_PROP: pmap.vertex_shard[VERTEX_PROP], VERTEX_TEMP: pmap.vertex_shard[VERTEX_TEMP]}
        expected, raw = naive_trace(edge_list(g), g.num_vertices, shard_of, pmap.node_of, rounds)
        got = {(it, PHASES.index(ph), s, d): b for it, ph, s, d, b in trace.messages()}
        assert got == expected
        for p, name in enumerate(PHASES):
            assert sum(trace.words_before_drop[name]) == raw.get(p, 0)

    @given(graphs(max_vertices=25, max_edges=60), st.sampled_from([1, 2, 5]))
    @settings(max_examples=40, deadline=None)
    def test_invariants(self, g, k):
        pmap = partition(g, k, capacity_edges=7, capacity_vertices=5)
        for spec, src in [(bfs_spec(), 0), (pagerank_spec(), None)]:
            trace, stats = emit_traces(g, spec, src, pmap)
            assert np.all(trace.bytes > 0) and np.all(trace.bytes % trace.word_bytes == 0)
            assert not np.any(trace.src_shard == trace.dst_shard)
            keys = list(zip(trace.iteration, trace.phase, trace.src_shard, trace.dst_shard))
            assert keys == sorted(keys)
            # conservation against the execution counters
            for i in range(stats.iterations):
                assert trace.words_before_drop["Process"][i] == \
                    trace.active_shard_pairs[i] + stats.processed_edges[i]
                assert trace.words_before_drop["Reduce"][i] == 2 * stats.reduced_edges[i]
                assert trace.words_before_drop["Apply"][i] == stats.updated_vertices[i]

    @given(graphs(max_vertices=25, max_edges=60), st.sampled_from([1, 2, 4]))
    @settings(max_examples=40, deadline=None)
    def test_process_and_apply_follow_affinity_edges(self, g, k):
        pmap = partition(g, k, capacity_edges=6, capacity_vertices=4)
        tg = build_topology_graph(pmap)
        trace, _ = emit_traces(g, pagerank_spec(), None, pmap)
        for _, phase, s, d, _ in trace.messages():
            a, b = pmap.shard(s), pmap.shard(d)
            if phase == "Process":
                assert tg.weights[s, d] == 1
            elif phase == "Apply":
                assert {a.kind, b.kind} == {VERTEX_PROP, VERTEX_TEMP}
                assert pmap.group_rank(a.cls) == pmap.group_rank(b.cls)

    def test_single_class_reduce_follows_affinity_edges(self, rng):
        g = random_graph(rng, 60, 200)
        pmap = partition(g, 1, capacity_edges=40, capacity_vertices=25)
        tg = build_topology_graph(pmap)
        trace, _ = emit_traces(g, pagerank_spec(), None, pmap)
        for _, phase, s, d, _ in trace.messages():
            if phase != "Apply":
                assert tg.weights[s, d] == 1

    def test_pagerank_moves_more_than_bfs(self):
        g = generate_power_law_graph(4096, 8, 1.5, 1)
        pmap = partition(g, 16)
        pr, _ = emit_traces(g, pagerank_spec(), None, pmap)
        bfs, _ = emit_traces(g, bfs_spec(), int(np.argmax(g.out_degree)), pmap)
        assert sum(normalized_data_movement(pr, g).values()) > sum(normalized_data_movement(bfs, g).values())
