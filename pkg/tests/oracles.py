"""Reference implementations written independently of the package internals.

These use plain Python containers (deque, heapq, itertools) or dense numpy
linear algebra, never the package's CSR arrays or solvers.
"""

from __future__ import annotations

import heapq
import itertools
from collections import defaultdict, deque

import numpy as np

INF = float("inf")


def adjacency(edges, n):
    adj = [[] for _ in range(n)]
    for s, d, w in edges:
        adj[s].append((d, w))
    return adj


def queue_bfs(edges, n, source):
    adj = adjacency(edges, n)
    depth = [INF] * n
    depth[source] = 0
    q = deque([source])
    while q:
        u = q.popleft()
        for v, _ in adj[u]:
            if depth[v] == INF:
                depth[v] = depth[u] + 1
                q.append(v)
    return depth


def dijkstra(edges, n, source):
    adj = adjacency(edges, n)
    dist = [INF] * n
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def dense_pagerank(edges, n, damping=0.85, epsilon=1e-6, max_iterations=100):
    """Dense power iteration with uniform redistribution of dangling mass.

    Same stopping rule as the engine: stop once the L1 change drops below
    ``epsilon``. Pass a tiny ``epsilon`` for the fixed point itself.
    """
    m = np.zeros((n, n))
    out = np.zeros(n)
    for s, d, _ in edges:
        m[d, s] += 1.0
        out[s] += 1.0
    for s in range(n):
        if out[s] > 0:
            m[:, s] /= out[s]
        else:
            m[:, s] = 1.0 / n
    r = np.full(n, 1.0 / n)
    for _ in range(max_iterations):
        nr = (1.0 - damping) / n + damping * (m @ r)
        delta = np.abs(nr - r).sum()
        r = nr
        if delta < epsilon:
            break
    return r


# -- placement --------------------------------------------------------------

def cell_ok(index, x, y, height, mode):
    """Per-kind cell rules, restated from the documented constraint table."""
    k = height
    if mode == "none":
        return True
    if index == 1:
        ok = y > 0
        return ok and (y >= k // 2 if mode == "banded" else True)
    if index == 4:
        ok = y < k - 1
        return ok and (y <= (k - 1) // 2 if mode == "banded" else True)
    return 0 < y < k - 1 and x > 0


def brute_force_optimum(indices, weights, width, height, topology="mesh", cost_mode="paper", mode="banded"):
    """Minimum of sum_{i<j} w_ij * dist over every legal injection, by enumeration.

    Returns ``None`` when no legal injection exists.
    """
    n = len(indices)
    cells = [(x, y) for x in range(width) for y in range(height)]
    if n == 0:
        return 0.0
    if n > len(cells):
        return None
    xs = np.array([c[0] for c in cells])
    ys = np.array([c[1] for c in cells])
    if topology == "fbfly" and cost_mode == "corrected":
        dist = (xs[:, None] != xs[None, :]).astype(float) + (ys[:, None] != ys[None, :]).astype(float)
    else:
        dist = np.abs(xs[:, None] - xs[None, :]) + np.abs(ys[:, None] - ys[None, :])
    perms = np.array(list(itertools.permutations(range(len(cells)), n)), dtype=np.int64)
    legal = np.array([[cell_ok(indices[i], x, y, height, mode) for (x, y) in cells] for i in range(n)])
    ok = np.ones(len(perms), dtype=bool)
    for i in range(n):
        ok &= legal[i][perms[:, i]]
    if not ok.any():
        return None
    perms = perms[ok]
    total = np.zeros(len(perms))
    w = np.asarray(weights, dtype=float)
    for i in range(n):
        for j in range(i + 1, n):
            if w[i, j]:
                total += w[i, j] * dist[perms[:, i], perms[:, j]]
    return float(total.min())


# -- traces -----------------------------------------------------------------

def naive_trace(edges, n, shard_of, node_of, rounds, word=8):
    """Message-by-message trace for given per-iteration (active vertices, changed vertices).

    ``edges`` are in edge-id order; ``shard_of[kind]`` maps an edge id (kinds
    1, 4) or vertex id (kinds 2, 3) to a shard id. Returns
    ``{(iteration, phase, src, dst): bytes}`` for nonlocal messages, and the
    raw message counts per phase.
    """
    out = defaultdict(int)
    raw = defaultdict(int)

    def send(it, phase, s, d):
        raw[phase] += 1
        if node_of[s] != node_of[d]:
            out[(it, phase, s, d)] += word

    for it, (active, changed) in enumerate(rounds, start=1):
        processed = [e for e, (s, d, w) in enumerate(edges) if s in active]
        seen = set()
        for e in processed:
            u = edges[e][0]
            key = (u, shard_of[1][e])
            if key not in seen:
                seen.add(key)
                send(it, 0, shard_of[1][e], shard_of[2][u])
        for e in processed:
            u = edges[e][0]
            send(it, 0, shard_of[2][u], shard_of[4][e])
        for e in processed:
            v = edges[e][1]
            send(it, 1, shard_of[1][e], shard_of[3][v])
            send(it, 1, shard_of[4][e], shard_of[3][v])
        for v in sorted(changed):
            send(it, 2, shard_of[3][v], shard_of[2][v])
    return dict(out), dict(raw)
