"""Shard placement on a NoC grid.

A :class:`TopologyGraph` records which shards talk to each other (``f_ij``).
Placing its nodes on grid cells to minimise ``sum f_ij * cost(cell_i, cell_j)``
is a quadratic assignment problem. It is solved exactly by branch and bound
for small grids and by constrained simulated annealing for large ones.
Row and column constraints keep each data-structure kind in its own region
of the chip.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, TraceMismatch
from .partition import EDGE_KINDS, EDGE_PROP, EDGE_TABLE, VERTEX_KINDS

MESH = "mesh"
FBFLY = "fbfly"
TOPOLOGIES = (MESH, FBFLY)
COST_MODES = ("paper", "corrected")
CONSTRAINT_MODES = ("banded", "literal", "none")

PAPER_LITERAL = "paper_literal"
TRAFFIC_WEIGHTED = "traffic_weighted"


@dataclass(frozen=True)
class GridSpec:
    """``width`` columns (x) by ``height`` rows (y); ``cost_mode`` only matters for fbfly."""

    width: int
    height: int
    topology: str = MESH
    cost_mode: str = "paper"

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.cost_mode not in COST_MODES:
            raise ValueError(f"unknown cost mode {self.cost_mode!r}")

    @property
    def num_cells(self):
        return self.width * self.height

    def cells(self):
        """All coordinates in lexicographic (x, y) order."""
        return [(x, y) for x in range(self.width) for y in range(self.height)]

    def contains(self, xy):
        return 0 <= xy[0] < self.width and 0 <= xy[1] < self.height


@dataclass(frozen=True)
class TopoNode:
    shard_id: int
    index: int
    rank: int


class TopologyGraph:
    """Nodes plus a symmetric affinity matrix with zero diagonal."""

    def __init__(self, nodes, weights, mode=PAPER_LITERAL):
        self.nodes = list(nodes)
        w = np.array(weights, dtype=np.float64)
        if w.shape != (len(self.nodes), len(self.nodes)):
            raise ValueError("weight matrix does not match node count")
        if not np.array_equal(w, w.T):
            raise ValueError("affinity weights must be symmetric")
        if np.any(np.diag(w) != 0) or np.any(w < 0):
            raise ValueError("affinity weights must be nonnegative with a zero diagonal")
        w.setflags(write=False)
        self.weights = w
        self.mode = mode
        self._pos = {n.shard_id: i for i, n in enumerate(self.nodes)}

    def __len__(self):
        return len(self.nodes)

    def node_index(self, shard_id):
        return self._pos[shard_id]

    def edges(self):
        """Unordered pairs ``(i, j, f_ij)`` with ``i < j`` and ``f_ij > 0``."""
        ii, jj = np.nonzero(np.triu(self.weights, 1))
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(ii, jj)]

    def neighbors(self):
        return [[(int(j), float(self.weights[i, j])) for j in np.flatnonzero(self.weights[i])]
                for i in range(len(self.nodes))]

    def with_weight(self, i, j, w):
        m = self.weights.copy()
        m[i, j] = m[j, i] = w
        return TopologyGraph(self.nodes, m, self.mode)


def build_topology_graph(pmap, mode=PAPER_LITERAL, trace=None, include_apply=True):
    """Affinity graph over the shards of ``pmap``.

    ``paper_literal`` links every edge-kind shard (ET, eprop) to every
    vertex-kind shard (vprop, vtemp) of the same co-rank group with weight 1.
    ``traffic_weighted`` uses the bytes each shard pair exchanges in ``trace``
    in either direction. Apply-phase bytes are included unless
    ``include_apply`` is off.
    """
    nodes = [TopoNode(s.id, s.kind, pmap.group_rank(s.cls)) for s in pmap.shards]
    n = len(nodes)
    w = np.zeros((n, n))
    if mode == PAPER_LITERAL:
        for i, a in enumerate(nodes):
            if a.index not in EDGE_KINDS:
                continue
            for j, b in enumerate(nodes):
                if b.index in VERTEX_KINDS and a.rank == b.rank:
                    w[i, j] = w[j, i] = 1.0
    elif mode == TRAFFIC_WEIGHTED:
        if trace is None:
            raise ValueError("traffic_weighted mode needs a trace")
        unknown = {s for s in trace.shard_ids() if not 0 <= s < n}
        if unknown:
            raise TraceMismatch(f"trace references shards {sorted(unknown)[:5]} unknown to the partition")
        keep = np.ones(len(trace), dtype=bool) if include_apply else trace.phase != 2
        np.add.at(w, (trace.src_shard[keep], trace.dst_shard[keep]), trace.bytes[keep])
        w = w + w.T
        np.fill_diagonal(w, 0.0)
    else:
        raise ValueError(f"unknown topology-graph mode {mode!r}")
    return TopologyGraph(nodes, w, mode)


def cost(topology, a, b, cost_mode="paper"):
    """Hop distance between two cells.

    Mesh is L1. Flattened butterfly in ``corrected`` mode costs one hop per
    differing dimension; in ``paper`` mode it uses L1 like the mesh.
    """
    if topology == FBFLY and cost_mode == "corrected":
        return int(a[0] != b[0]) + int(a[1] != b[1])
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def distance_matrix(grid):
    cells = grid.cells()
    return np.array([[cost(grid.topology, a, b, grid.cost_mode) for b in cells] for a in cells],
                    dtype=np.float64)


# -- constraints ------------------------------------------------------------

def _rules(index, grid, mode):
    """(predicate, description) pairs a node of ``index`` must satisfy."""
    k = grid.height
    rules = []
    if mode == "none":
        return rules
    if index == EDGE_TABLE:
        rules.append((lambda x, y: y > 0, "y > 0"))
        if mode == "banded":
            rules.append((lambda x, y: y >= k // 2, f"y >= {k // 2} (upper band)"))
    elif index == EDGE_PROP:
        rules.append((lambda x, y: y < k - 1, f"y < {k - 1}"))
        if mode == "banded":
            rules.append((lambda x, y: y <= (k - 1) // 2, f"y <= {(k - 1) // 2} (lower band)"))
    elif index in VERTEX_KINDS:
        rules.append((lambda x, y: 0 < y < k - 1, f"0 < y < {k - 1}"))
        rules.append((lambda x, y: x > 0, "x > 0"))
    return rules


def allowed(index, xy, grid, mode="banded"):
    return all(pred(*xy) for pred, _ in _rules(index, grid, mode))


def check_constraints(p, nodes, grid, mode="banded"):
    """All violations of bounds, injectivity and the per-kind row/column rules.

    ``p`` is a :class:`Placement` or a sequence of coordinates aligned with ``nodes``.
    """
    coords = p.coords if isinstance(p, Placement) else list(p)
    out = []
    seen = {}
    for node, xy in zip(nodes, coords):
        xy = tuple(xy)
        if not grid.contains(xy):
            out.append(f"shard {node.shard_id}: {xy} outside {grid.width}x{grid.height} grid")
            continue
        if xy in seen:
            out.append(f"shard {node.shard_id}: {xy} already holds shard {seen[xy]}")
        else:
            seen[xy] = node.shard_id
        for pred, desc in _rules(node.index, grid, mode):
            if not pred(*xy):
                out.append(f"shard {node.shard_id} (index {node.index}) at {xy}: requires {desc}")
    if len(coords) != len(nodes):
        out.append(f"{len(coords)} coordinates for {len(nodes)} nodes")
    return out


class _Feasibility:
    """Hall's condition on the node-kind / free-cell bipartite graph.

    Nodes of one index share an allowed set, so checking every subset of the
    (at most four) indices is exact.
    """

    def __init__(self, tg, grid, mode):
        self.indices = sorted({n.index for n in tg.nodes})
        self.bit = {ix: 1 << b for b, ix in enumerate(self.indices)}
        self.cells = grid.cells()
        self.cell_mask = []
        for xy in self.cells:
            m = 0
            for ix in self.indices:
                if allowed(ix, xy, grid, mode):
                    m |= self.bit[ix]
            self.cell_mask.append(m)
        self.node_bit = [self.bit[n.index] for n in tg.nodes]
        full = (1 << len(self.indices)) - 1
        self.subsets = list(range(1, full + 1))
        self.free_by_mask = [0] * (full + 1)
        self.need = [0] * (full + 1)
        for m in self.cell_mask:
            self.free_by_mask[m] += 1
        for b in self.node_bit:
            self.need[b] += 1
        self.kind_bits = [self.bit[ix] for ix in self.indices]

    def take(self, node, cell):
        self.free_by_mask[self.cell_mask[cell]] -= 1
        self.need[self.node_bit[node]] -= 1

    def release(self, node, cell):
        self.free_by_mask[self.cell_mask[cell]] += 1
        self.need[self.node_bit[node]] += 1

    def ok(self):
        for s in self.subsets:
            demand = sum(self.need[b] for b in self.kind_bits if b & s)
            if demand == 0:
                continue
            supply = sum(c for m, c in enumerate(self.free_by_mask) if m & s)
            if demand > supply:
                return False
        return True


# -- placements -------------------------------------------------------------

@dataclass(frozen=True)
class Placement:
    nodes: tuple
    coords: tuple
    objective: float
    strategy: str = ""

    def coord_of(self, shard_id):
        for n, xy in zip(self.nodes, self.coords):
            if n.shard_id == shard_id:
                return xy
        raise KeyError(shard_id)

    def as_dict(self):
        return {n.shard_id: xy for n, xy in zip(self.nodes, self.coords)}


def placement_objective(tg, coords, grid):
    """``sum over unordered pairs f_ij * cost``, accumulated in (i, j) order."""
    total = 0.0
    for i, j, w in tg.edges():
        total += w * cost(grid.topology, coords[i], coords[j], grid.cost_mode)
    return total


def _finish(tg, coords, grid, strategy):
    coords = tuple(tuple(int(v) for v in c) for c in coords)
    return Placement(tuple(tg.nodes), coords, placement_objective(tg, coords, grid), strategy)


def _require_room(tg, grid):
    if len(tg) > grid.num_cells:
        raise Infeasible(f"{len(tg)} nodes do not fit a {grid.width}x{grid.height} grid")


def solve_placement_exact(tg, grid, constraints="banded", branch_and_bound=True, exhaustive_threshold=9):
    """Minimum-objective placement satisfying ``constraints``.

    Nodes are assigned in list order, cells tried in lexicographic order, and
    only strictly better solutions replace the incumbent, so the result is the
    lexicographically smallest optimal coordinate vector.
    """
    _require_room(tg, grid)
    if not branch_and_bound and grid.num_cells > exhaustive_threshold:
        raise ValueError(f"plain enumeration limited to {exhaustive_threshold} cells; enable branch_and_bound")
    n = len(tg)
    if n == 0:
        return Placement((), (), 0.0, "exact")
    cells = grid.cells()
    dist = distance_matrix(grid).tolist()
    w = tg.weights.tolist()
    allowed_cells = [[c for c, xy in enumerate(cells) if allowed(node.index, xy, grid, constraints)]
                     for node in tg.nodes]
    feas = _Feasibility(tg, grid, constraints)
    if not feas.ok():
        raise Infeasible("constraints admit no assignment of nodes to cells")

    # earlier neighbours of each node, for the incremental cost
    back = [[(j, w[i][j]) for j in range(i) if w[i][j] > 0] for i in range(n)]
    # total weight among nodes >= i; distinct cells are at least one hop apart
    tail = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        tail[i] = tail[i + 1] + sum(w[i][j] for j in range(i + 1, n))

    pos = [-1] * n
    used = [False] * len(cells)
    best = [math.inf, None]

    def lower_bound(i):
        # unassigned nodes: cheapest free cell against assigned neighbours
        lb = tail[i]
        for k in range(i, n):
            links = [(pos[j], w[k][j]) for j in range(i) if w[k][j] > 0]
            if not links:
                continue
            cheapest = math.inf
            for c in allowed_cells[k]:
                if used[c]:
                    continue
                s = 0.0
                for pc, wt in links:
                    s += wt * dist[c][pc]
                if s < cheapest:
                    cheapest = s
            if cheapest == math.inf:
                return math.inf
            lb += cheapest
        return lb

    def search(i, partial):
        if i == n:
            if partial < best[0]:
                best[0] = partial
                best[1] = list(pos)
            return
        for c in allowed_cells[i]:
            if used[c]:
                continue
            add = 0.0
            for j, wt in back[i]:
                add += wt * dist[c][pos[j]]
            total = partial + add
            if total >= best[0]:
                continue
            pos[i] = c
            used[c] = True
            feas.take(i, c)
            if feas.ok() and (not branch_and_bound or total + lower_bound(i + 1) < best[0]):
                search(i + 1, total)
            feas.release(i, c)
            used[c] = False
            pos[i] = -1

    search(0, 0.0)
    if best[1] is None:
        raise Infeasible("constraints admit no assignment of nodes to cells")
    return _finish(tg, [cells[c] for c in best[1]], grid, "exact")


def _order_for_layout(tg):
    group_weight = {}
    for node, row in zip(tg.nodes, tg.weights):
        group_weight[node.rank] = group_weight.get(node.rank, 0.0) + float(row.sum())
    layout_index = {2: 0, 3: 1, 1: 2, 4: 3}
    return sorted(range(len(tg)), key=lambda i: (-group_weight[tg.nodes[i].rank], tg.nodes[i].rank,
                                                 layout_index.get(tg.nodes[i].index, 4),
                                                 tg.nodes[i].shard_id))


def banded_initial_layout(tg, grid, constraints="banded"):
    """Greedy constraint-respecting layout grown outward from the grid centre.

    Heavier co-rank groups go first. Each node takes the free legal cell that
    is cheapest against its already-placed partners, with ties going to the
    cell nearest the centre. A cell is skipped if taking it would leave the
    remaining nodes without room.
    """
    _require_room(tg, grid)
    cells = grid.cells()
    dist = distance_matrix(grid)
    feas = _Feasibility(tg, grid, constraints)
    if not feas.ok():
        raise Infeasible("constraints admit no assignment of nodes to cells")
    cx, cy = (grid.width - 1) / 2.0, (grid.height - 1) / 2.0
    centre = [(x - cx) ** 2 + (y - cy) ** 2 for x, y in cells]
    nbrs = tg.neighbors()
    pos = [-1] * len(tg)
    used = [False] * len(cells)
    for i in _order_for_layout(tg):
        scored = []
        for c, xy in enumerate(cells):
            if used[c] or not allowed(tg.nodes[i].index, xy, grid, constraints):
                continue
            s = sum(wt * dist[c, pos[j]] for j, wt in nbrs[i] if pos[j] >= 0)
            scored.append((s, centre[c], c))
        scored.sort()
        for _, _, c in scored:
            feas.take(i, c)
            if feas.ok():
                pos[i] = c
                used[c] = True
                break
            feas.release(i, c)
        else:
            raise Infeasible(f"no legal cell left for shard {tg.nodes[i].shard_id}")
    return [cells[c] for c in pos]


def solve_placement_heuristic(tg, grid, seed=0, budget=50_000, constraints="banded", initial=None):
    """Simulated annealing from :func:`banded_initial_layout` using legal moves only.

    A move relocates one node to another legal cell, swapping with its
    occupant when that occupant may legally take the vacated cell. The best
    layout seen is returned, so the result never scores worse than the start.
    """
    _require_room(tg, grid)
    n = len(tg)
    if n == 0:
        return Placement((), (), 0.0, "heuristic")
    cells = grid.cells()
    index_of = {xy: c for c, xy in enumerate(cells)}
    start = initial if initial is not None else banded_initial_layout(tg, grid, constraints)
    pos = [index_of[tuple(xy)] for xy in start]
    if budget <= 0:
        return _finish(tg, start, grid, "heuristic")

    dist = distance_matrix(grid).tolist()
    nbrs = tg.neighbors()
    legal = [[allowed(tg.nodes[i].index, xy, grid, constraints) for xy in cells] for i in range(n)]
    legal_cells = [[c for c in range(len(cells)) if legal[i][c]] for i in range(n)]
    occupant = [-1] * len(cells)
    for i, c in enumerate(pos):
        occupant[c] = i

    def node_cost(i, c, skip):
        return sum(wt * dist[c][pos[j]] for j, wt in nbrs[i] if j != skip)

    def delta(a, q):
        p = pos[a]
        b = occupant[q]
        d = node_cost(a, q, b) - node_cost(a, p, b)
        if b >= 0:
            d += node_cost(b, p, a) - node_cost(b, q, a)
        return d

    rng = random.Random(seed)

    def propose():
        a = rng.randrange(n)
        choices = legal_cells[a]
        if len(choices) < 2:
            return None
        q = choices[rng.randrange(len(choices))]
        if q == pos[a]:
            return None
        b = occupant[q]
        if b >= 0 and not legal[b][pos[a]]:
            return None
        return a, q

    samples = []
    for _ in range(min(200, budget)):
        mv = propose()
        if mv is not None:
            d = delta(*mv)
            if d > 0:
                samples.append(d)
    t0 = (sum(samples) / len(samples)) if samples else 1.0
    t_end = t0 * 1e-3
    alpha = (t_end / t0) ** (1.0 / max(budget - 1, 1))

    current = placement_objective(tg, [cells[c] for c in pos], grid)
    best_val, best_pos = current, list(pos)
    temp = t0
    for _ in range(budget):
        mv = propose()
        if mv is not None:
            a, q = mv
            d = delta(a, q)
            if d <= 0 or rng.random() < math.exp(-d / temp):
                p = pos[a]
                b = occupant[q]
                pos[a], occupant[q] = q, a
                occupant[p] = b
                if b >= 0:
                    pos[b] = p
                current += d
                if current < best_val - 1e-9:
                    best_val, best_pos = current, list(pos)
        temp *= alpha

    coords = [cells[c] for c in best_pos]
    result = _finish(tg, coords, grid, "heuristic")
    initial_obj = placement_objective(tg, start, grid)
    if result.objective > initial_obj:
        return _finish(tg, start, grid, "heuristic")
    return result


def random_placement(tg, grid, seed=0):
    """Uniform random injection of nodes into cells; constraints are ignored."""
    _require_room(tg, grid)
    cells = grid.cells()
    rng = np.random.default_rng(seed)
    chosen = rng.permutation(len(cells))[: len(tg)]
    return _finish(tg, [cells[c] for c in chosen], grid, "random")

