"""Graph-engine traffic on a network-on-chip: partition, place, replay, compare."""

from .engine import bfs_spec, emit_traces, normalized_data_movement, pagerank_spec, run_algorithm, sssp_spec
from .graph import Graph, generate_power_law_graph, load_edge_list
from .noc import NoCParams, compare, replay
from .partition import partition
from .placement import GridSpec, build_topology_graph, random_placement, solve_placement_exact, \
    solve_placement_heuristic

__version__ = "0.1.0"
