"""Experiment configuration: an INI file read with :mod:`configparser`.

Grammar (every key optional unless noted; ``#`` and ``;`` start comments)::

    [graph]
    path = edges.txt          # SNAP edge list; omit to generate one
    weighted = false
    densify = false
    name = demo
    num_vertices = 16384      # generator settings, used when path is unset
    avg_degree = 8
    skew = 1.5
    seed = 7
    max_weight = 1

    [algorithm]
    names = bfs, sssp, pagerank
    source = auto             # vertex id, or auto = highest out-degree vertex
    damping = 0.85
    epsilon = 1e-6
    max_iterations = 100
    reduce_all = false

    [partition]
    clusters = 16
    capacity_bytes = 1048576  # or capacity_edges / capacity_vertices
    cyclic = position         # position | vertex_id

    [grid]
    width = 8
    height = 8
    topologies = mesh         # mesh, fbfly
    cost_mode = paper         # paper | corrected
    constraints = banded      # banded | literal | none

    [placement]
    strategies = heuristic, random
    affinity = paper_literal  # paper_literal | traffic_weighted
    budget = 50000
    heuristic_seed = 0
    seeds = 0-49              # comma list, ranges allowed

    [noc]
    frequency = 1e9           # Hz
    packet_size = 8           # bytes
    per_hop_latency = 1e-9    # seconds
    ports = 4
    energy_per_hop = 0.1e-12  # joules per packet per hop
    energy_per_injection = 0.05e-12

    [output]
    directory = results
    jobs = 1

Relative graph paths resolve against the config file's directory; the output
directory resolves against the working directory.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError
from .noc import NoCParams
from .partition import capacities_from_bytes
from .placement import CONSTRAINT_MODES, COST_MODES, PAPER_LITERAL, TOPOLOGIES, TRAFFIC_WEIGHTED

ALGORITHMS = ("bfs", "sssp", "pagerank")
STRATEGIES = ("exact", "heuristic", "random")
AFFINITIES = (PAPER_LITERAL, TRAFFIC_WEIGHTED)
EXACT_NODE_LIMIT = 12


@dataclass(frozen=True)
class ExperimentConfig:
    graph_path: str | None = None
    weighted: bool = False
    densify: bool = False
    graph_name: str = "generated"
    num_vertices: int = 1 << 14
    avg_degree: float = 8.0
    skew: float = 1.5
    graph_seed: int = 7
    max_weight: int = 1

    algorithms: tuple = ALGORITHMS
    source: int | None = None
    damping: float = 0.85
    epsilon: float = 1e-6
    max_iterations: int = 100
    reduce_all: bool = False

    clusters: int = 16
    capacity_edges: int = capacities_from_bytes()[0]
    capacity_vertices: int = capacities_from_bytes()[1]
    cyclic: str = "position"

    width: int = 8
    height: int = 8
    topologies: tuple = ("mesh",)
    cost_mode: str = "paper"
    constraints: str = "banded"

    strategies: tuple = ("heuristic", "random")
    affinity: str = PAPER_LITERAL
    budget: int = 50_000
    heuristic_seed: int = 0
    seeds: tuple = tuple(range(50))

    noc: NoCParams = field(default_factory=NoCParams)

    output_dir: str = "results"
    jobs: int = 1

    @property
    def generated(self):
        return self.graph_path is None


@dataclass
class ConfigCheck:
    """Outcome of :func:`validate_config`: the parsed config when clean, else the violations."""

    config: ExperimentConfig | None
    violations: list

    @property
    def ok(self):
        return not self.violations


_SCHEMA = {
    "graph": {"path", "weighted", "densify", "name", "num_vertices", "avg_degree", "skew", "seed", "max_weight"},
    "algorithm": {"names", "source", "damping", "epsilon", "max_iterations", "reduce_all"},
    "partition": {"clusters", "capacity_bytes", "capacity_edges", "capacity_vertices", "cyclic"},
    "grid": {"width", "height", "topologies", "cost_mode", "constraints"},
    "placement": {"strategies", "affinity", "budget", "heuristic_seed", "seeds"},
    "noc": {"frequency", "packet_size", "per_hop_latency", "ports", "energy_per_hop", "energy_per_injection"},
    "output": {"directory", "jobs"},
}


def _words(text):
    return tuple(w.strip().lower() for w in text.replace(",", " ").split() if w.strip())


_RANGE = re.compile(r"(\d+)-(\d+)")


def parse_seeds(text):
    """``"0-3, 7"`` -> ``(0, 1, 2, 3, 7)``."""
    seeds = []
    for part in text.replace(",", " ").split():
        m = _RANGE.fullmatch(part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if hi < lo:
                raise ValueError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    return tuple(seeds)


def _format_seeds(seeds):
    if seeds and list(seeds) == list(range(seeds[0], seeds[0] + len(seeds))) and len(seeds) > 2:
        return f"{seeds[0]}-{seeds[-1]}"
    return ", ".join(str(s) for s in seeds)


class _Reader:
    """Typed getters that record problems instead of raising."""

    def __init__(self, parser):
        self.parser = parser
        self.problems = []

    def get(self, section, key, convert, default):
        if not self.parser.has_option(section, key):
            return default
        raw = self.parser.get(section, key).strip()
        try:
            return convert(raw)
        except (ValueError, TypeError) as exc:
            self.problems.append(f"[{section}] {key} = {raw!r}: {exc}")
            return default


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _source(text):
    return None if text.strip().lower() == "auto" else int(text)


def _read(parser, base_dir):
    r = _Reader(parser)
    problems = r.problems
    for section in parser.sections():
        if section not in _SCHEMA:
            problems.append(f"unknown section [{section}]")
            continue
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                problems.append(f"unknown key [{section}] {key}")

    d = ExperimentConfig()
    path = r.get("graph", "path", str, None)
    if path:
        p = Path(path)
        if not p.is_absolute():
            p = base_dir / p
        path = str(p)
    capacity_bytes = r.get("partition", "capacity_bytes", int, None)
    cap_e, cap_v = d.capacity_edges, d.capacity_vertices
    if capacity_bytes is not None:
        if capacity_bytes < 1:
            problems.append("capacity_bytes must be positive")
        else:
            cap_e, cap_v = capacities_from_bytes(capacity_bytes)
    noc_defaults = NoCParams()
    noc = {f.name: r.get("noc", f.name, type(getattr(noc_defaults, f.name)), getattr(noc_defaults, f.name))
           for f in fields(NoCParams)}

    cfg = ExperimentConfig(
        graph_path=path,
        weighted=r.get("graph", "weighted", _bool, d.weighted),
        densify=r.get("graph", "densify", _bool, d.densify),
        graph_name=r.get("graph", "name", str, Path(path).stem if path else d.graph_name),
        num_vertices=r.get("graph", "num_vertices", int, d.num_vertices),
        avg_degree=r.get("graph", "avg_degree", float, d.avg_degree),
        skew=r.get("graph", "skew", float, d.skew),
        graph_seed=r.get("graph", "seed", int, d.graph_seed),
        max_weight=r.get("graph", "max_weight", int, d.max_weight),
        algorithms=r.get("algorithm", "names", _words, d.algorithms),
        source=r.get("algorithm", "source", _source, d.source),
        damping=r.get("algorithm", "damping", float, d.damping),
        epsilon=r.get("algorithm", "epsilon", float, d.epsilon),
        max_iterations=r.get("algorithm", "max_iterations", int, d.max_iterations),
        reduce_all=r.get("algorithm", "reduce_all", _bool, d.reduce_all),
        clusters=r.get("partition", "clusters", int, d.clusters),
        capacity_edges=r.get("partition", "capacity_edges", int, cap_e),
        capacity_vertices=r.get("partition", "capacity_vertices", int, cap_v),
        cyclic=r.get("partition", "cyclic", str.lower, d.cyclic),
        width=r.get("grid", "width", int, d.width),
        height=r.get("grid", "height", int, d.height),
        topologies=r.get("grid", "topologies", _words, d.topologies),
        cost_mode=r.get("grid", "cost_mode", str.lower, d.cost_mode),
        constraints=r.get("grid", "constraints", str.lower, d.constraints),
        strategies=r.get("placement", "strategies", _words, d.strategies),
        affinity=r.get("placement", "affinity", str.lower, d.affinity),
        budget=r.get("placement", "budget", int, d.budget),
        heuristic_seed=r.get("placement", "heuristic_seed", int, d.heuristic_seed),
        seeds=r.get("placement", "seeds", parse_seeds, d.seeds),
        noc=noc,
        output_dir=r.get("output", "directory", str, d.output_dir),
        jobs=r.get("output", "jobs", int, d.jobs),
    )
    return cfg, problems


def estimate_shards(cfg, num_vertices=None, num_edges=None):
    """Upper estimate of the shard count: four kinds per class plus capacity overflow.

    Classes are assumed to carry up to 1.5x their mean edge load.
    """
    if num_vertices is None:
        num_vertices = cfg.num_vertices
        num_edges = int(round(cfg.num_vertices * cfg.avg_degree))
    k = max(cfg.clusters, 1)
    per_class_v = math.ceil(num_vertices / k)
    per_class_e = math.ceil(1.5 * num_edges / k)
    vshards = max(1, math.ceil(per_class_v / max(cfg.capacity_vertices, 1)))
    eshards = max(1, math.ceil(per_class_e / max(cfg.capacity_edges, 1)))
    return min(k, max(num_vertices, 1)) * 2 * (vshards + eshards)


def semantic_violations(cfg):
    """Every semantic problem with ``cfg``, collected rather than fail-fast."""
    out = []
    if cfg.graph_path is not None:
        if not Path(cfg.graph_path).is_file():
            out.append(f"graph file not found: {cfg.graph_path}")
    else:
        if cfg.num_vertices < 1:
            out.append("num_vertices must be >= 1")
        if cfg.avg_degree < 0:
            out.append("avg_degree must be >= 0")
        if cfg.skew <= 0:
            out.append("skew must be > 0")
        if cfg.max_weight < 1:
            out.append("max_weight must be >= 1")
    if not cfg.algorithms:
        out.append("no algorithms selected")
    for name in cfg.algorithms:
        if name not in ALGORITHMS:
            out.append(f"unknown algorithm {name!r} (choose from {', '.join(ALGORITHMS)})")
    if not 0.0 < cfg.damping < 1.0:
        out.append(f"damping outside (0,1): {cfg.damping}")
    if not cfg.epsilon > 0:
        out.append(f"epsilon must be > 0: {cfg.epsilon}")
    if cfg.max_iterations < 1:
        out.append("max_iterations must be >= 1")
    if cfg.source is not None and cfg.source < 0:
        out.append(f"source vertex must be nonnegative: {cfg.source}")
    if cfg.source is not None and cfg.generated and cfg.source >= cfg.num_vertices:
        out.append(f"source vertex {cfg.source} outside the {cfg.num_vertices}-vertex graph")
    if cfg.clusters < 1:
        out.append("clusters must be >= 1")
    if cfg.capacity_edges < 1 or cfg.capacity_vertices < 1:
        out.append("shard capacities must be >= 1")
    if cfg.cyclic not in ("position", "vertex_id"):
        out.append(f"cyclic must be position or vertex_id, not {cfg.cyclic!r}")
    if cfg.width < 1 or cfg.height < 1:
        out.append("grid dimensions must be positive")
    if not cfg.topologies:
        out.append("no topologies selected")
    for t in cfg.topologies:
        if t not in TOPOLOGIES:
            out.append(f"unknown topology {t!r}")
    if cfg.cost_mode not in COST_MODES:
        out.append(f"unknown cost mode {cfg.cost_mode!r}")
    if cfg.constraints not in CONSTRAINT_MODES:
        out.append(f"unknown constraint mode {cfg.constraints!r}")
    if not cfg.strategies:
        out.append("no placement strategies selected")
    for s in cfg.strategies:
        if s not in STRATEGIES:
            out.append(f"unknown strategy {s!r}")
    if cfg.affinity not in AFFINITIES:
        out.append(f"unknown affinity mode {cfg.affinity!r}")
    if cfg.budget < 0:
        out.append("budget must be >= 0")
    if "random" in cfg.strategies and not cfg.seeds:
        out.append("random strategy needs a nonempty seed list")
    if cfg.jobs < 1:
        out.append("jobs must be >= 1")
    if isinstance(cfg.noc, dict):
        try:
            NoCParams(**cfg.noc)
        except (TypeError, ValueError) as exc:
            out.append(f"noc: {exc}")

    if cfg.width >= 1 and cfg.height >= 1 and cfg.clusters >= 1 and cfg.capacity_edges >= 1 \
            and cfg.capacity_vertices >= 1:
        nv = ne = None
        if cfg.graph_path is not None and Path(cfg.graph_path).is_file():
            nv, ne = _peek_edge_list(cfg.graph_path)
        if cfg.graph_path is None or nv is not None:
            need = estimate_shards(cfg, nv, ne)
            if need > cfg.width * cfg.height:
                out.append(f"grid too small: {cfg.width}x{cfg.height} has {cfg.width * cfg.height} cells, "
                           f"about {need} shards expected (K={cfg.clusters} x 4 kinds plus overflow)")
            if "exact" in cfg.strategies and need > EXACT_NODE_LIMIT:
                out.append(f"exact strategy limited to {EXACT_NODE_LIMIT} shards, about {need} expected")
    return out


def _peek_edge_list(path):
    """Rough (vertices, edges) of an edge-list file without parsing it fully."""
    vertices, edges = 0, 0
    with open(path) as fh:
        for line in fh:
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            edges += 1
            parts = text.split()
            try:
                vertices = max(vertices, int(parts[0]) + 1, int(parts[1]) + 1)
            except (ValueError, IndexError):
                pass
    return vertices, edges


def _finalize(cfg):
    noc = cfg.noc if isinstance(cfg.noc, NoCParams) else None
    if noc is None:
        try:
            noc = NoCParams(**cfg.noc)
        except (TypeError, ValueError):
            noc = NoCParams()
    return replace(cfg, noc=noc)


def parse_config_text(text, base_dir="."):
    """Parse INI text; raises :class:`ConfigError` only for syntax errors."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    cfg, problems = _read(parser, Path(base_dir))
    violations = problems + semantic_violations(cfg)
    return _finalize(cfg), violations


def validate_config(path):
    """Parse and check ``path``; every violation is reported, not just the first.

    Raises :class:`ConfigError` when the file is unreadable or not valid INI.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg, violations = parse_config_text(text, path.parent)
    return ConfigCheck(None if violations else cfg, violations)


def load_config(path):
    check = validate_config(path)
    if not check.ok:
        raise ConfigError("invalid config:\n  " + "\n  ".join(check.violations))
    return check.config


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    return str(v)


def format_config(cfg):
    """Canonical INI text for ``cfg``; parsing it back yields an equal config."""
    sections = {
        "graph": [("path", cfg.graph_path), ("weighted", cfg.weighted), ("densify", cfg.densify),
                  ("name", cfg.graph_name), ("num_vertices", cfg.num_vertices), ("avg_degree", cfg.avg_degree),
                  ("skew", cfg.skew), ("seed", cfg.graph_seed), ("max_weight", cfg.max_weight)],
        "algorithm": [("names", cfg.algorithms), ("source", "auto" if cfg.source is None else cfg.source),
                      ("damping", cfg.damping), ("epsilon", cfg.epsilon),
                      ("max_iterations", cfg.max_iterations), ("reduce_all", cfg.reduce_all)],
        "partition": [("clusters", cfg.clusters), ("capacity_edges", cfg.capacity_edges),
                      ("capacity_vertices", cfg.capacity_vertices), ("cyclic", cfg.cyclic)],
        "grid": [("width", cfg.width), ("height", cfg.height), ("topologies", cfg.topologies),
                 ("cost_mode", cfg.cost_mode), ("constraints", cfg.constraints)],
        "placement": [("strategies", cfg.strategies), ("affinity", cfg.affinity), ("budget", cfg.budget),
                      ("heuristic_seed", cfg.heuristic_seed), ("seeds", _format_seeds(cfg.seeds))],
        "noc": [(f.name, getattr(cfg.noc, f.name)) for f in fields(NoCParams)],
        "output": [("directory", cfg.output_dir), ("jobs", cfg.jobs)],
    }
    lines = []
    for name, items in sections.items():
        lines.append(f"[{name}]")
        for key, value in items:
            if value is None:
                continue
            lines.append(f"{key} = {_fmt(value)}")
        lines.append("")
    return "\n".join(lines)
