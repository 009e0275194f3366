import pytest

from nocgraph.cli import demo_config_path
from nocgraph.config import (
    ExperimentConfig,
    estimate_shards,
    format_config,
    load_config,
    parse_config_text,
    parse_seeds,
    validate_config,
)
from nocgraph.errors import ConfigError
from nocgraph.noc import NoCParams


def check(text, tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(text)
    return validate_config(p)


class TestSeeds:
    def test_ranges_and_lists(self):
        assert parse_seeds("0-3, 7") == (0, 1, 2, 3, 7)
        assert parse_seeds("5") == (5,)
        assert parse_seeds("") == ()

    def test_bad(self):
        with pytest.raises(ValueError):
            parse_seeds("4-2")
        with pytest.raises(ValueError):
            parse_seeds("x")


class TestValidate:
    def test_grid_too_small(self, tmp_path):
        c = check("[partition]\nclusters = 4\n[grid]\nwidth = 2\nheight = 2\n", tmp_path)
        assert not c.ok and c.config is None
        assert any(v.startswith("grid too small") for v in c.violations)

    def test_damping(self, tmp_path):
        c = check("[algorithm]\ndamping = 1.2\n", tmp_path)
        assert any("damping outside (0,1)" in v for v in c.violations)

    def test_reports_everything_at_once(self, tmp_path):
        text = ("[algorithm]\ndamping = 1.2\nnames = bfs, dfs\n[grid]\nwidth = 2\nheight = 2\n"
                "[placement]\nstrategies = random\nseeds =\n[noc]\npacket_size = 0\n[extra]\nx = 1\n")
        v = check(text, tmp_path).violations
        assert any("damping" in s for s in v)
        assert any("'dfs'" in s for s in v)
        assert any("grid too small" in s for s in v)
        assert any("seed list" in s for s in v)
        assert any("packet_size" in s for s in v)
        assert any("[extra]" in s for s in v)

    def test_type_errors_are_violations(self, tmp_path):
        v = check("[partition]\nclusters = many\n", tmp_path).violations
        assert len(v) == 1 and "clusters" in v[0]

    def test_missing_graph_file(self, tmp_path):
        v = check("[graph]\npath = nowhere.txt\n", tmp_path).violations
        assert any("not found" in s for s in v)

    def test_graph_path_relative_to_config(self, tmp_path):
        (tmp_path / "g.txt").write_text("0 1\n1 2\n")
        c = check("[graph]\npath = g.txt\n[partition]\nclusters = 1\n[grid]\nwidth = 3\nheight = 3\n", tmp_path)
        assert c.ok, c.violations
        assert c.config.graph_path == str(tmp_path / "g.txt")
        assert c.config.graph_name == "g"

    def test_exact_needs_a_small_instance(self, tmp_path):
        v = check("[placement]\nstrategies = exact\n", tmp_path).violations
        assert any("exact strategy" in s for s in v)

    def test_syntax_error(self, tmp_path):
        with pytest.raises(ConfigError):
            check("no section header\n", tmp_path)

    def test_unreadable(self, tmp_path):
        with pytest.raises(ConfigError):
            validate_config(tmp_path / "missing.ini")

    def test_load_raises_on_violations(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text("[algorithm]\ndamping = 2\n")
        with pytest.raises(ConfigError):
            load_config(p)


class TestCanonical:
    def test_demo_is_valid_and_round_trips(self, tmp_path):
        c = validate_config(demo_config_path())
        assert c.ok, c.violations
        cfg = c.config
        assert cfg.clusters == 16 and cfg.seeds == tuple(range(50))
        assert cfg.algorithms == ("bfs", "sssp", "pagerank")
        text = format_config(cfg)
        again, violations = parse_config_text(text)
        assert violations == []
        assert again == cfg
        assert format_config(again) == text

    def test_defaults(self):
        cfg, violations = parse_config_text("")
        assert violations == []
        assert cfg == ExperimentConfig()
        assert cfg.noc == NoCParams()

    def test_capacity_bytes(self):
        cfg, _ = parse_config_text("[partition]\ncapacity_bytes = 160\n")
        assert (cfg.capacity_edges, cfg.capacity_vertices) == (10, 20)


def test_shard_estimate_covers_demo():
    from nocgraph.graph import generate_power_law_graph
    from nocgraph.partition import partition

    cfg = ExperimentConfig()
    g = generate_power_law_graph(cfg.num_vertices, cfg.avg_degree, cfg.skew, cfg.graph_seed)
    actual = partition(g, cfg.clusters, cfg.capacity_edges, cfg.capacity_vertices).num_shards
    assert actual <= estimate_shards(cfg) <= cfg.width * cfg.height
