"""Static SVG bar charts for the comparison table.

Each file starts with an XML comment holding the plotted numbers as CSV, so
charts can be diffed against the table they came from. Output is
deterministic: fixed hash salt, no date stamp.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
from matplotlib.figure import Figure  # noqa: E402

import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "nocgraph"
matplotlib.rcParams["svg.fonttype"] = "path"

DATA_BEGIN = "<!-- data"
DATA_END = "-->"


def _data_block(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    return DATA_BEGIN + "\n" + "\n".join(lines) + "\n" + DATA_END + "\n"


def _save(fig, path, header, rows):
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    svg = buf.getvalue()
    block = _data_block(header, rows)
    # keep the XML declaration first
    head, sep, rest = svg.partition("?>\n")
    text = head + sep + block + rest if sep else block + svg
    with open(path, "w") as fh:
        fh.write(text)


def read_data_block(path):
    """Rows of the embedded data table, as lists of strings (header first)."""
    text = open(path).read()
    start = text.index(DATA_BEGIN) + len(DATA_BEGIN)
    end = text.index(DATA_END, start)
    return [line.split(",") for line in text[start:end].strip().splitlines()]


def _grouped_bars(ax, groups, series, values, ylabel):
    width = 0.8 / max(len(series), 1)
    x = np.arange(len(groups))
    for k, name in enumerate(series):
        ax.bar(x + (k - (len(series) - 1) / 2) * width, values[k], width, label=name)
    ax.set_xticks(x)
    ax.set_xticklabels(groups)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize="small")


def hop_count_chart(rows, path):
    """Average hop count per algorithm and strategy, one panel per topology."""
    topologies = sorted({r["topology"] for r in rows})
    fig = Figure(figsize=(4 + 2 * len(topologies), 3.5))
    data = []
    for p, topo in enumerate(topologies):
        ax = fig.add_subplot(1, len(topologies), p + 1)
        sub = [r for r in rows if r["topology"] == topo]
        algs = list(dict.fromkeys(r["algorithm"] for r in sub))
        strategies = list(dict.fromkeys(r["strategy"] for r in sub))
        vals = []
        for s in strategies:
            vals.append([next((r["avg_hop"] for r in sub if r["algorithm"] == a and r["strategy"] == s), 0.0)
                         for a in algs])
            for a, v in zip(algs, vals[-1]):
                data.append([topo, a, s, v])
        _grouped_bars(ax, algs, strategies, vals, "average hop count")
        ax.set_title(topo)
    fig.tight_layout()
    _save(fig, path, ["topology", "algorithm", "strategy", "avg_hop"], data)


def data_movement_chart(movement, path):
    """Normalized bytes per phase for each algorithm; ``movement`` maps algorithm -> {phase: value}."""
    algs = list(movement)
    phases = list(next(iter(movement.values()))) if movement else []
    fig = Figure(figsize=(5, 3.5))
    ax = fig.add_subplot(1, 1, 1)
    vals = [[movement[a][p] for a in algs] for p in phases]
    _grouped_bars(ax, algs, phases, vals, "bytes / graph size")
    data = [[a, p, movement[a][p]] for a in algs for p in phases]
    fig.tight_layout()
    _save(fig, path, ["algorithm", "phase", "normalized_bytes"], data)


def speedup_energy_chart(rows, path):
    """Speedup and energy ratio against the random baseline, per algorithm and topology."""
    opt = [r for r in rows if r["strategy"] != "random"]
    strategies = list(dict.fromkeys(r["strategy"] for r in opt))
    keys = list(dict.fromkeys((r["algorithm"], r["topology"]) for r in opt))
    labels = [f"{a}\n{t}" for a, t in keys]
    fig = Figure(figsize=(4 + 1.2 * len(keys), 3.5))
    data = []
    for p, (field, title) in enumerate((("speedup", "speedup vs random"), ("energy_ratio", "energy ratio vs random"))):
        ax = fig.add_subplot(1, 2, p + 1)
        vals = []
        for s in strategies:
            vals.append([next((r[field] for r in opt if (r["algorithm"], r["topology"]) == k
                               and r["strategy"] == s), 0.0) for k in keys])
        _grouped_bars(ax, labels, strategies, vals, title)
        ax.axhline(1.0, color="grey", linewidth=0.8)
    for r in opt:
        data.append([r["algorithm"], r["topology"], r["strategy"], r["speedup"], r["energy_ratio"]])
    fig.tight_layout()
    _save(fig, path, ["algorithm", "topology", "strategy", "speedup", "energy_ratio"], data)


def degree_chart(hist, fit, path):
    """Log-log out-degree histogram with the fitted power law."""
    pts = [(d, n) for d, n in hist.items() if d > 0 and n > 0]
    fig = Figure(figsize=(4.5, 3.5))
    ax = fig.add_subplot(1, 1, 1)
    if pts:
        d = np.array([p[0] for p in pts], dtype=float)
        n = np.array([p[1] for p in pts], dtype=float)
        ax.loglog(d, n, "o", markersize=3, label="vertices")
        if fit is not None:
            # anchor the line at the least-squares intercept
            c = np.exp(np.mean(np.log(n) + fit.alpha * np.log(d)))
            ax.loglog(d, c * d ** -fit.alpha, "-", label=f"alpha = {fit.alpha:.2f}")
        ax.legend(fontsize="small")
    ax.set_xlabel("out-degree d")
    ax.set_ylabel("n(d)")
    fig.tight_layout()
    _save(fig, path, ["degree", "count"], [[d, n] for d, n in pts])
