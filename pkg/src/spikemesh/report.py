"""Comparison reports: delimited tables, plot-data files, and rendered
figures saved alongside them.

Energy/latency figures always carry the placeholder-coefficient disclaimer;
only orderings between strategies are meaningful.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .config import TOOL_VERSION

DISCLAIMER = "cost coefficients are synthetic placeholders; compare strategies, not watts"


def write_comparison_csv(path, rows: list, cfg_hash: str, model_dict: dict):
    """One row per configuration, stable column order, commented header."""
    path = Path(path)
    if not rows:
        raise ValueError("no rows to report")
    columns = sorted(rows[0].keys())
    for row in rows:
        if sorted(row.keys()) != columns:
            raise ValueError("rows disagree on columns")
    preferred = [c for c in ("M", "label") if c in columns]
    columns = preferred + [c for c in columns if c not in preferred]
    with open(path, "w", newline="") as f:
        f.write(f"# tool=spikemesh {TOOL_VERSION}\n")
        f.write(f"# config={cfg_hash}\n")
        f.write(f"# model={json.dumps(model_dict, sort_keys=True)}\n")
        f.write(f"# note={DISCLAIMER}\n")
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
    return path


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.9g}"
    return v


def write_plot_data(path, rows: list, x: str, ys: list, cfg_hash: str):
    """Narrow x/series/value table for external plotting tools."""
    with open(path, "w", newline="") as f:
        f.write(f"# tool=spikemesh {TOOL_VERSION}\n")
        f.write(f"# config={cfg_hash}\n")
        writer = csv.writer(f)
        writer.writerow([x, "series", "value"])
        for row in rows:
            for y in ys:
                writer.writerow([row[x], y, _fmt(row[y])])
    return path


def render_comparison_figures(directory, rows: list, cfg_hash: str) -> list:
    """EDP and inter-chip traffic versus problem size, one PNG each.

    Returns the written paths.  Rendering is skipped silently for columns a
    row set does not carry.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    xs = [row["M"] for row in rows]
    written = []

    panels = [
        ("edp_js", "energy-delay product [J*s]", "edp_vs_m.png", True),
        ("inter_chip", "inter-chip deliveries", "traffic_vs_m.png", False),
        ("latency_s", "latency [s]", "latency_vs_m.png", True),
    ]
    for key, ylabel, fname, log in panels:
        series = [s for s in ("naive", "optimized") if f"{key}_{s}" in rows[0]]
        if not series:
            continue
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for s in series:
            ax.plot(xs, [row[f"{key}_{s}"] for row in rows], marker="o", label=s)
        if log:
            ax.set_yscale("log")
        ax.set_xlabel("sentences per story (M)")
        ax.set_ylabel(ylabel)
        ax.set_title(f"{ylabel} by placement strategy", fontsize=10)
        ax.legend(frameon=False)
        fig.text(0.01, 0.01, DISCLAIMER, fontsize=6, color="0.4")
        fig.tight_layout(rect=(0, 0.04, 1, 1))
        out = directory / fname
        fig.savefig(out, dpi=150, metadata={"Software": f"spikemesh {TOOL_VERSION}"})
        plt.close(fig)
        written.append(out)
    return written
