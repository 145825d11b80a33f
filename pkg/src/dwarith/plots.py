"""Figures written next to CSV outputs."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def figure_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".png")


def plot_bench(records, out) -> Path:
    """Normalized runtime against size, one line per configuration."""
    series = defaultdict(list)
    for r in records:
        name = r.backend + (f"/{r.mode}/{r.variant}" if r.variant else "")
        series[(r.kernel, name, r.algo)].append((r.size, r.normalized_ns))
    fig, ax = plt.subplots(figsize=(6, 4))
    for (kernel, name, algo), pts in sorted(series.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"{kernel} {name} {algo}")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("size")
    unit = "butterfly" if records and all(r.kernel == "ntt" for r in records) else "element"
    ax.set_ylabel(f"ns per {unit}")
    if series:
        ax.legend(fontsize="small")
    fig.tight_layout()
    path = figure_path(out)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_sol(rows, out) -> Path:
    """Measured and projected runtime per size, with baselines as markers."""
    measured, projected, baselines = defaultdict(dict), defaultdict(dict), defaultdict(dict)
    for r in rows:
        measured[r["kernel"]][r["size"]] = r["measured_ns"]
        projected[(r["kernel"], r["target"])][r["size"]] = r["sol_ns"]
        if r["baseline"]:
            baselines[(r["kernel"], r["baseline"])][r["size"]] = r["baseline_ns"]
    fig, ax = plt.subplots(figsize=(6, 4))
    for kernel, pts in sorted(measured.items()):
        xs = sorted(pts)
        ax.plot(xs, [pts[x] for x in xs], marker="o", label=f"{kernel} measured")
    for (kernel, target), pts in sorted(projected.items()):
        xs = sorted(pts)
        ax.plot(xs, [pts[x] for x in xs], marker="s", linestyle="--", label=f"{kernel} SOL {target}")
    for (kernel, name), pts in sorted(baselines.items()):
        xs = sorted(pts)
        ax.scatter(xs, [pts[x] for x in xs], marker="x", label=f"{kernel} {name}")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("size")
    ax.set_ylabel("ns per call")
    ax.set_title("speed-of-light projection (idealized)")
    if rows:
        ax.legend(fontsize="small")
    fig.tight_layout()
    path = figure_path(out)
    fig.savefig(path)
    plt.close(fig)
    return path
