"""Standalone SVG figures (matplotlib, Agg backend, reproducible output)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "growthrate"
_META = {"Date": None}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def plot_tower(result: dict, path) -> None:
    """Rate enclosures against word length, one series per level, with the limit rates."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for lev in result["levels"]:
        pts = [p for p in lev["points"] if p.get("hi") is not None]
        xs = [p["length"] for p in pts]
        ys = [0.5 * (p["lo"] + p["hi"]) for p in pts]
        (line,) = ax.plot(xs, ys, marker="o", label=f"level {lev['level']}")
        ax.axhline(lev["limit"], color=line.get_color(), linestyle="--", linewidth=0.8)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("length of the added words")
    ax.set_ylabel("growth rate")
    ax.legend()
    _save(fig, path)


def plot_wellorder(report: dict, path) -> None:
    """Sorted distinct rates; marker size grows with multiplicity, flagged clusters in red."""
    rows = report["rows"]
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = range(len(rows))
    ax.scatter(
        xs,
        [r["rate"] for r in rows],
        s=[12 + 6 * r["multiplicity"] for r in rows],
        c=["tab:red" if r["flagged"] else "tab:blue" for r in rows],
    )
    ax.set_xlabel("rank in sorted order")
    ax.set_ylabel("growth rate")
    _save(fig, path)


def plot_census(sizes, path, bounds=None) -> None:
    """Sphere sizes on a log scale, optionally with the Fekete upper bounds."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(range(len(sizes)), sizes, marker="o", label="s_n")
    if bounds:
        ax2 = ax.twinx()
        ax2.plot([n for n, _ in bounds], [b for _, b in bounds], color="tab:orange", label="beta_n^(1/n)")
        ax2.set_ylabel("upper bound")
    ax.set_xlabel("n")
    ax.set_ylabel("sphere size")
    _save(fig, path)
