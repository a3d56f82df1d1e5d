"""Static matplotlib figures written to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path):
    kw = {}
    suffix = str(path).rsplit(".", 1)[-1].lower()
    if suffix == "png":
        kw["metadata"] = _META
    elif suffix in ("svg", "pdf"):
        kw["metadata"] = {"Date": None} if suffix == "svg" else {"CreationDate": None}
    fig.savefig(path, dpi=150, **kw)
    plt.close(fig)


def plot_curve(x, y, path, title: str = "", circles=(), dashed=()):
    """Profile curve with optional solid and dashed overlay circles."""
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(x, y, lw=0.8, color="k")
    t = np.linspace(0, 2 * np.pi, 400)
    for r in circles:
        ax.plot(r * np.cos(t), r * np.sin(t), lw=0.5, color="0.6")
    for r in dashed:
        ax.plot(r * np.cos(t), r * np.sin(t), lw=0.6, color="0.4", ls="--")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title, fontsize=9)
    _save(fig, path)


def plot_scan(a, C, region, path):
    """Moduli map: one marker per grid cell, coloured by region tag."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    tags = sorted(set(region))
    cmap = plt.get_cmap("tab10")
    for i, tag in enumerate(tags):
        sel = [j for j, r in enumerate(region) if r == tag]
        ax.scatter(np.asarray(a)[sel], np.asarray(C)[sel], s=8, color=cmap(i % 10), label=tag)
    ax.set_xlabel("a")
    ax.set_ylabel("C")
    ax.legend(fontsize=7, loc="best")
    _save(fig, path)
