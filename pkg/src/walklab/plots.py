"""Figure rendering for the CLI report paths (headless, SVG output)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def histogram_svg(values, path, title: str, xlabel: str, bins: int = 60) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(np.asarray(values, dtype=float), bins=bins, color="#33668c",
            edgecolor="white", linewidth=0.3)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def surface_svg(points, values, path, title: str) -> None:
    """Scatter rendering of a scalar field over continuum positions."""
    pts = np.asarray(points, dtype=float)
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    sc = ax.scatter(pts[:, 0], pts[:, 1], c=np.asarray(values, dtype=float),
                    s=4, cmap="viridis", marker="s")
    fig.colorbar(sc, ax=ax)
    ax.set_title(title)
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
