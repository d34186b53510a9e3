"""Figures written next to the CLI's CSV/JSON output (Agg backend, PNG)."""

from __future__ import annotations

from math import sqrt
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (sqrt(5.0) - 1.0) / 2.0

STYLE = {
    "axes.labelsize": 10,
    "font.size": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "font.family": "serif",
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "svg.hashsalt": "bfmech",
}


def size(width_in: float = 5.5, ratio: float = GOLDEN):
    return (width_in, width_in * ratio)


def new(**kw):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=kw.pop("figsize", size()), **kw)
    return fig, ax


def save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        fig.tight_layout()
        # fixed metadata keeps reruns byte-stable
        fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def bound_curves(epsilons, series: dict, path, title: str = "") -> Path:
    """Guarantee against prediction error, one line per named bound."""
    fig, ax = new()
    with plt.rc_context(STYLE):
        for name, values in series.items():
            ax.plot(epsilons, values, label=name, lw=1.4)
        ax.set_xlabel("prediction error $\\varepsilon$")
        ax.set_ylabel("guarantee (fraction of optimum)")
        ax.set_xlim(min(epsilons), max(epsilons))
        ax.set_ylim(bottom=0)
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
    return save(fig, path)


def ratio_histogram(ratios, path, bound=None, mean=None, title: str = "") -> Path:
    fig, ax = new()
    with plt.rc_context(STYLE):
        ax.hist(np.asarray(ratios, dtype=float), bins=np.linspace(0, 1, 26),
                color="0.6", edgecolor="white")
        if mean is not None:
            ax.axvline(mean, color="k", lw=1.2, label=f"mean {mean:.4f}")
        if bound is not None:
            ax.axvline(bound, color="tab:red", ls="--", lw=1.2, label=f"bound {bound:.4f}")
        ax.set_xlabel("realised ratio $v(S)/v(S^*)$")
        ax.set_ylabel("trials")
        if title:
            ax.set_title(title)
        if mean is not None or bound is not None:
            ax.legend(frameon=False)
    return save(fig, path)


def witness_heatmap(matrix, highlight, path, title: str = "") -> Path:
    """Winners per grid profile; the ``highlight`` cells (the support) are outlined."""
    m = np.asarray(matrix)
    k = m.shape[0] - 1
    fig, ax = new(figsize=size(4.2, 1.0))
    with plt.rc_context(STYLE):
        im = ax.imshow(m, origin="lower", cmap="Greys", vmin=0, vmax=2)
        for a, b in highlight:
            ax.add_patch(plt.Rectangle((b - 0.5, a - 0.5), 1, 1, fill=False,
                                       ec="tab:red", lw=1.2))
        ax.set_xticks(range(k + 1))
        ax.set_yticks(range(k + 1))
        ax.set_xlabel("agent 2 cost index")
        ax.set_ylabel("agent 1 cost index")
        fig.colorbar(im, ax=ax, ticks=[0, 1, 2], label="hired agents")
        if title:
            ax.set_title(title)
    return save(fig, path)


def tune_surface(xs, ys, values, xlabel, ylabel, path, best=None) -> Path:
    fig, ax = new()
    with plt.rc_context(STYLE):
        z = np.asarray(values, dtype=float)
        if ys is None:
            ax.plot(xs, z, lw=1.4)
            ax.set_xlabel(xlabel)
            ax.set_ylabel("objective")
            if best is not None:
                ax.axvline(best[0], color="tab:red", ls="--", lw=1)
        else:
            mesh = ax.pcolormesh(xs, ys, z.T, shading="nearest", cmap="viridis")
            fig.colorbar(mesh, ax=ax, label="objective")
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabel)
            if best is not None:
                ax.plot([best[0]], [best[1]], "r+", ms=10)
    return save(fig, path)


def demo_bars(labels, adversarial, random_order, path) -> Path:
    fig, ax = new()
    with plt.rc_context(STYLE):
        x = np.arange(len(labels))
        ax.bar(x - 0.2, adversarial, 0.4, label="adversarial order", color="tab:red")
        ax.bar(x + 0.2, random_order, 0.4, label="random order", color="0.5")
        ax.set_xticks(x)
        ax.set_xticklabels(labels)
        ax.set_xlabel("value of the other agents")
        ax.set_ylabel("mean ratio")
        ax.legend(frameon=False)
    return save(fig, path)
