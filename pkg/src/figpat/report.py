"""Report figures written next to dataset output.

Each helper renders one matplotlib chart to a PNG file and returns
the path. matplotlib loads lazily and always through the Agg canvas,
so reports work on headless machines.
"""
from __future__ import annotations

from collections import Counter
from pathlib import Path
from typing import Mapping, Sequence

from .errors import IoFailure

_CLASS_COLORS = {"true": "#2e7d32", "false": "#c62828", "counterfactual": "#f9a825"}


def _new_figure(width: float = 6.0, height: float = 4.0):
    from matplotlib.backends.backend_agg import FigureCanvasAgg
    from matplotlib.figure import Figure as MplFigure

    fig = MplFigure(figsize=(width, height), dpi=100)
    FigureCanvasAgg(fig)
    return fig


def _save(fig, path: str | Path) -> Path:
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(p, format="png")
    except OSError as e:
        raise IoFailure(f"cannot write {p}: {e}") from e
    return p


def count_histogram(counts_by_label: Mapping[str, Sequence[int]], path: str | Path) -> Path:
    """Grouped bar chart of object counts per dataset class."""
    fig = _new_figure()
    ax = fig.add_subplot(111)
    labels = [k for k in ("true", "false", "counterfactual") if k in counts_by_label]
    labels += [k for k in counts_by_label if k not in labels]
    all_counts = sorted({c for v in counts_by_label.values() for c in v})
    width = 0.8 / max(1, len(labels))
    for li, label in enumerate(labels):
        hist = Counter(counts_by_label[label])
        xs = [k + li * width for k in range(len(all_counts))]
        ys = [hist.get(c, 0) for c in all_counts]
        ax.bar(xs, ys, width=width, label=label, color=_CLASS_COLORS.get(label))
    ax.set_xticks([k + 0.4 - width / 2 for k in range(len(all_counts))])
    ax.set_xticklabels([str(c) for c in all_counts])
    ax.set_xlabel("objects per figure")
    ax.set_ylabel("figures")
    ax.set_title("object count by class")
    ax.legend()
    return _save(fig, path)


def divergence_trajectory(history: Sequence[tuple[int, float]], path: str | Path) -> Path:
    """Compound divergence over accepted swap steps of the split search."""
    fig = _new_figure()
    ax = fig.add_subplot(111)
    if history:
        xs = [h[0] for h in history]
        ys = [h[1] for h in history]
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1.2, color="#1565c0")
    else:
        ax.text(0.5, 0.5, "no accepted swaps", ha="center", va="center", transform=ax.transAxes)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("accepted swap")
    ax.set_ylabel("compound divergence")
    ax.set_title("split search trajectory")
    return _save(fig, path)


def confusion_chart(confusion: Mapping[str, int], path: str | Path) -> Path:
    """2x2 confusion matrix for a hypothesis against dataset labels."""
    fig = _new_figure(5.0, 4.2)
    ax = fig.add_subplot(111)
    grid = [
        [confusion.get("tp", 0), confusion.get("fn", 0)],
        [confusion.get("fp", 0), confusion.get("tn", 0)],
    ]
    im = ax.imshow(grid, cmap="Blues")
    for r in range(2):
        for c in range(2):
            ax.text(c, r, str(grid[r][c]), ha="center", va="center", fontsize=14)
    ax.set_xticks([0, 1])
    ax.set_xticklabels(["predicted true", "predicted false"])
    ax.set_yticks([0, 1])
    ax.set_yticklabels(["label true", "label false"])
    ax.set_title("hypothesis vs labels")
    fig.colorbar(im, ax=ax, shrink=0.8)
    return _save(fig, path)
