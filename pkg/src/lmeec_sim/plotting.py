"""Figure rendering for sweep reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

MARKERS = {"lmeec": "o", "leach": "s"}


def report_style():
    """rc overrides used for every report figure; fixed salt keeps SVG output reproducible."""
    return {
        "figure.figsize": (6.0, 4.0),
        "font.size": 11,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "legend.frameon": False,
        "svg.hashsalt": "lmeec-sim",
        "svg.fonttype": "none",
    }


def line_plot(path, series, xlabel, ylabel, title=None):
    """Write a line plot with one line per entry of ``series``.

    ``series`` maps a label to ``(xs, ys)``. Each line carries the SVG id
    ``series-<label>``.
    """
    with plt.rc_context(report_style()):
        fig, ax = plt.subplots()
        for label, (xs, ys) in series.items():
            ax.plot(xs, ys, marker=MARKERS.get(label, "^"), label=label.upper(), gid=f"series-{label}")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
