"""Static SVG figures with reproducible bytes.

matplotlib stamps SVG files with a creation date and random element ids;
both are pinned so identical data gives an identical file.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {"svg.hashsalt": "manifoldreg", "svg.fonttype": "none", "figure.figsize": (6.0, 4.0)}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def line_plot(path, x, series, xlabel="", ylabel="", title="", logx=False, logy=False):
    """One line per entry of ``series`` (label -> y values) against ``x``."""
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots()
        x = np.asarray(x, dtype=float)
        for label, y in series.items():
            y = np.asarray(y, dtype=float)
            if logy:
                y = np.abs(y)
            ax.plot(x, y, marker="o", markersize=3, label=label)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        return _save(fig, path)


def scatter_plot(path, x, y, xlabel="", ylabel="", title=""):
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.scatter(np.asarray(x, dtype=float), np.asarray(y, dtype=float), s=2)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)
