"""Optional PNG figures written next to the CSV tables."""
from __future__ import annotations

from pathlib import Path
from typing import List

import numpy as np

_STYLE = {"figure.figsize": (6.0, 4.0), "figure.dpi": 110, "axes.grid": True,
          "grid.alpha": 0.3, "axes.spines.top": False, "axes.spines.right": False,
          "font.size": 10, "legend.frameon": False, "savefig.bbox": "tight"}


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path: Path, written: List[str]):
    fig.savefig(path)
    written.append(path.name)


def sample_histograms(out: Path, stem: str, samples: np.ndarray, reference: np.ndarray,
                      labels: List[str], title: str) -> List[str]:
    """Per-coordinate histograms of ``samples`` against ``reference`` draws."""
    plt = _plt()
    written: List[str] = []
    with plt.rc_context(_STYLE):
        k = samples.shape[1]
        fig, axes = plt.subplots(1, k, figsize=(4.0 * k, 3.2), squeeze=False)
        for j, ax in enumerate(axes[0]):
            a, b = samples[:, j], reference[:, j]
            a, b = a[np.isfinite(a)], b[np.isfinite(b)]
            edges = np.histogram_bin_edges(np.concatenate([a, b]), bins=60)
            ax.hist(b, edges, density=True, histtype="stepfilled", alpha=0.35, label=labels[1])
            ax.hist(a, edges, density=True, histtype="step", lw=1.4, label=labels[0])
            ax.set_xlabel(f"x{j}")
        axes[0][0].set_ylabel("density")
        axes[0][0].legend()
        fig.suptitle(title)
        _save(fig, out / f"{stem}.png", written)
        plt.close(fig)
    return written


def sector_bars(out: Path, stem: str, observed: dict, expected: dict, title: str) -> List[str]:
    """Observed vs expected probability of each real set."""
    plt = _plt()
    written: List[str] = []
    keys = sorted(set(observed) | set(expected))
    x = np.arange(len(keys))
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.bar(x - 0.2, [expected.get(k, 0.0) for k in keys], 0.4, label="expected")
        ax.bar(x + 0.2, [observed.get(k, 0.0) for k in keys], 0.4, label="observed")
        ax.set_xticks(x, [str(k) for k in keys])
        ax.set_xlabel("real set")
        ax.set_ylabel("probability")
        ax.legend()
        ax.set_title(title)
        _save(fig, out / f"{stem}.png", written)
        plt.close(fig)
    return written


def trajectory_plot(out: Path, stem: str, times: np.ndarray, x: np.ndarray, title: str) -> List[str]:
    """Coordinate paths ``x (n_times, n, D)`` against time."""
    plt = _plt()
    written: List[str] = []
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for r in range(x.shape[1]):
            for j in range(x.shape[2]):
                ax.plot(times, x[:, r, j], lw=0.8, color=f"C{j % 10}", alpha=0.7)
        ax.set_xlabel("t")
        ax.set_ylabel("position")
        ax.set_title(title)
        _save(fig, out / f"{stem}.png", written)
        plt.close(fig)
    return written
