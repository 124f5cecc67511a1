"""Report figures rendered next to the CLI's delimited output."""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["zscore_figure", "convergence_figure"]


def zscore_figure(rows: Sequence[tuple[str, float]], path: str) -> None:
    """Horizontal bar chart of oracle-agreement z-scores with +-3 guides."""
    labels = [label for label, _ in rows]
    scores = [z for _, z in rows]
    fig, ax = plt.subplots(figsize=(7, 0.5 * max(len(rows), 4) + 1.2))
    ax.barh(range(len(rows)), scores, color="#4878d0")
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    for guide in (-3.0, 3.0):
        ax.axvline(guide, color="#d65f5f", linestyle="--", linewidth=1)
    ax.axvline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("z-score vs finite-difference oracle")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def convergence_figure(series: Mapping[str, tuple[Sequence[int], Sequence[float]]],
                       path: str) -> None:
    """Log-log standard error vs path count, with a 1/sqrt(N) reference."""
    fig, ax = plt.subplots(figsize=(7, 5))
    ref_drawn = False
    for label, (ns, ses) in series.items():
        ax.loglog(ns, ses, marker="o", label=label)
        if not ref_drawn and len(ns) > 1 and ses[0] > 0:
            ref = [ses[0] * (ns[0] / n) ** 0.5 for n in ns]
            ax.loglog(ns, ref, linestyle=":", color="grey",
                      label="N^{-1/2} reference")
            ref_drawn = True
    ax.set_xlabel("paths")
    ax.set_ylabel("standard error")
    ax.legend()
    ax.grid(True, which="both", linewidth=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
