"""Success-rate curve rendering."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_success_curve(points: Sequence[tuple[int, float]], path: str | Path, title: str = "Planning success by iteration") -> Path:
    xs = [k for k, _ in points]
    ys = [100.0 * r for _, r in points]
    fig, ax = plt.subplots(figsize=(5, 3.5), dpi=120)
    ax.plot(xs, ys, marker="o")
    for x, y in zip(xs, ys):
        ax.annotate(f"{y:.1f}", (x, y), textcoords="offset points", xytext=(0, 6), ha="center", fontsize=8)
    ax.set_xlabel("iteration (1 = initial plan)")
    ax.set_ylabel("success rate (%)")
    ax.set_xticks(xs)
    ax.set_ylim(0, 105)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    p = Path(path)
    fig.savefig(p)
    plt.close(fig)
    return p
