"""Matplotlib figures written next to the CSV reports."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .classify import CATEGORIES, AsProfile, DistributionProfile  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 120,
}


def _figure(width: float = 4.5, ratio: float = 0.62):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(width, width * ratio))
    return fig, ax


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def entropy_cdfs(profiles: Mapping[str, AsProfile], path: str | Path) -> Path:
    fig, ax = _figure()
    for label, prof in profiles.items():
        xs, ys = zip(*prof.entropy_cdf())
        ax.step(xs, ys, where="post", label=label)
    for x in (0.25, 0.75):
        ax.axvline(x, color="0.8", lw=0.8, ls="--")
    ax.set_xlabel("normalized IID entropy")
    ax.set_ylabel("CDF of addresses")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.01)
    ax.legend(frameon=False)
    return _save(fig, path)


def category_fractions(profiles: Mapping[str, DistributionProfile], path: str | Path) -> Path:
    fig, ax = _figure(width=5.5)
    n = len(profiles)
    width = 0.8 / max(n, 1)
    for i, (name, prof) in enumerate(profiles.items()):
        fr = prof.fractions()
        xs = [k + i * width for k in range(len(CATEGORIES))]
        # zero bars vanish on a log axis; draw them at the floor instead
        ax.bar(xs, [max(fr[c], 1e-6) for c in CATEGORIES], width=width, label=name)
    ax.set_yscale("log")
    ax.set_xticks([k + width * (n - 1) / 2 for k in range(len(CATEGORIES))])
    ax.set_xticklabels([c.value for c in CATEGORIES], rotation=30, ha="right")
    ax.set_ylabel("fraction of addresses")
    ax.legend(frameon=False)
    return _save(fig, path)


def ccdf(points: Sequence[tuple[float, float]], path: str | Path, xlabel: str, logx: bool = True) -> Path:
    fig, ax = _figure()
    xs = [x for x, _ in points]
    ys = [y for _, y in points]
    ax.step(xs, ys, where="post")
    if logx and any(x > 0 for x in xs):
        ax.set_xscale("symlog", linthresh=1)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("CCDF  P(X > x)")
    ax.set_ylim(0, 1.01)
    return _save(fig, path)
