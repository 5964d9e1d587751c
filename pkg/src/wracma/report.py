"""Figure rendering for battery results.

Renders the two standard views next to the delimited output: gap-vs-f-calls
convergence curves (median with interquartile band, one panel per problem
and b) and f-call scaling against the interaction coefficient b (one panel
per problem).  Files are written as PNG; nothing is shown interactively.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update(
    {
        "font.size": 10,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "figure.figsize": (5.2, 3.6),
        "savefig.dpi": 150,
        "savefig.bbox": "tight",
    }
)

GAP_FLOOR = 1e-12  # display floor for log-scaled gaps that reached zero

_COLORS = {"wra-cmaes": "tab:blue", "zo-pgda": "tab:orange"}


def _b_tag(b) -> str:
    if b is None:
        return ""
    return f"_b{b:g}"


def render_gap_curves(summaries, outdir: Path) -> list[Path]:
    paths = []
    panels = {}
    for row in summaries:
        panels.setdefault((row["problem"], row["b"]), []).append(row)
    for (pid, b), rows in sorted(panels.items()):
        fig, ax = plt.subplots()
        drew = False
        for row in rows:
            curve = row["gap_curve"]
            if not curve["fcalls"]:
                continue
            fc = np.asarray(curve["fcalls"], dtype=float)
            med = np.maximum(np.asarray(curve["median"], dtype=float), GAP_FLOOR)
            lo = np.maximum(np.asarray(curve["q25"], dtype=float), GAP_FLOOR)
            hi = np.maximum(np.asarray(curve["q75"], dtype=float), GAP_FLOOR)
            color = _COLORS.get(row["algorithm"])
            ax.plot(fc, med, label=row["algorithm"], color=color)
            ax.fill_between(fc, lo, hi, alpha=0.25, color=color, linewidth=0)
            drew = True
        if not drew:
            plt.close(fig)
            continue
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("f-calls")
        ax.set_ylabel("worst-case gap")
        title = pid if b is None else f"{pid}, b={b:g}"
        ax.set_title(title)
        ax.legend()
        path = outdir / f"gap_{pid}{_b_tag(b)}.png"
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)
    return paths


def render_scaling(summaries, outdir: Path) -> list[Path]:
    paths = []
    panels = {}
    for row in summaries:
        if row["b"] is None or row["success_fcalls_mean"] is None:
            continue
        panels.setdefault(row["problem"], {}).setdefault(row["algorithm"], []).append(
            (row["b"], row["success_fcalls_mean"], row["success_fcalls_std"] or 0.0)
        )
    for pid, by_algo in sorted(panels.items()):
        if all(len(points) < 2 for points in by_algo.values()):
            continue
        fig, ax = plt.subplots()
        for algo, points in sorted(by_algo.items()):
            points.sort()
            bs = np.array([p[0] for p in points], dtype=float)
            means = np.array([p[1] for p in points], dtype=float)
            stds = np.array([p[2] for p in points], dtype=float)
            ax.errorbar(
                bs, means, yerr=stds, marker="o", capsize=3,
                label=algo, color=_COLORS.get(algo),
            )
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("interaction coefficient b")
        ax.set_ylabel("mean f-calls to success")
        ax.set_title(pid)
        ax.legend()
        path = outdir / f"scaling_{pid}.png"
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)
    return paths


def render_figures(summaries, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return render_gap_curves(summaries, outdir) + render_scaling(summaries, outdir)
