"""CSV tables and PNG figures written next to the JSON certificates."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 110,
    "savefig.bbox": "tight",
    "svg.hashsalt": "sarith",
}

GOLDEN = (5 ** 0.5 - 1) / 2


def figsize(width: float = 4.5) -> tuple[float, float]:
    return width, width * GOLDEN


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(r)
    return path


def betti_rows(named: dict) -> tuple[list[str], list[list]]:
    """Rows (slab, degree, cells, betti, torsion) from {name: HomologySummary json}."""
    rows = []
    for name, summ in named.items():
        for d, b in summ["betti"].items():
            rows.append([name, d, summ["cells_per_dim"].get(d, 0), b,
                         " ".join(map(str, summ["torsion"].get(d, [])))])
    return ["slab", "degree", "cells", "betti", "torsion"], rows


def betti_figure(named: dict, path: Path, title: str = "reduced Betti numbers") -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        names = list(named)
        degrees = sorted({int(d) for s in named.values() for d in s["betti"]})
        width = 0.8 / max(1, len(names))
        for k, name in enumerate(names):
            ys = [named[name]["betti"].get(str(d), 0) for d in degrees]
            xs = [d + (k - (len(names) - 1) / 2) * width for d in degrees]
            ax.bar(xs, ys, width=width, label=name)
        ax.set_xticks(degrees)
        ax.set_xlabel("degree")
        ax.set_ylabel("rank")
        ax.set_title(title)
        ax.legend(frameon=False)
        return _save(fig, Path(path))


def coverage_figure(curves: dict, path: Path) -> Path:
    """curves: label -> (covered counts per prefix, total chambers)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        for label, (counts, total) in curves.items():
            ax.step(range(1, len(counts) + 1), [total - c for c in counts], where="post", label=label)
        ax.set_xlabel("enumeration prefix length")
        ax.set_ylabel("uncovered chambers")
        ax.set_yscale("symlog", linthresh=1)
        ax.set_title("covering the chamber window")
        ax.legend(frameon=False)
        return _save(fig, Path(path))


def cone_figure(forms: Sequence[Sequence], queries: dict, path: Path,
                base_forms: Sequence[Sequence] = ()) -> Path:
    """Arrows for the restricted forms on a 1- or 2-dimensional H, queries coloured by verdict."""
    colours = {"CERTIFIED_NOT_Fm": "tab:red", "CERTIFIED_Fm": "tab:green", "INDETERMINATE": "tab:orange"}
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4, 4))
        two = all(len(f) == 2 for f in forms)

        def xy(v):
            return (float(v[0]), float(v[1]) if two else 0.0)

        for f in forms:
            x, y = xy(f)
            ax.annotate("", xy=(x, y), xytext=(0, 0),
                        arrowprops={"arrowstyle": "->", "color": "0.35", "lw": 1.0})
        for f in base_forms:
            x, y = xy(f)
            ax.plot([x], [y], marker="s", color="0.1", ms=4, ls="none")
        seen = set()
        for label, (vec, verdict) in queries.items():
            x, y = xy(vec)
            lab = verdict if verdict not in seen else None
            seen.add(verdict)
            ax.plot([x], [y], marker="o", color=colours.get(verdict, "k"), ls="none", label=lab)
        lim = max([1.0] + [abs(c) for f in forms for c in xy(f)] + [abs(c) for v, _ in queries.values() for c in xy(v)])
        ax.set_xlim(-1.2 * lim, 1.2 * lim)
        ax.set_ylim(-1.2 * lim, 1.2 * lim)
        ax.axhline(0, color="0.85", lw=0.6)
        ax.axvline(0, color="0.85", lw=0.6)
        ax.set_aspect("equal")
        ax.set_title("restricted forms and query verdicts")
        ax.legend(frameon=False, loc="lower left")
        return _save(fig, Path(path))
