"""Figures for sweep results, written next to the CSV."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .montecarlo import SweepResult  # noqa: E402

AXIS_LABELS = {"p_b": r"Bell pair error rate $p_B$", "p_l": r"loss rate $p_L$"}


def sweep_axis(result: SweepResult) -> str:
    """Plot against whichever of p_B / p_L varies more across the grid."""
    p_bs = {r.p_b for r in result.rows}
    p_ls = {r.p_l for r in result.rows}
    return "p_l" if len(p_ls) > len(p_bs) else "p_b"


def render_sweep(result: SweepResult, path: str | Path, axis: str | None = None, dpi: int = 150) -> Path:
    axis = axis or sweep_axis(result)
    other = "p_l" if axis == "p_b" else "p_b"
    fig, (ax_p, ax_r) = plt.subplots(1, 2, figsize=(10, 4.2))

    series: dict[tuple[int, float], list] = {}
    for row in result.ok_rows():
        series.setdefault((row.d, getattr(row, other)), []).append(row)
    multi = len({key[1] for key in series}) > 1
    for (d, fixed), rows in sorted(series.items()):
        rows.sort(key=lambda r: getattr(r, axis))
        x = [getattr(r, axis) for r in rows]
        p = [r.estimate.p_hat for r in rows]
        lo = [r.estimate.p_hat - r.estimate.ci_low for r in rows]
        hi = [r.estimate.ci_high - r.estimate.p_hat for r in rows]
        label = f"d={d}" + (f", {other}={fixed:g}" if multi else "")
        ax_p.errorbar(x, p, yerr=[lo, hi], marker="o", ms=3, capsize=2, label=label)
        finite = [(xi, r.mean_rounds.value) for xi, r in zip(x, rows) if math.isfinite(r.mean_rounds.value)]
        if finite:
            ax_r.plot(*zip(*finite), marker="o", ms=3, label=label)

    ax_p.set_yscale("log")
    ax_p.set_ylabel(r"$p_{\rm link}$")
    ax_r.set_yscale("log")
    unit = next((r.mean_rounds.unit for r in result.ok_rows()), "cycle")
    ax_r.set_ylabel("mean cycles to failure" if unit == "cycle" else "mean rounds to failure")
    for ax in (ax_p, ax_r):
        ax.set_xlabel(AXIS_LABELS.get(axis, axis))
        ax.grid(True, which="both", alpha=0.3)
    ax_p.legend(fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path
