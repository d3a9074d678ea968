"""Figure assembly: four-panel (delta, W) heatmaps and IPR sections.

Heatmap panels share axes (W horizontal, detuning vertical).  The averaged
topological index gets a diverging colormap pinned to [-1, 0] and a contour
at the requested level (drawn only when the data actually cross it); count
and rate panels use a sequential map.  Rendering is read-only: identical
inputs produce identical image bytes for a fixed renderer version.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import ObservableGrid, read_curves_csv, read_observable_csv

PHASE_PANELS = ("bott", "edge_dos", "bulk_ipr", "decay")
PANEL_LABELS = {
    "bott": "average Bott index",
    "edge_dos": "edge modes per bin",
    "bulk_dos": "bulk modes per bin",
    "bulk_ipr": "mean bulk IPR",
    "decay": "mean decay rate",
    "edge_decay": "mean edge decay rate",
}


@dataclass(frozen=True)
class FigureSpec:
    in_dir: Path
    out_path: Path
    contour_level: float = -0.5
    curves_path: Path | None = None
    panels: tuple = PHASE_PANELS
    cb_limits: tuple = (-1.0, 0.0)
    dpi: int = 150


@dataclass(frozen=True)
class SectionSpec:
    in_dir: Path
    out_path: Path
    w_select: float | None = None
    dos_rel_threshold: float = 0.05
    gap_override: tuple | None = None
    dpi: int = 150


def _edges(centers: np.ndarray) -> np.ndarray:
    """Cell boundaries for pcolormesh; a lone value gets a +/-0.5 cell."""
    if centers.size == 1:
        half = 0.5 if centers[0] == 0 else max(0.5, 0.1 * abs(centers[0]))
        return np.array([centers[0] - half, centers[0] + half])
    mid = 0.5 * (centers[1:] + centers[:-1])
    return np.concatenate((
        [centers[0] - (mid[0] - centers[0])],
        mid,
        [centers[-1] + (centers[-1] - mid[-1])],
    ))


def _load_panels(spec: FigureSpec) -> dict[str, ObservableGrid]:
    grids = {}
    ref = None
    for name in spec.panels:
        g = read_observable_csv(Path(spec.in_dir) / f"{name}.csv")
        if ref is not None and not g.same_grid(ref):
            raise ValueError(
                f"{name}.csv grid does not match {ref.name}.csv: "
                f"{g.delta.size} x {g.w.size} vs {ref.delta.size} x {ref.w.size}"
            )
        ref = ref or g
        grids[name] = g
    return grids


def _crosses(mean: np.ndarray, level: float) -> bool:
    vals = mean[np.isfinite(mean)]
    return vals.size > 0 and vals.min() < level < vals.max()


def render_phase_diagram(spec: FigureSpec) -> dict:
    """Write the multi-panel heatmap figure; returns what was drawn."""
    grids = _load_panels(spec)
    curves = read_curves_csv(spec.curves_path) if spec.curves_path else None

    n = len(spec.panels)
    ncols = 2 if n > 1 else 1
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4.2 * ncols, 3.4 * nrows),
        sharex=True, sharey=True, squeeze=False,
    )

    contour_drawn = False
    for k, name in enumerate(spec.panels):
        ax = axes[k // ncols][k % ncols]
        g = grids[name]
        we, de = _edges(g.w), _edges(g.delta)
        masked = np.ma.masked_invalid(g.mean)
        if name == "bott":
            pm = ax.pcolormesh(we, de, masked, cmap="RdBu",
                               vmin=spec.cb_limits[0], vmax=spec.cb_limits[1])
            if g.w.size >= 2 and g.delta.size >= 2 and _crosses(g.mean, spec.contour_level):
                ax.contour(g.w, g.delta, g.mean, levels=[spec.contour_level],
                           colors="white", linewidths=1.2)
                contour_drawn = True
        else:
            pm = ax.pcolormesh(we, de, masked, cmap="viridis")
        if curves and name == "edge_dos":
            for wgrid, det in curves.values():
                ax.plot(wgrid, det, "--", color="white", linewidth=0.9)
            ax.set_xlim(we[0], we[-1])
            ax.set_ylim(de[0], de[-1])
        fig.colorbar(pm, ax=ax)
        ax.set_title(PANEL_LABELS.get(name, name), fontsize=10)
        if k // ncols == nrows - 1:
            ax.set_xlabel("disorder strength W")
        if k % ncols == 0:
            ax.set_ylabel("detuning")
    for k in range(n, nrows * ncols):
        axes[k // ncols][k % ncols].set_axis_off()

    fig.tight_layout()
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=spec.dpi)
    plt.close(fig)
    return {"path": str(out), "panels": list(spec.panels),
            "contour_drawn": contour_drawn,
            "curves_overlaid": bool(curves)}


def _gap_from_dos(dos: ObservableGrid, rel_threshold: float) -> tuple | None:
    """Widest low-count run of the lowest-W DOS column, as detuning edges."""
    col = dos.mean[:, 0]
    good = np.isfinite(col)
    if not good.any():
        return None
    cut = rel_threshold * np.nanmax(col)
    below = np.where(good, col <= cut, True)
    best, start, run, s = 0, 0, 0, 0
    for k, b in enumerate(below):
        if b:
            if run == 0:
                s = k
            run += 1
            if run > best:
                best, start = run, s
        else:
            run = 0
    if best == 0:
        return None
    edges = _edges(dos.delta)
    return float(edges[start]), float(edges[start + best])


def render_ipr_sections(spec: SectionSpec) -> dict:
    """Write IPR-vs-detuning curves with error bars and gap-edge verticals."""
    ipr = read_observable_csv(Path(spec.in_dir) / "bulk_ipr.csv")
    if spec.w_select is not None:
        cols = np.flatnonzero(np.isclose(ipr.w, spec.w_select))
        if cols.size == 0:
            raise ValueError(f"no W = {spec.w_select:g} column in bulk_ipr.csv "
                             f"(available: {ipr.w.tolist()})")
    else:
        cols = np.arange(ipr.w.size)

    if spec.gap_override is not None:
        gap = (float(spec.gap_override[0]), float(spec.gap_override[1]))
    else:
        dos = read_observable_csv(Path(spec.in_dir) / "bulk_dos.csv")
        if not dos.same_grid(ipr):
            raise ValueError("bulk_dos.csv grid does not match bulk_ipr.csv")
        gap = _gap_from_dos(dos, spec.dos_rel_threshold)

    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for j in cols:
        ok = np.isfinite(ipr.mean[:, j])
        ax.errorbar(ipr.delta[ok], ipr.mean[ok, j], yerr=ipr.stderr[ok, j],
                    marker="o", markersize=3, linewidth=1.0, capsize=2,
                    label=f"W = {ipr.w[j]:g}")
    if gap is not None:
        for x in gap:
            ax.axvline(x, linestyle="--", color="gray", linewidth=1.0)
    ax.set_xlabel("detuning")
    ax.set_ylabel("mean IPR")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=spec.dpi)
    plt.close(fig)
    return {"path": str(out), "n_lines": int(cols.size),
            "gap_edges": gap}
