"""Readers for the sweep CSV schemas.

An observable CSV is long-form `delta,w,mean,stderr,n` over a complete
(delta, w) grid; values may be nan where no modes landed.  Readers validate
the header and the grid and return rectangular arrays.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

OBSERVABLE_COLUMNS = ("delta", "w", "mean", "stderr", "n")
CURVE_COLUMNS = ("alpha", "w", "detuning", "decay")


@dataclass(frozen=True)
class ObservableGrid:
    name: str
    delta: np.ndarray   # (nd,)
    w: np.ndarray       # (nw,)
    mean: np.ndarray    # (nd, nw)
    stderr: np.ndarray  # (nd, nw)
    n: np.ndarray       # (nd, nw)

    def same_grid(self, other: "ObservableGrid") -> bool:
        return (self.delta.shape == other.delta.shape
                and self.w.shape == other.w.shape
                and np.array_equal(self.delta, other.delta)
                and np.array_equal(self.w, other.w))


def _read_rows(path, required) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such CSV: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise ValueError(f"{path.name} is missing column {col!r} "
                                 f"(found {header})")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path.name} has no data rows")
    return rows


def read_observable_csv(path) -> ObservableGrid:
    path = Path(path)
    rows = _read_rows(path, OBSERVABLE_COLUMNS)
    delta = np.array([float(r["delta"]) for r in rows])
    w = np.array([float(r["w"]) for r in rows])
    dvals = np.unique(delta)
    wvals = np.unique(w)
    if len(rows) != dvals.size * wvals.size:
        raise ValueError(f"{path.name}: rows do not form a complete "
                         f"{dvals.size} x {wvals.size} (delta, w) grid")
    mean = np.full((dvals.size, wvals.size), np.nan)
    err = np.full_like(mean, np.nan)
    cnt = np.zeros(mean.shape, dtype=int)
    for r in rows:
        i = int(np.searchsorted(dvals, float(r["delta"])))
        j = int(np.searchsorted(wvals, float(r["w"])))
        mean[i, j] = float(r["mean"])
        err[i, j] = float(r["stderr"])
        cnt[i, j] = int(r["n"])
    return ObservableGrid(name=path.stem, delta=dvals, w=wvals,
                          mean=mean, stderr=err, n=cnt)


def read_curves_csv(path) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Predicted mode trajectories: {mode index: (w, detuning)}, w-sorted."""
    rows = _read_rows(path, CURVE_COLUMNS)
    out: dict[int, list] = {}
    for r in rows:
        out.setdefault(int(r["alpha"]), []).append(
            (float(r["w"]), float(r["detuning"]))
        )
    curves = {}
    for alpha, pts in out.items():
        pts.sort()
        arr = np.array(pts)
        curves[alpha] = (arr[:, 0], arr[:, 1])
    return curves


def read_manifest(indir) -> dict:
    with open(Path(indir) / "manifest.json") as fh:
        return json.load(fh)
