"""Disorder-ensemble sweeps over (detuning, disorder strength) grids.

One plan drives two sample families: a hexagonal flake for spectral
statistics (DOS, IPR, decay rates, binned on the detuning grid) and a square
cut for the Bott index (evaluated at the detuning grid points as projector
thresholds).  Realizations are seeded from a SeedSequence spawn tree keyed by
(w index, realization index), so any cell can be reproduced in isolation and
results do not depend on scheduling; aggregation runs in fixed realization
order.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from . import bott as bott_mod
from .green import assemble_green_matrix
from .lattice import (
    PhysicalParams,
    apply_positional_disorder,
    build_hexagonal_sample,
    build_square_sample,
    partition_bulk_edge,
)
from .spectrum import classify_modes, diagonalize_biorthogonal

KNOWN_OBSERVABLES = frozenset(
    {"bott", "edge_dos", "bulk_dos", "bulk_ipr", "decay", "edge_decay"}
)
_HEX_OBSERVABLES = KNOWN_OBSERVABLES - {"bott"}
MIN_CELL_SUCCESS = 0.8


class SweepFailureError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepPlan:
    params: PhysicalParams
    w_grid: tuple
    delta_grid: tuple
    n_realizations: int
    master_seed: int
    target: str = "all"
    observables: frozenset = frozenset({"bott", "edge_dos", "bulk_dos", "bulk_ipr", "decay"})
    hex_layers: int = 6
    square_side: float = 0.7
    n_edge: int = 4

    def __post_init__(self) -> None:
        for name, grid in (("w_grid", self.w_grid), ("delta_grid", self.delta_grid)):
            arr = np.asarray(grid, dtype=float)
            if arr.size == 0 or (arr.size > 1 and not np.all(np.diff(arr) > 0)):
                raise ValueError(f"{name} must be non-empty and strictly increasing")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        unknown = set(self.observables) - KNOWN_OBSERVABLES
        if unknown:
            raise ValueError(f"unknown observables {sorted(unknown)}")
        if self.target not in ("all", "b-only"):
            raise ValueError(f"unknown disorder target {self.target!r}")
        if set(self.observables) & _HEX_OBSERVABLES and len(self.delta_grid) < 2:
            raise ValueError("binned observables need at least two detuning grid points")


@dataclass(frozen=True)
class ObservableTable:
    mean: np.ndarray    # (n_delta, n_w); NaN where no samples landed
    stderr: np.ndarray  # sample stdev / sqrt(n); NaN when n < 2
    n: np.ndarray       # realizations contributing per cell


@dataclass
class PhaseDiagram:
    delta: np.ndarray
    w: np.ndarray
    tables: dict
    plan: SweepPlan
    metadata: dict = field(default_factory=dict)


def _bin_edges(centers: np.ndarray) -> np.ndarray:
    mid = 0.5 * (centers[1:] + centers[:-1])
    first = centers[0] - (mid[0] - centers[0])
    last = centers[-1] + (centers[-1] - mid[-1])
    return np.concatenate(([first], mid, [last]))


def _cell_seeds(master_seed: int, w_idx: int, r_idx: int) -> tuple[int, int]:
    child = np.random.SeedSequence(master_seed, spawn_key=(w_idx, r_idx))
    s = child.generate_state(2, dtype=np.uint64)
    return int(s[0]), int(s[1])


def _bin_mean(values: np.ndarray, which: np.ndarray, nbins: int) -> np.ndarray:
    out = np.full(nbins, np.nan)
    cnt = np.bincount(which, minlength=nbins)
    tot = np.bincount(which, weights=values, minlength=nbins)
    nz = cnt > 0
    out[nz] = tot[nz] / cnt[nz]
    return out


def _hex_realization(geom, is_bulk, params, w, target, seed, edges, wanted):
    cfg = apply_positional_disorder(geom, w, target, seed)
    g = assemble_green_matrix(cfg, params)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        modes = diagonalize_biorthogonal(g, want_left=False)
    weights = np.abs(modes.right[0::2, :]) ** 2 + np.abs(modes.right[1::2, :]) ** 2
    frac = weights[is_bulk, :].sum(axis=0) / weights.sum(axis=0)
    bulk = frac >= 0.5
    det = modes.detuning
    nbins = len(edges) - 1
    which = np.clip(np.searchsorted(edges, det, side="right") - 1, 0, nbins - 1)
    inside = (det >= edges[0]) & (det < edges[-1])
    out = {}
    if "edge_dos" in wanted:
        out["edge_dos"] = np.bincount(which[inside & ~bulk], minlength=nbins).astype(float)
    if "bulk_dos" in wanted:
        out["bulk_dos"] = np.bincount(which[inside & bulk], minlength=nbins).astype(float)
    if "bulk_ipr" in wanted:
        sel = inside & bulk
        out["bulk_ipr"] = _bin_mean(modes.ipr[sel], which[sel], nbins)
    if "decay" in wanted:
        out["decay"] = _bin_mean(modes.decay[inside], which[inside], nbins)
    if "edge_decay" in wanted:
        sel = inside & ~bulk
        out["edge_decay"] = _bin_mean(modes.decay[sel], which[sel], nbins)
    return out


def _square_realization(geom, params, w, target, seed, deltas, lx, ly):
    cfg = apply_positional_disorder(geom, w, target, seed)
    g = assemble_green_matrix(cfg, params)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        modes = diagonalize_biorthogonal(g, want_left=True)
    rows = bott_mod.bott_scan(modes, cfg.positions, lx, ly, deltas)
    return {"bott": np.array([cb for _, cb, _ in rows])}


def _task(kind, payload):
    # top-level indirection so joblib can pickle the work items
    try:
        if kind == "hex":
            return ("ok", _hex_realization(*payload))
        return ("ok", _square_realization(*payload))
    except Exception as exc:  # noqa: BLE001 - failures are tallied, not fatal
        return ("error", f"{type(exc).__name__}: {exc}")


def run_sweep(plan: SweepPlan, n_jobs: int = 1) -> PhaseDiagram:
    deltas = np.asarray(plan.delta_grid, dtype=float)
    ws = np.asarray(plan.w_grid, dtype=float)
    wanted = set(plan.observables)
    want_hex = bool(wanted & _HEX_OBSERVABLES)
    want_square = "bott" in wanted

    hex_geom = is_bulk = None
    if want_hex:
        hex_geom = build_hexagonal_sample(plan.hex_layers, plan.params)
        is_bulk = partition_bulk_edge(hex_geom, plan.n_edge).is_bulk
        edges = _bin_edges(deltas)
    sq_geom = None
    if want_square:
        sq_geom = build_square_sample(plan.square_side, plan.params)
        lx, ly = sq_geom.shape.lx, sq_geom.shape.ly

    jobs = []
    tags = []
    for wi, w in enumerate(ws):
        for ri in range(plan.n_realizations):
            seed_hex, seed_sq = _cell_seeds(plan.master_seed, wi, ri)
            if want_hex:
                jobs.append(("hex", (hex_geom, is_bulk, plan.params, float(w),
                                     plan.target, seed_hex, edges, wanted)))
                tags.append(("hex", wi, ri))
            if want_square:
                jobs.append(("square", (sq_geom, plan.params, float(w), plan.target,
                                        seed_sq, deltas, lx, ly)))
                tags.append(("square", wi, ri))

    results = Parallel(n_jobs=n_jobs)(delayed(_task)(k, p) for k, p in jobs)

    nd, nw = len(deltas), len(ws)
    samples = {name: [[] for _ in range(nw)] for name in wanted}
    failures = []
    for (kind, wi, ri), (status, payload) in zip(tags, results):
        if status == "error":
            failures.append(
                {"family": kind, "w": float(ws[wi]), "realization": ri, "error": payload}
            )
            continue
        for name, arr in payload.items():
            if name in wanted:
                samples[name][wi].append(arr)

    relevant = {"hex": bool(want_hex), "square": bool(want_square)}
    for wi in range(nw):
        for kind in ("hex", "square"):
            if not relevant[kind]:
                continue
            names = (wanted & _HEX_OBSERVABLES) if kind == "hex" else {"bott"}
            if not names:
                continue
            got = len(samples[next(iter(names))][wi])
            if got < MIN_CELL_SUCCESS * plan.n_realizations:
                raise SweepFailureError(
                    f"{kind} cell W={ws[wi]:g}: only {got}/{plan.n_realizations} "
                    f"realizations succeeded; first failures: "
                    f"{[f['error'] for f in failures[:3]]}"
                )

    tables = {}
    for name in sorted(wanted):
        mean = np.full((nd, nw), np.nan)
        err = np.full((nd, nw), np.nan)
        cnt = np.zeros((nd, nw), dtype=int)
        for wi in range(nw):
            if not samples[name][wi]:
                continue
            stack = np.vstack(samples[name][wi])  # (n_real, nd)
            good = ~np.isnan(stack)
            n = good.sum(axis=0)
            cnt[:, wi] = n
            with np.errstate(invalid="ignore"), warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                mean[:, wi] = np.where(n > 0, np.nanmean(stack, axis=0), np.nan)
                sd = np.where(n > 1, np.nanstd(stack, axis=0, ddof=1), np.nan)
            err[:, wi] = sd / np.sqrt(np.maximum(n, 1))
        tables[name] = ObservableTable(mean=mean, stderr=err, n=cnt)

    meta = {
        "failures": failures,
        "hex_atoms": hex_geom.n_atoms if hex_geom is not None else None,
        "square_atoms": sq_geom.n_atoms if sq_geom is not None else None,
    }
    return PhaseDiagram(delta=deltas, w=ws, tables=tables, plan=plan, metadata=meta)


def ipr_section(plan: SweepPlan, n_jobs: int = 1):
    """Bulk-IPR profile over detuning at a single disorder strength.

    Returns (delta, mean, stderr, n) arrays.
    """
    if len(plan.w_grid) != 1:
        raise ValueError("ipr_section expects a plan with exactly one W value")
    pd = run_sweep(replace(plan, observables=frozenset({"bulk_ipr"})), n_jobs=n_jobs)
    t = pd.tables["bulk_ipr"]
    return pd.delta, t.mean[:, 0], t.stderr[:, 0], t.n[:, 0]


def decay_map(plan: SweepPlan, region: str = "all", n_jobs: int = 1) -> PhaseDiagram:
    """Mean decay rate on the full (delta, W) grid; region='edge' restricts
    the average to edge-classified modes."""
    if region not in ("all", "edge"):
        raise ValueError(f"unknown region {region!r}")
    name = "decay" if region == "all" else "edge_decay"
    return run_sweep(replace(plan, observables=frozenset({name})), n_jobs=n_jobs)


def _plan_as_dict(plan: SweepPlan) -> dict:
    d = asdict(plan)
    d["params"] = asdict(plan.params)
    d["observables"] = sorted(plan.observables)
    d["w_grid"] = [float(x) for x in plan.w_grid]
    d["delta_grid"] = [float(x) for x in plan.delta_grid]
    return d


def write_phase_diagram(pd: PhaseDiagram, outdir) -> list[str]:
    """One CSV per observable (delta,w,mean,stderr,n) plus manifest.json.

    Output is byte-deterministic for a given PhaseDiagram: no timestamps, no
    machine identifiers, fixed float formatting.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(pd.tables):
        t = pd.tables[name]
        path = out / f"{name}.csv"
        with open(path, "w", newline="") as fh:
            fh.write("delta,w,mean,stderr,n\n")
            for di, d in enumerate(pd.delta):
                for wi, w in enumerate(pd.w):
                    fh.write(
                        f"{d:.12g},{w:.12g},{t.mean[di, wi]:.12g},"
                        f"{t.stderr[di, wi]:.12g},{t.n[di, wi]}\n"
                    )
        written.append(str(path))
    manifest = {
        "format": "honeytopo-phase-diagram-v1",
        "plan": _plan_as_dict(pd.plan),
        "observables": sorted(pd.tables),
        "metadata": pd.metadata,
    }
    mpath = out / "manifest.json"
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(str(mpath))
    return written
