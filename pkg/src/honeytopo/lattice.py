"""Honeycomb sample geometry: ideal finite lattices, positional disorder,
bulk/edge partition.

Lengths are measured in units of the free-space wavelength lambda0 and the
nearest-neighbour spacing is ``a`` (default lambda0/20).  Atoms live on an
exact integer grid internally,

    x = i * a/2,      y = j * sqrt(3) * a/2,

with sublattice A at i = 2 (mod 3) and sublattice B at i = 1 (mod 3); i = 0
(mod 3) is never occupied.  All neighbour detection and layer peeling is done
in integer arithmetic, so geometry generation is exactly reproducible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

SQRT3 = math.sqrt(3.0)

# Integer offsets of the six atoms around one hexagonal plaquette centre and
# of the three nearest neighbours of any atom (same offsets for A and B up to
# which of them land on occupied columns).
_PLAQUETTE = ((2, 0), (1, 1), (-1, 1), (-2, 0), (-1, -1), (1, -1))
_NEIGHBOURS = ((2, 0), (-2, 0), (1, 1), (1, -1), (-1, 1), (-1, -1))

DisorderTarget = Literal["all", "b-only"]


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensionless model parameters: rates in Gamma0, lengths in lambda0.

    delta_b   -- Zeeman half-splitting of the J=1 excited state (sigma = +/-1
                 components shifted by -/+ 2*delta_b on the diagonal),
    delta_ab  -- staggered sublattice shift (+2*delta_ab on A, -2*delta_ab on B).
    """

    a: float = 0.05
    delta_b: float = 0.0
    delta_ab: float = 0.0

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise ValueError(f"lattice spacing must be positive, got a={self.a}")


@dataclass(frozen=True)
class Hexagon:
    n_layers: int


@dataclass(frozen=True)
class Square:
    side: float
    lx: float
    ly: float


@dataclass(frozen=True)
class SampleGeometry:
    """An ideal (disorder-free) finite sample.

    positions    -- (N, 2) float array, lambda0 units, sample centred at the origin
    sublattice   -- (N,) array of 'A'/'B'
    shape        -- Hexagon or Square descriptor
    layer_depth  -- (N,) int peeling depth: 1 for the outermost rim, growing inwards
    grid         -- (N, 2) int array of exact integer coordinates (i, j)
    """

    positions: np.ndarray
    sublattice: np.ndarray
    shape: object
    layer_depth: np.ndarray
    a: float
    grid: np.ndarray

    @property
    def n_atoms(self) -> int:
        return int(len(self.positions))


def _positions_from_grid(grid: np.ndarray, a: float) -> np.ndarray:
    pos = np.empty((len(grid), 2))
    pos[:, 0] = grid[:, 0] * (a / 2.0)
    pos[:, 1] = grid[:, 1] * (SQRT3 * a / 2.0)
    return pos


def _sublattice_from_grid(grid: np.ndarray) -> np.ndarray:
    lab = np.where(grid[:, 0] % 3 == 2, "A", "B")
    if np.any(grid[:, 0] % 3 == 0):
        raise AssertionError("integer column i = 0 mod 3 is never occupied")
    return lab.astype("<U1")


def _peel_depths(grid: np.ndarray) -> np.ndarray:
    """Iterative peeling: strip atoms with < 3 ideal nearest neighbours, repeat.

    Depth 1 is the first stripped shell.  Runs on the exact integer grid, so
    there is no distance tolerance to tune.
    """
    alive = {(int(i), int(j)) for i, j in grid}
    depth: dict[tuple[int, int], int] = {}
    d = 0
    while alive:
        d += 1
        shell = [
            s
            for s in alive
            if sum((s[0] + u, s[1] + v) in alive for u, v in _NEIGHBOURS) < 3
        ]
        if not shell:
            # cannot happen on a finite honeycomb patch (a convex-hull atom
            # always misses a neighbour) but guard against an infinite loop
            shell = list(alive)
        for s in shell:
            depth[s] = d
        alive.difference_update(shell)
    return np.array([depth[(int(i), int(j))] for i, j in grid], dtype=int)


def _finish(grid_set: set[tuple[int, int]], shape, a: float) -> SampleGeometry:
    grid = np.array(sorted(grid_set), dtype=int)
    return SampleGeometry(
        positions=_positions_from_grid(grid, a),
        sublattice=_sublattice_from_grid(grid),
        shape=shape,
        layer_depth=_peel_depths(grid),
        a=a,
        grid=grid,
    )


def build_hexagonal_sample(n_layers: int, params: PhysicalParams) -> SampleGeometry:
    """Hexagonal armchair flake made of n_layers concentric plaquette rings.

    The flake is the union of all hexagonal plaquettes whose centres sit in a
    hexagonal domain of the triangular plaquette lattice; it has 6*n_layers^2
    atoms, balanced sublattices and pure armchair boundaries.  n_layers = 1 is
    a single hexagon (N = 6), n_layers = 2 the coronene geometry (N = 24).
    """
    if n_layers < 1:
        raise ValueError(f"n_layers must be >= 1, got {n_layers}")
    n = int(n_layers)
    atoms: set[tuple[int, int]] = set()
    for p in range(-(n - 1), n):
        for q in range(-(n - 1), n):
            if abs(p + q) > n - 1:
                continue
            ci, cj = 3 * (p + q), p - q
            for u, v in _PLAQUETTE:
                atoms.add((ci + u, cj + v))
    geom = _finish(atoms, Hexagon(n_layers=n), params.a)
    assert geom.n_atoms == 6 * n * n
    return geom


def build_square_sample(side: float, params: PhysicalParams) -> SampleGeometry:
    """Square cut |x|, |y| <= side/2 out of the infinite honeycomb lattice.

    Atoms exactly on the boundary are kept (tolerance 1e-9 * a).  The actual
    occupied bounding box (lx, ly) is recorded on the Square descriptor; it is
    what a torus compactification of the sample should use.
    """
    a = params.a
    if side < 3.0 * a:
        raise ValueError(
            f"side={side} too small to contain any unit cell (need side >= 3a = {3 * a})"
        )
    tol = 1e-9 * a
    half = side / 2.0 + tol
    imax = int(math.floor(half / (a / 2.0)))
    jmax = int(math.floor(half / (SQRT3 * a / 2.0)))
    atoms: set[tuple[int, int]] = set()
    for i in range(-imax, imax + 1):
        m = i % 3
        if m == 0:
            continue
        # row parity follows the plaquette index s: i = 3s + 2 on A, 3s - 2 on B
        s = (i - 2) // 3 if m == 2 else (i + 2) // 3
        for j in range(-jmax, jmax + 1):
            if (j - s) % 2 == 0:
                atoms.add((i, j))
    if not atoms:
        raise ValueError(f"side={side} too small to contain any unit cell")
    grid = np.array(sorted(atoms), dtype=int)
    lx = (grid[:, 0].max() - grid[:, 0].min()) * (a / 2.0)
    ly = (grid[:, 1].max() - grid[:, 1].min()) * (SQRT3 * a / 2.0)
    return _finish(atoms, Square(side=side, lx=lx, ly=ly), a)


@dataclass(frozen=True)
class DisorderedConfiguration:
    """One disorder realization: base geometry plus per-atom displacements."""

    base: SampleGeometry
    displacements: np.ndarray
    w: float
    target: DisorderTarget
    seed: int

    @property
    def positions(self) -> np.ndarray:
        return self.base.positions + self.displacements

    @property
    def n_atoms(self) -> int:
        return self.base.n_atoms


def apply_positional_disorder(
    geom: SampleGeometry, w: float, target: DisorderTarget, seed: int
) -> DisorderedConfiguration:
    """In-plane displacement with uniform random radius in [0, w*a] and angle.

    Note the radius (not the area element) is uniform, so <dx^2> = <dy^2> =
    (w*a)^2 / 6.  target='b-only' freezes sublattice A in place.
    """
    if w < 0:
        raise ValueError(f"disorder strength must be >= 0, got w={w}")
    if target not in ("all", "b-only"):
        raise ValueError(f"unknown disorder target {target!r}")
    rng = np.random.default_rng(int(seed))
    n = geom.n_atoms
    rad = rng.uniform(0.0, w * geom.a, size=n)
    ang = rng.uniform(0.0, 2.0 * np.pi, size=n)
    disp = np.empty((n, 2))
    disp[:, 0] = rad * np.cos(ang)
    disp[:, 1] = rad * np.sin(ang)
    if target == "b-only":
        disp[geom.sublattice == "A"] = 0.0
    return DisorderedConfiguration(
        base=geom, displacements=disp, w=float(w), target=target, seed=int(seed)
    )


def ideal_configuration(geom: SampleGeometry) -> DisorderedConfiguration:
    """The W = 0 member of the disorder family (displacements identically zero)."""
    return DisorderedConfiguration(
        base=geom,
        displacements=np.zeros((geom.n_atoms, 2)),
        w=0.0,
        target="all",
        seed=0,
    )


@dataclass(frozen=True)
class RegionLabels:
    """Bulk/edge split of a sample.

    The bulk is the open disk around the sample centre whose radius is the
    distance to the nearest atom of peeling depth <= n_edge; those shallow
    atoms and everything at or beyond that radius are edge.  Ideal positions
    are used, so the split is disorder-independent.
    """

    is_bulk: np.ndarray
    layer_depth: np.ndarray
    n_edge: int
    bulk_radius: float

    @property
    def labels(self) -> np.ndarray:
        return np.where(self.is_bulk, "bulk", "edge")

    @property
    def n_bulk(self) -> int:
        return int(self.is_bulk.sum())

    @property
    def bulk_is_empty(self) -> bool:
        return not bool(self.is_bulk.any())


def partition_bulk_edge(geom: SampleGeometry, n_edge: int = 4) -> RegionLabels:
    if n_edge < 0:
        raise ValueError(f"n_edge must be >= 0, got {n_edge}")
    radii = np.hypot(geom.positions[:, 0], geom.positions[:, 1])
    shallow = geom.layer_depth <= n_edge
    if shallow.any():
        bulk_radius = float(radii[shallow].min())
        is_bulk = radii < bulk_radius
    else:
        # n_edge below the outermost shell: nothing is excluded
        bulk_radius = float(radii.max())
        is_bulk = np.ones(geom.n_atoms, dtype=bool)
    return RegionLabels(
        is_bulk=is_bulk,
        layer_depth=geom.layer_depth,
        n_edge=int(n_edge),
        bulk_radius=bulk_radius,
    )


def export_geometry_csv(
    geom: SampleGeometry, regions: RegionLabels, path
) -> None:
    """Write one row per atom: index,x,y,sublattice,region,layer_depth.

    Indices are 1-based.  Coordinates carry 12 significant digits.
    """
    labels = regions.labels
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["index", "x", "y", "sublattice", "region", "layer_depth"])
        for m in range(geom.n_atoms):
            out.writerow(
                [
                    m + 1,
                    f"{geom.positions[m, 0]:.12g}",
                    f"{geom.positions[m, 1]:.12g}",
                    geom.sublattice[m],
                    labels[m],
                    int(geom.layer_depth[m]),
                ]
            )
