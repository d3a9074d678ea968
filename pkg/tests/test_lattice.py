"""Geometry tests: constructors against an independent rasterization of the
infinite honeycomb, peeling, disorder statistics, bulk/edge partition."""

import csv

import numpy as np
import pytest

from honeytopo import (
    PhysicalParams,
    apply_positional_disorder,
    build_hexagonal_sample,
    build_square_sample,
    export_geometry_csv,
    ideal_configuration,
    partition_bulk_edge,
)

from oracles import rasterize_hexagon_atoms, rasterize_square_atoms

PARAMS = PhysicalParams()
A = PARAMS.a


def as_sorted_tuples(positions, labels, a):
    # snap to 1e-12*a so float jitter cannot reorder the comparison
    return sorted(
        (round(x / a, 9), round(y / a, 9), str(l))
        for (x, y), l in zip(positions, labels)
    )


def test_hexagon_atom_counts():
    for n, count in [(1, 6), (2, 24), (3, 54), (4, 96), (10, 600)]:
        geom = build_hexagonal_sample(n, PARAMS)
        assert geom.n_atoms == count == 6 * n * n


def test_hexagon_matches_rasterized_lattice():
    for n in (1, 2, 3, 4):
        geom = build_hexagonal_sample(n, PARAMS)
        got = as_sorted_tuples(geom.positions, geom.sublattice, A)
        ref = sorted(
            (round(x / A, 9), round(y / A, 9), l)
            for x, y, l in rasterize_hexagon_atoms(n, A)
        )
        assert got == ref


def test_square_matches_rasterized_lattice():
    for side in (10 * A, 14 * A, 0.7):
        geom = build_square_sample(side, PARAMS)
        got = as_sorted_tuples(geom.positions, geom.sublattice, A)
        ref = sorted(
            (round(x / A, 9), round(y / A, 9), l)
            for x, y, l in rasterize_square_atoms(side, A)
        )
        assert got == ref
        assert geom.shape.lx <= side + 1e-9
        assert geom.shape.ly <= side + 1e-9


def test_square_bounding_box_recorded():
    geom = build_square_sample(1.0, PARAMS)
    x, y = geom.positions[:, 0], geom.positions[:, 1]
    assert geom.shape.lx == pytest.approx(x.max() - x.min(), abs=1e-15)
    assert geom.sublattice.shape == (geom.n_atoms,)
    assert geom.shape.ly == pytest.approx(y.max() - y.min(), abs=1e-15)


def test_sublattice_balance_and_spacing():
    geom = build_hexagonal_sample(3, PARAMS)
    assert (geom.sublattice == "A").sum() == (geom.sublattice == "B").sum()
    d = np.linalg.norm(geom.positions[:, None] - geom.positions[None, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    assert d.min() == pytest.approx(A, rel=1e-12)
    # honeycomb coordination: at most 3 nearest neighbours, bond always A-B
    nn = d < 1.001 * A
    assert nn.sum(axis=1).max() == 3
    i, j = np.nonzero(nn)
    assert np.all(geom.sublattice[i] != geom.sublattice[j])


def test_bad_geometry_arguments():
    with pytest.raises(ValueError):
        build_hexagonal_sample(0, PARAMS)
    with pytest.raises(ValueError):
        build_square_sample(2.0 * A, PARAMS)
    with pytest.raises(ValueError):
        PhysicalParams(a=0.0)


def test_peeling_depths():
    geom = build_hexagonal_sample(1, PARAMS)
    assert np.all(geom.layer_depth == 1)  # a single plaquette is all rim
    geom = build_hexagonal_sample(4, PARAMS)
    assert geom.layer_depth.min() == 1
    assert geom.layer_depth.max() > 2
    # depth-1 shell contains the extreme atoms
    r = np.hypot(geom.positions[:, 0], geom.positions[:, 1])
    assert geom.layer_depth[np.argmax(r)] == 1


def test_disorder_bounds_and_determinism():
    geom = build_hexagonal_sample(3, PARAMS)
    cfg = apply_positional_disorder(geom, 0.3, "all", seed=7)
    r = np.hypot(cfg.displacements[:, 0], cfg.displacements[:, 1])
    assert r.max() <= 0.3 * A + 1e-15
    assert np.array_equal(
        cfg.displacements, apply_positional_disorder(geom, 0.3, "all", 7).displacements
    )
    other = apply_positional_disorder(geom, 0.3, "all", seed=8)
    assert not np.array_equal(cfg.displacements, other.displacements)


def test_disorder_b_only_freezes_a():
    geom = build_hexagonal_sample(3, PARAMS)
    cfg = apply_positional_disorder(geom, 0.2, "b-only", seed=3)
    a_rows = geom.sublattice == "A"
    assert np.all(cfg.displacements[a_rows] == 0.0)
    assert np.all(np.any(cfg.displacements[~a_rows] != 0.0, axis=1))


def test_displacement_second_moment():
    """<dx^2> = (W a)^2 / 6 for a uniform radius draw; 3 sigma gate."""
    geom = build_hexagonal_sample(10, PARAMS)
    w = 0.5
    samples = np.concatenate(
        [
            apply_positional_disorder(geom, w, "all", seed).displacements[:, 0]
            for seed in range(40)
        ]
    )
    n = samples.size
    mean_sq = (samples**2).mean()
    expect = (w * A) ** 2 / 6.0
    sigma = np.sqrt(17.0 / 360.0) * (w * A) ** 2 / np.sqrt(n)  # var(dx^2) = 17(Wa)^4/360
    assert abs(mean_sq - expect) < 3 * sigma


def test_ideal_configuration_is_zero_disorder():
    geom = build_hexagonal_sample(2, PARAMS)
    cfg = ideal_configuration(geom)
    assert cfg.w == 0.0
    assert np.all(cfg.displacements == 0.0)
    assert np.array_equal(cfg.positions, geom.positions)
    with pytest.raises(ValueError):
        apply_positional_disorder(geom, -0.1, "all", 0)
    with pytest.raises(ValueError):
        apply_positional_disorder(geom, 0.1, "edge-only", 0)


def test_partition_bulk_edge():
    geom = build_hexagonal_sample(6, PARAMS)
    reg = partition_bulk_edge(geom, n_edge=4)
    r = np.hypot(geom.positions[:, 0], geom.positions[:, 1])
    # every bulk atom is strictly inside the radius of the nearest shallow atom
    shallow_r = r[geom.layer_depth <= 4].min()
    assert reg.bulk_radius == pytest.approx(shallow_r)
    assert np.array_equal(reg.is_bulk, r < reg.bulk_radius)
    assert np.all(geom.layer_depth[reg.is_bulk] > 4)
    assert 0 < reg.n_bulk < geom.n_atoms
    assert set(reg.labels) == {"bulk", "edge"}


def test_partition_nesting_and_all_bulk():
    geom = build_hexagonal_sample(6, PARAMS)
    radii = [partition_bulk_edge(geom, k).bulk_radius for k in range(0, 5)]
    assert all(r1 >= r2 for r1, r2 in zip(radii, radii[1:]))
    everything = partition_bulk_edge(geom, 0)
    assert everything.n_bulk == geom.n_atoms
    assert not everything.bulk_is_empty
    with pytest.raises(ValueError):
        partition_bulk_edge(geom, -1)


def test_geometry_csv_round_trip(tmp_path):
    geom = build_hexagonal_sample(2, PARAMS)
    reg = partition_bulk_edge(geom, 1)
    path = tmp_path / "geom.csv"
    export_geometry_csv(geom, reg, path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == geom.n_atoms
    assert [int(r["index"]) for r in rows] == list(range(1, geom.n_atoms + 1))
    first = rows[0]
    assert first["sublattice"] in ("A", "B")
    assert first["region"] in ("bulk", "edge")
    got = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    assert np.allclose(got, geom.positions, atol=1e-12)
