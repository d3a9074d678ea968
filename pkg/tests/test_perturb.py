"""Derivative matrices and the disorder-averaged quadratic eigenvalue shift."""

import numpy as np
import pytest

from honeytopo import (
    PhysicalParams,
    assemble_green_matrix,
    build_hexagonal_sample,
    diagonalize_biorthogonal,
    ideal_configuration,
)
from honeytopo.perturb import (
    NearDegeneracyError,
    averaged_second_order_shift,
    derivative_matrices,
    export_curves_csv,
    export_shift_csv,
    predicted_edge_spectrum,
)

PARAMS = PhysicalParams(delta_b=5.0, delta_ab=2.0)

DERIV_NAMES = ("d_xi", "d_eta", "d_xixi", "d_etaeta", "d_xieta")


def modes_and_derivs(n=1, params=PARAMS):
    geom = build_hexagonal_sample(n, params)
    g = assemble_green_matrix(ideal_configuration(geom), params)
    modes = diagonalize_biorthogonal(g)
    return geom, modes, derivative_matrices(geom, params)


def test_analytic_matches_extended_precision_fd():
    params = PhysicalParams(delta_b=5.0, delta_ab=3.0)
    geom = build_hexagonal_sample(1, params)
    an = derivative_matrices(geom, params)
    fd = derivative_matrices(geom, params, method="fd")
    for name in DERIV_NAMES:
        a, f = getattr(an, name), getattr(fd, name)
        assert np.abs(a - f).max() / np.abs(f).max() < 1e-6


def test_derivative_structure():
    geom, _, derivs = modes_and_derivs()
    n = geom.n_atoms
    for name in DERIV_NAMES:
        m = getattr(derivs, name)
        assert m.shape == (2 * n, 2 * n)
        # same-atom 2x2 blocks carry no separation dependence
        for k in range(n):
            assert np.all(m[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] == 0)
    # the coupling block is even in the separation (bond-reversal invariance),
    # so odd derivatives are blockwise antisymmetric under atom exchange and
    # even ones symmetric
    blk = lambda m, i, j: m[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]
    signs = {"d_xi": -1, "d_eta": -1, "d_xixi": 1, "d_etaeta": 1, "d_xieta": 1}
    for name in DERIV_NAMES:
        m = getattr(derivs, name)
        for i, j in ((0, 1), (2, 5)):
            assert np.array_equal(blk(m, i, j), signs[name] * blk(m, j, i))


def test_fd_method_validation():
    geom = build_hexagonal_sample(1, PARAMS)
    with pytest.raises(ValueError):
        derivative_matrices(geom, PARAMS, method="fd", fd_step=geom.a)
    with pytest.raises(ValueError):
        derivative_matrices(geom, PARAMS, method="fd", fd_step=0.0)
    with pytest.raises(ValueError):
        derivative_matrices(geom, PARAMS, method="symbolic")


def test_second_order_matches_naive_contraction():
    # independent route: dense per-atom displacement matrices and an explicit
    # double loop over mode pairs
    geom, modes, derivs = modes_and_derivs()
    fast = averaged_second_order_shift(modes, derivs, geom.a).lambda2

    n = geom.n_atoms
    dim = 2 * n
    atom_of = np.repeat(np.arange(n), 2)
    lam, lc, rc = modes.eigenvalues, np.conj(modes.left), modes.right
    bf = np.einsum("ia,ij,ja->a", lc, derivs.d_xixi + derivs.d_etaeta, rc) / 6.0
    for m in range(n):
        rowm = atom_of == m
        for d in (derivs.d_xi, derivs.d_eta):
            a_m = np.where(rowm[:, None], d, 0.0) - np.where(rowm[None, :], d, 0.0)
            me = lc.T @ a_m @ rc
            for a in range(dim):
                for b in range(dim):
                    if b != a:
                        bf[a] += me[a, b] * me[b, a] / (lam[a] - lam[b]) / 6.0
    assert np.abs(fast - bf).max() / np.abs(bf).max() < 1e-12


def test_predicted_eigenvalues_reduce_to_ideal_at_zero():
    geom, modes, derivs = modes_and_derivs()
    pred = averaged_second_order_shift(modes, derivs, geom.a)
    assert np.array_equal(pred.predicted_eigenvalues(0.0), modes.eigenvalues)
    shifted = pred.predicted_eigenvalues(0.1)
    assert np.allclose(shifted - modes.eigenvalues, (0.1 * geom.a) ** 2 * pred.lambda2)


def test_exact_degeneracy_raises():
    import warnings

    params = PhysicalParams()  # time-reversal pairs collide exactly
    geom = build_hexagonal_sample(1, params)
    g = assemble_green_matrix(ideal_configuration(geom), params)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        modes = diagonalize_biorthogonal(g)
    with pytest.raises(NearDegeneracyError):
        averaged_second_order_shift(modes, derivative_matrices(geom, params), geom.a)


def test_edge_curves_and_exports(tmp_path):
    geom, modes, derivs = modes_and_derivs()
    pred = averaged_second_order_shift(modes, derivs, geom.a)
    ws = np.array([0.0, 0.05, 0.1])
    sel = [0, 3, 7]
    curves = predicted_edge_spectrum(pred, sel, ws)
    assert curves.detuning.shape == curves.decay.shape == (3, 3)
    assert np.allclose(curves.detuning[:, 0], modes.detuning[sel])
    assert np.allclose(curves.band_edge_low, curves.detuning.min(axis=0))
    assert np.allclose(curves.band_edge_high, curves.detuning.max(axis=0))
    with pytest.raises(ValueError):
        predicted_edge_spectrum(pred, [], ws)

    p1, p2 = tmp_path / "shift.csv", tmp_path / "curves.csv"
    export_shift_csv(pred, p1)
    lines = p1.read_text().splitlines()
    assert lines[0] == "alpha,re_lambda0,im_lambda0,re_lambda2,im_lambda2"
    assert len(lines) == 1 + 2 * geom.n_atoms
    export_curves_csv(curves, p2)
    lines = p2.read_text().splitlines()
    assert lines[0] == "alpha,w,detuning,decay"
    assert len(lines) == 1 + 3 * 3
    assert lines[1].startswith("1,0,")
