"""Bott index of the low-frequency mode projector on a torus-compactified sample.

The sample (ideally a square cut) is wrapped on a torus of circumferences
(lx, ly); atom positions enter through the phases exp(2*pi*i*x/lx).  For a
spectral projector built from biorthogonal pairs the projected position
unitaries are, in the mode basis,

    V_X[ab] = sum_{m,sigma} conj(L_a[m,sigma]) R_b[m,sigma] exp(2*pi*i*x_m/lx)

and the index is

    C_B = (1/2*pi) * sum_n Im log w_n,    w_n = eigenvalues of
    W = V_X V_Y V_X^dagger V_Y^dagger,

with the principal branch of the logarithm.  C_B is near an integer when the
projected unitaries almost commute, i.e. when the projector is local on the
scale of the sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .spectrum import ModeSet

UNITARITY_FLOOR = 1e-12


class EmptyProjectorError(ValueError):
    pass


class IllConditionedProjectorError(RuntimeError):
    pass


@dataclass(frozen=True)
class BottInput:
    """Everything the index needs: modes with left vectors, displaced atom
    positions (N, 2), torus circumferences, and the detuning threshold delta
    selecting the projector S = {alpha : detuning_alpha <= delta}."""

    modes: ModeSet
    positions: np.ndarray
    lx: float
    ly: float
    delta: float


def _projector_size(modes: ModeSet, delta: float) -> int:
    # modes are sorted by detuning, so S is a leading block
    return int(np.searchsorted(modes.detuning, delta, side="right"))


def build_projected_position_unitaries(inp: BottInput) -> tuple[np.ndarray, np.ndarray]:
    """(V_X, V_Y) restricted to the selected modes; raises on an empty selection."""
    k = _projector_size(inp.modes, inp.delta)
    if k == 0:
        raise EmptyProjectorError(f"no mode has detuning <= {inp.delta}")
    if inp.modes.left is None:
        raise ValueError("Bott index needs left eigenvectors (want_left=True)")
    lc = inp.modes.left[:, :k]
    rc = inp.modes.right[:, :k]
    phx = np.exp(2j * np.pi * np.repeat(inp.positions[:, 0], 2) / inp.lx)
    phy = np.exp(2j * np.pi * np.repeat(inp.positions[:, 1], 2) / inp.ly)
    vx = lc.conj().T @ (phx[:, None] * rc)
    vy = lc.conj().T @ (phy[:, None] * rc)
    return vx, vy


def _index_from_unitaries(vx: np.ndarray, vy: np.ndarray) -> float:
    w = vx @ vy @ vx.conj().T @ vy.conj().T
    wn = sla.eigvals(w)
    if np.abs(wn).min() < UNITARITY_FLOOR:
        raise IllConditionedProjectorError(
            f"loop-operator eigenvalue at {np.abs(wn).min():.3e}; "
            "projector too non-unitary for a meaningful index"
        )
    return float(np.sum(np.log(wn).imag) / (2.0 * np.pi))


def bott_index(inp: BottInput) -> float:
    """The index at one threshold; an empty projector gives 0 by convention."""
    try:
        vx, vy = build_projected_position_unitaries(inp)
    except EmptyProjectorError:
        return 0.0
    return _index_from_unitaries(vx, vy)


def export_bott_csv(rows, path) -> None:
    """rows as produced by bott_scan: (delta, C_B, modes in projector)."""
    with open(path, "w", newline="") as fh:
        fh.write("delta,c_b,n_modes_in_projector\n")
        for d, cb, k in rows:
            fh.write(f"{d:.12g},{cb:.12g},{k}\n")


def bott_scan(
    modes: ModeSet,
    positions: np.ndarray,
    lx: float,
    ly: float,
    deltas,
) -> list[tuple[float, float, int]]:
    """Index as a function of threshold; returns (delta, C_B, modes in projector).

    The projected unitaries at successive thresholds are nested leading
    submatrices of the all-mode ones, so those are built once.
    """
    if modes.left is None:
        raise ValueError("Bott index needs left eigenvectors (want_left=True)")
    full = BottInput(
        modes=modes, positions=positions, lx=lx, ly=ly,
        delta=float(modes.detuning[-1]),
    )
    vx, vy = build_projected_position_unitaries(full)
    out = []
    for d in deltas:
        k = _projector_size(modes, float(d))
        cb = 0.0 if k == 0 else _index_from_unitaries(vx[:k, :k], vy[:k, :k])
        out.append((float(d), cb, k))
    return out
