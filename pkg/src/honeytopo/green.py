"""Assembly of the 2N x 2N non-Hermitian coupling matrix of N two-level atoms.

Dimensionless units throughout: energies/rates in units of the single-atom
linewidth Gamma0, lengths in lambda0, hence k0 = 2*pi.  Row/column 2m holds
the sigma = +1 circular component of atom m (0-based), row 2m+1 the
sigma = -1 component.

Diagonal 2x2 block of atom m:

    (i +/- 2*delta_ab) * 1  +  2*delta_b * sigma_z      (+ on A, - on B)

Off-diagonal block (m, n):

    -(6*pi/k0) * d_eg . G(r_m - r_n) . d_eg^dagger

with G the in-plane (TE) part of the free-space dyadic Green's function

    G(r) = -(e^{i k0 r} / 4 pi r) * [P(i k0 r) 1 + Q(i k0 r) rr/r^2],
    P(x) = 1 - 1/x + 1/x^2,   Q(x) = -1 + 3/x - 3/x^2,

and d_eg the 2x2 unitary mapping linear (x, y) to circular (+1, -1)
components, row 1 <-> sigma = +1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .lattice import DisorderedConfiguration, PhysicalParams

K0 = 2.0 * np.pi

# rows: sigma = +1, sigma = -1; columns: x, y
D_EG = np.array([[1.0, 1.0j], [-1.0, 1.0j]]) / np.sqrt(2.0)


class CoincidentAtomsError(ValueError):
    pass


def scalar_factors(x: complex) -> tuple[complex, complex]:
    """P(x) = 1 - 1/x + 1/x^2 and Q(x) = -1 + 3/x - 3/x^2 (singular at x = 0)."""
    if x == 0:
        raise ValueError("scalar factors are singular at x = 0")
    inv = 1.0 / x
    return 1.0 - inv + inv * inv, -1.0 + 3.0 * inv - 3.0 * inv * inv


def coupling_block(dr) -> np.ndarray:
    """2x2 coupling block for atom separation dr = r_m - r_n (literal dyadic route).

    Kept as the slow reference path; assemble_green_matrix uses an equivalent
    vectorized closed form and the test suite pins the two against each other.
    """
    dx, dy = float(dr[0]), float(dr[1])
    r = np.hypot(dx, dy)
    if r == 0.0:
        raise CoincidentAtomsError("coupling block undefined for coincident atoms")
    p, q = scalar_factors(1j * K0 * r)
    dyad = np.array([[dx * dx, dx * dy], [dx * dy, dy * dy]]) / (r * r)
    gf = -np.exp(1j * K0 * r) / (4.0 * np.pi * r) * (p * np.eye(2) + q * dyad)
    return (-6.0 * np.pi / K0) * (D_EG @ gf @ D_EG.conj().T)


@dataclass(frozen=True)
class GreenMatrix:
    """Dense 2N x 2N matrix together with the configuration it was built from."""

    entries: np.ndarray
    params: PhysicalParams
    config: DisorderedConfiguration

    @property
    def n_atoms(self) -> int:
        return self.config.n_atoms


def assemble_green_matrix(
    config: DisorderedConfiguration, params: PhysicalParams
) -> GreenMatrix:
    """Build the full matrix at the displaced positions, O(N^2), dense.

    In the circular basis the conjugation by d_eg is available in closed form:
    with u = k0 r and phi the bond angle,

        block = (3 e^{iu} / 2u) * [[P + Q/2,        -(Q/2) e^{+2 i phi}],
                                   [-(Q/2) e^{-2 i phi},      P + Q/2  ]].
    """
    pos = config.positions
    n = len(pos)
    dx = pos[:, 0, None] - pos[None, :, 0]
    dy = pos[:, 1, None] - pos[None, :, 1]
    r = np.hypot(dx, dy)
    off = ~np.eye(n, dtype=bool)
    rmin = r[off].min() if n > 1 else np.inf
    if rmin < 1e-12:
        bad = np.unravel_index(np.argmin(np.where(off, r, np.inf)), r.shape)
        raise CoincidentAtomsError(
            f"atoms {bad[0] + 1} and {bad[1] + 1} coincide (separation {rmin:.3e})"
        )

    with np.errstate(divide="ignore", invalid="ignore"):
        u = K0 * r
        p = 1.0 + 1j / u - 1.0 / u**2          # P(i k0 r)
        qh = 0.5 * (-1.0 - 3j / u + 3.0 / u**2)  # Q(i k0 r) / 2
        pref = 1.5 * np.exp(1j * u) / u
        phase2 = ((dx + 1j * dy) / r) ** 2
        bdiag = pref * (p + qh)
        boff = -pref * qh  # only the angular factor differs between the corners

    g = np.zeros((2 * n, 2 * n), dtype=complex)
    g[0::2, 0::2] = np.where(off, bdiag, 0.0)
    g[1::2, 1::2] = g[0::2, 0::2]
    g[0::2, 1::2] = np.where(off, boff * phase2, 0.0)
    g[1::2, 0::2] = np.where(off, boff * np.conj(phase2), 0.0)

    sgn = np.where(config.base.sublattice == "A", 1.0, -1.0)
    idx = np.arange(n)
    g[2 * idx, 2 * idx] = 1j + 2.0 * sgn * params.delta_ab + 2.0 * params.delta_b
    g[2 * idx + 1, 2 * idx + 1] = 1j + 2.0 * sgn * params.delta_ab - 2.0 * params.delta_b
    return GreenMatrix(entries=g, params=params, config=config)


def polarization_swapped(entries: np.ndarray) -> np.ndarray:
    """Conjugate by the per-atom sigma swap (sigma_x on every 2x2 block).

    For delta_b = 0 the assembled matrix satisfies  M^T = S M S  with this S,
    which is the reciprocity of the underlying dyadic in disguise.
    """
    m = entries.copy()
    m[0::2, :], m[1::2, :] = entries[1::2, :], entries[0::2, :]
    out = m.copy()
    out[:, 0::2], out[:, 1::2] = m[:, 1::2], m[:, 0::2]
    return out


def add_detuning_gradient(g: GreenMatrix, epsilon: float) -> GreenMatrix:
    """Tiny x-linear diagonal shift used to lift exact point-group degeneracies.

    Adds epsilon * x_m / max|x| to both diagonal entries of atom m.  Intended
    for epsilon of order 1e-6 so spectra move by less than any tolerance of
    interest while exact C6v multiplets split.  Note this alone cannot split
    the sigma = +/-1 pairs present at delta_b = 0: those need a term that
    distinguishes the two circular components (add_polarization_splitting).
    """
    x = g.config.positions[:, 0]
    scale = np.abs(x).max() or 1.0
    shift = np.repeat(epsilon * x / scale, 2)
    entries = g.entries.copy()
    entries[np.diag_indices_from(entries)] += shift
    return GreenMatrix(entries=entries, params=g.params, config=g.config)


def add_polarization_splitting(g: GreenMatrix, epsilon: float) -> GreenMatrix:
    """Tiny uniform Zeeman-like shift, +epsilon on sigma=+1 rows and -epsilon
    on sigma=-1 rows.  Breaks the time-reversal pairing that protects the
    exact two-fold degeneracies of the delta_b = 0 spectrum."""
    entries = g.entries.copy()
    d = np.diag_indices_from(entries)[0]
    entries[d[0::2], d[0::2]] += epsilon
    entries[d[1::2], d[1::2]] -= epsilon
    return GreenMatrix(entries=entries, params=g.params, config=g.config)


def write_matrix_dump(g: GreenMatrix, path) -> None:
    """Binary dump: 8-byte little-endian header holding 2N, then the entries
    row-major as little-endian complex doubles."""
    dim = g.entries.shape[0]
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", dim))
        fh.write(np.ascontiguousarray(g.entries, dtype="<c16").tobytes())


def read_matrix_dump(path) -> np.ndarray:
    with open(path, "rb") as fh:
        (dim,) = struct.unpack("<Q", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != dim * dim:
        raise ValueError(f"matrix dump truncated: expected {dim * dim} entries, got {data.size}")
    return data.reshape(dim, dim).astype(complex)
