"""Independent oracles used to pin the implementation in the tests.

Everything here is deliberately written from the defining formulas, not from
the package internals: multiprecision dyadic evaluation, float rasterization
of the infinite lattice with geometric masks, brute-force double loops.
"""

import math

import mpmath as mp
import numpy as np

SQRT3 = math.sqrt(3.0)


def mp_coupling_block(dx, dy, dps=40):
    """Literal high-precision evaluation: take the in-plane dyadic, conjugate
    by the circular-basis matrix, scale by -6 pi / k0.  Returns a complex
    2x2 numpy array."""
    with mp.workdps(dps):
        k0 = 2 * mp.pi
        dx, dy = mp.mpf(dx), mp.mpf(dy)
        r = mp.sqrt(dx * dx + dy * dy)
        x = mp.mpc(0, 1) * k0 * r
        p = 1 - 1 / x + 1 / x**2
        q = -1 + 3 / x - 3 / x**2
        scale = -mp.exp(mp.mpc(0, 1) * k0 * r) / (4 * mp.pi * r)
        gf = [
            [scale * (p + q * dx * dx / r**2), scale * (q * dx * dy / r**2)],
            [scale * (q * dx * dy / r**2), scale * (p + q * dy * dy / r**2)],
        ]
        s2 = 1 / mp.sqrt(2)
        d = [[s2, mp.mpc(0, 1) * s2], [-s2, mp.mpc(0, 1) * s2]]
        # block = (-6 pi / k0) * d gf d^H, all sums written out
        out = np.empty((2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                acc = mp.mpc(0)
                for k in range(2):
                    for l in range(2):
                        acc += d[i][k] * gf[k][l] * mp.conj(d[j][l])
                out[i, j] = complex((-6 * mp.pi / k0) * acc)
    return out


def mp_dimer_eigenvalues(a, dps=40):
    """Closed-form eigenvalues of the two-atom matrix at separation (a, 0)
    with both detunings zero: i +/- (diag +/- offdiag) of the coupling block.

    The 4x4 matrix is [[i 1, B], [B, i 1]] and B is symmetric for a bond along
    x, so its eigenvectors split into symmetric/antisymmetric sectors.
    """
    with mp.workdps(dps):
        k0 = 2 * mp.pi
        r = mp.mpf(a)
        u = k0 * r
        i_ = mp.mpc(0, 1)
        p = 1 + i_ / u - 1 / u**2
        qh = (-1 - 3 * i_ / u + 3 / u**2) / 2
        pref = mp.mpf(3) / 2 * mp.exp(i_ * u) / u
        diag = pref * (p + qh)
        off = -pref * qh
        lam = [i_ + diag + off, i_ + diag - off, i_ - diag - off, i_ - diag + off]
        return sorted((complex(l) for l in lam), key=lambda z: -z.real)


def rasterize_hexagon_atoms(n_layers, a):
    """All atoms of the infinite honeycomb inside the armchair hexagon mask.

    The flake of n rings is exactly the set of atoms whose projections onto
    the three directions at 0, 60, 120 degrees all stay within
    R = (n - 1) * 3a/2 + a.  Atoms are generated from the Bravais translation
    formula, independent of the integer-grid construction in the package.
    """
    n = n_layers
    rmax = (n - 1) * 1.5 * a + a
    tol = 1e-9 * a
    pts = []
    # honeycomb = triangular Bravais lattice + two-atom basis
    a1 = np.array([1.5 * a, SQRT3 / 2 * a])
    a2 = np.array([1.5 * a, -SQRT3 / 2 * a])
    basis = {"A": np.array([a, 0.0]), "B": np.array([-a, 0.0])}
    span = int(math.ceil(rmax / a)) + 3
    dirs = [np.array([math.cos(t), math.sin(t)]) for t in (0.0, math.pi / 3, 2 * math.pi / 3)]
    for p in range(-span, span + 1):
        for q in range(-span, span + 1):
            cell = p * a1 + q * a2
            for lab, b in basis.items():
                pos = cell + b
                if all(abs(float(d @ pos)) <= rmax + tol for d in dirs):
                    pts.append((pos[0], pos[1], lab))
    return pts


def rasterize_square_atoms(side, a):
    """Atoms of the infinite honeycomb with |x|, |y| <= side/2 (inclusive)."""
    tol = 1e-9 * a
    half = side / 2 + tol
    pts = []
    a1 = np.array([1.5 * a, SQRT3 / 2 * a])
    a2 = np.array([1.5 * a, -SQRT3 / 2 * a])
    basis = {"A": np.array([a, 0.0]), "B": np.array([-a, 0.0])}
    span = int(math.ceil(side / a)) + 3
    for p in range(-span, span + 1):
        for q in range(-span, span + 1):
            cell = p * a1 + q * a2
            for lab, b in basis.items():
                pos = cell + b
                if abs(pos[0]) <= half and abs(pos[1]) <= half:
                    pts.append((pos[0], pos[1], lab))
    return pts


def ipr_two_loop(vec):
    """Direct double-summation of the participation formula."""
    n = len(vec) // 2
    num = 0.0
    den = 0.0
    for m in range(n):
        w = 0.0
        for s in (0, 1):
            w += abs(vec[2 * m + s]) ** 2
        num += w * w
        den += w
    return num / den**2


def site_basis_bott_unitaries(left, right, k, positions, lx, ly):
    """Projected position unitaries via the full 2N x 2N projector P U P,
    then reduced to the k-dimensional mode basis."""
    lc = left[:, :k]
    rc = right[:, :k]
    proj = rc @ lc.conj().T
    ux = np.diag(np.exp(2j * np.pi * np.repeat(positions[:, 0], 2) / lx))
    uy = np.diag(np.exp(2j * np.pi * np.repeat(positions[:, 1], 2) / ly))
    vx = lc.conj().T @ (proj @ ux @ proj) @ rc
    vy = lc.conj().T @ (proj @ uy @ proj) @ rc
    return vx, vy


def site_basis_bott_index(left, right, k, positions, lx, ly):
    vx, vy = site_basis_bott_unitaries(left, right, k, positions, lx, ly)
    w = np.linalg.eigvals(vx @ vy @ vx.conj().T @ vy.conj().T)
    return float(np.sum(np.log(w).imag) / (2 * np.pi))
