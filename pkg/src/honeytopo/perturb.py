"""Second-order perturbation theory for weak positional disorder.

Displacements enter the coupling matrix only through the atom separations, so
for dimensionless per-atom displacements u (physical displacement = W*a*u,
radius uniform in [0, 1], angle uniform, hence <u_x^2> = <u_y^2> = 1/6) the
matrix expands as

    M(u) = M0 + (W a) V1 + (W a)^2 V2 + ...

with V1, V2 built from first and second derivatives of the coupling block
with respect to the two separation components (called xi and eta here).  The
disorder-averaged eigenvalue of a non-degenerate mode alpha is then

    <Lambda_alpha> = Lambda0_alpha + (W a)^2 <Lambda2_alpha> + O(W^4),

the linear term vanishing identically because <u> = 0.  <Lambda2> combines
the averaged diagonal second-derivative term with the V1 x V1 cross term,
whose displacement correlations reduce to eight index-contraction patterns
over (m, m-tilde) partner components (the two polarization rows of one atom).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .green import K0
from .lattice import PhysicalParams, SampleGeometry
from .spectrum import ModeSet

DENOMINATOR_FLOOR = 1e-8


class NearDegeneracyError(RuntimeError):
    pass


class _ExpLaurent:
    """e^{i k0 r} * sum_p c_p r^{-p} with exact differentiation in r."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: dict[int, complex]):
        self.coeffs = dict(coeffs)

    def deriv(self) -> "_ExpLaurent":
        out: dict[int, complex] = {}
        for p, c in self.coeffs.items():
            out[p] = out.get(p, 0.0) + 1j * K0 * c
            out[p + 1] = out.get(p + 1, 0.0) - p * c
        return _ExpLaurent(out)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        acc = np.zeros_like(r, dtype=complex)
        for p, c in self.coeffs.items():
            acc += c * r ** (-p)
        return np.exp(1j * K0 * r) * acc


# radial profiles of the coupling block: diagonal entries are F(r), the
# off-diagonal ones -H(r) w^2 and -H(r) conj(w)^2 with w = dx + i dy
_F = _ExpLaurent({1: 3.0 / (4 * K0), 2: -3.0j / (4 * K0**2), 3: 3.0 / (4 * K0**3)})
_H = _ExpLaurent({3: -3.0 / (4 * K0), 4: -9.0j / (4 * K0**2), 5: 9.0 / (4 * K0**3)})


@dataclass(frozen=True)
class DerivativeMatrices:
    """First and second separation derivatives of the ideal coupling matrix.

    2N x 2N each, diagonal 2x2 blocks identically zero (same-atom entries have
    no separation dependence).  xi is the x separation component, eta the y.
    """

    d_xi: np.ndarray
    d_eta: np.ndarray
    d_xixi: np.ndarray
    d_etaeta: np.ndarray
    d_xieta: np.ndarray
    method: str


def derivative_matrices(
    geom: SampleGeometry,
    params: PhysicalParams,
    method: str = "analytic",
    fd_step: float | None = None,
) -> DerivativeMatrices:
    """Evaluate the five derivative matrices at the ideal positions.

    method='analytic' uses closed-form radial derivatives; method='fd' does
    central finite differences of the coupling block in extended precision
    (double precision cannot survive the cancellation at the default step
    h = 1e-6 * a).  The fd path is O(N^2) multiprecision evaluations; keep it
    to small samples.
    """
    if method == "analytic":
        return _analytic_derivatives(geom)
    if method == "fd":
        h = 1e-6 * geom.a if fd_step is None else float(fd_step)
        if not 0.0 < h < geom.a / 10.0:
            raise ValueError(f"fd step must be in (0, a/10), got {h}")
        return _fd_derivatives(geom, h)
    raise ValueError(f"unknown method {method!r}")


def _analytic_derivatives(geom: SampleGeometry) -> DerivativeMatrices:
    pos = geom.positions
    n = len(pos)
    dx = pos[:, 0, None] - pos[None, :, 0]
    dy = pos[:, 1, None] - pos[None, :, 1]
    r = np.hypot(dx, dy)
    off = ~np.eye(n, dtype=bool)
    r_safe = np.where(off, r, 1.0)

    f1 = _F.deriv()
    f2 = f1.deriv()
    h0 = _H
    h1 = h0.deriv()
    h2 = h1.deriv()
    fp, fpp = f1(r_safe), f2(r_safe)
    hv, hp, hpp = h0(r_safe), h1(r_safe), h2(r_safe)

    cx = dx / r_safe
    cy = dy / r_safe
    w = dx + 1j * dy
    wc = np.conj(w)
    w2 = w * w
    wc2 = wc * wc

    def fill(b00, b01, b10) -> np.ndarray:
        m = np.zeros((2 * n, 2 * n), dtype=complex)
        m[0::2, 0::2] = np.where(off, b00, 0.0)
        m[1::2, 1::2] = m[0::2, 0::2]
        m[0::2, 1::2] = np.where(off, b01, 0.0)
        m[1::2, 0::2] = np.where(off, b10, 0.0)
        return m

    d_xi = fill(
        fp * cx,
        -(hp * cx * w2 + 2.0 * hv * w),
        -(hp * cx * wc2 + 2.0 * hv * wc),
    )
    d_eta = fill(
        fp * cy,
        -(hp * cy * w2 + 2j * hv * w),
        -(hp * cy * wc2 - 2j * hv * wc),
    )
    curv_x = (1.0 - cx * cx) / r_safe
    curv_y = (1.0 - cy * cy) / r_safe
    d_xixi = fill(
        fpp * cx * cx + fp * curv_x,
        -((hpp * cx * cx + hp * curv_x) * w2 + 4.0 * hp * cx * w + 2.0 * hv),
        -((hpp * cx * cx + hp * curv_x) * wc2 + 4.0 * hp * cx * wc + 2.0 * hv),
    )
    d_etaeta = fill(
        fpp * cy * cy + fp * curv_y,
        -((hpp * cy * cy + hp * curv_y) * w2 + 4j * hp * cy * w - 2.0 * hv),
        -((hpp * cy * cy + hp * curv_y) * wc2 - 4j * hp * cy * wc - 2.0 * hv),
    )
    mix = (hpp - hp / r_safe) * cx * cy
    d_xieta = fill(
        (fpp - fp / r_safe) * cx * cy,
        -(mix * w2 + 2j * hp * cx * w + 2.0 * hp * cy * w + 2j * hv),
        -(mix * wc2 - 2j * hp * cx * wc + 2.0 * hp * cy * wc - 2j * hv),
    )
    return DerivativeMatrices(
        d_xi=d_xi, d_eta=d_eta, d_xixi=d_xixi, d_etaeta=d_etaeta, d_xieta=d_xieta,
        method="analytic",
    )


def _coupling_block_mp(dx, dy):
    """Literal dyadic coupling block in mpmath arithmetic, 2x2 nested lists."""
    import mpmath as mp

    k0 = 2 * mp.pi
    r = mp.sqrt(dx * dx + dy * dy)
    x = 1j * k0 * r
    p = 1 - 1 / x + 1 / x**2
    q = -1 + 3 / x - 3 / x**2
    s = -mp.exp(1j * k0 * r) / (4 * mp.pi * r)
    rr = [[dx * dx, dx * dy], [dx * dy, dy * dy]]
    gf = [[s * (p * (1 if i == j else 0) + q * rr[i][j] / r**2) for j in (0, 1)] for i in (0, 1)]
    d = [[1 / mp.sqrt(2), 1j / mp.sqrt(2)], [-1 / mp.sqrt(2), 1j / mp.sqrt(2)]]
    dh = [[mp.conj(d[j][i]) for j in (0, 1)] for i in (0, 1)]
    tmp = [[sum(gf[i][k] * dh[k][j] for k in (0, 1)) for j in (0, 1)] for i in (0, 1)]
    out = [[(-6 * mp.pi / k0) * sum(d[i][k] * tmp[k][j] for k in (0, 1)) for j in (0, 1)] for i in (0, 1)]
    return out


def _fd_derivatives(geom: SampleGeometry, h: float) -> DerivativeMatrices:
    import mpmath as mp

    n = geom.n_atoms
    pos = geom.positions
    mats = {k: np.zeros((2 * n, 2 * n), dtype=complex) for k in
            ("d_xi", "d_eta", "d_xixi", "d_etaeta", "d_xieta")}
    with mp.workdps(45):
        hh = mp.mpf(h)
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                dx = mp.mpf(pos[a, 0]) - mp.mpf(pos[b, 0])
                dy = mp.mpf(pos[a, 1]) - mp.mpf(pos[b, 1])
                bpx = _coupling_block_mp(dx + hh, dy)
                bmx = _coupling_block_mp(dx - hh, dy)
                bpy = _coupling_block_mp(dx, dy + hh)
                bmy = _coupling_block_mp(dx, dy - hh)
                b0 = _coupling_block_mp(dx, dy)
                bpp = _coupling_block_mp(dx + hh, dy + hh)
                bpm = _coupling_block_mp(dx + hh, dy - hh)
                bmp_ = _coupling_block_mp(dx - hh, dy + hh)
                bmm = _coupling_block_mp(dx - hh, dy - hh)
                for i in (0, 1):
                    for j in (0, 1):
                        r_, c_ = 2 * a + i, 2 * b + j
                        mats["d_xi"][r_, c_] = complex((bpx[i][j] - bmx[i][j]) / (2 * hh))
                        mats["d_eta"][r_, c_] = complex((bpy[i][j] - bmy[i][j]) / (2 * hh))
                        mats["d_xixi"][r_, c_] = complex(
                            (bpx[i][j] - 2 * b0[i][j] + bmx[i][j]) / hh**2
                        )
                        mats["d_etaeta"][r_, c_] = complex(
                            (bpy[i][j] - 2 * b0[i][j] + bmy[i][j]) / hh**2
                        )
                        mats["d_xieta"][r_, c_] = complex(
                            (bpp[i][j] - bpm[i][j] - bmp_[i][j] + bmm[i][j]) / (4 * hh**2)
                        )
    return DerivativeMatrices(method=f"fd(h={h:g})", **mats)


@dataclass(frozen=True)
class PerturbedSpectrum:
    """Ideal eigenvalues plus their averaged quadratic disorder response.

    predicted_eigenvalues(w) = lambda0 + (w*a)^2 * lambda2.  The linear
    response vanishes identically under the zero-mean displacement ensemble,
    so it is not represented.
    """

    lambda0: np.ndarray
    lambda2: np.ndarray
    a: float

    def predicted_eigenvalues(self, w: float) -> np.ndarray:
        return self.lambda0 + (w * self.a) ** 2 * self.lambda2


def averaged_second_order_shift(
    modes: ModeSet, derivs: DerivativeMatrices, a: float
) -> PerturbedSpectrum:
    """Disorder-averaged quadratic coefficient for every mode at once.

    Needs left vectors.  Raises NearDegeneracyError when an eigenvalue pair
    sits closer than DENOMINATOR_FLOOR while its coupling numerator is
    nonzero; pairs whose numerator vanishes (symmetry-decoupled) are skipped.
    """
    if modes.left is None:
        raise ValueError("second-order shifts need left eigenvectors")
    lam = modes.eigenvalues
    lc = np.conj(modes.left)
    rc = modes.right
    dim = lc.shape[0]
    swap = np.arange(dim).reshape(-1, 2)[:, ::-1].ravel()

    diag_term = np.einsum(
        "ia,ia->a", lc, (derivs.d_xixi + derivs.d_etaeta) @ rc
    ) / 6.0

    t = np.zeros((dim, dim), dtype=complex)
    for d in (derivs.d_xi, derivs.d_eta):
        ax = d @ rc
        bt = (lc.T @ d).T          # bt[i, a] = sum_j conj(L)[j, a] d[j, i]
        e = lc * ax
        t += e.T @ e
        t += (lc * ax[swap]).T @ (lc[swap] * ax)
        hmat = rc * bt
        t += hmat.T @ hmat
        t += (rc[swap] * bt).T @ (rc * bt[swap])
        j1 = ax * bt
        j2 = ax * bt[swap]
        t5 = -(lc * rc).T @ j1
        t6 = -(lc * rc[swap]).T @ j2
        t += t5 + t5.T + t6 + t6.T
    t /= 6.0

    dl = lam[:, None] - lam[None, :]
    np.fill_diagonal(dl, np.inf)
    tiny = np.abs(dl) < DENOMINATOR_FLOOR
    if tiny.any():
        num_scale = np.abs(t).max()
        blocked = tiny & (np.abs(t) > 1e-9 * max(num_scale, 1.0))
        if blocked.any():
            pairs = np.argwhere(blocked)[:8]
            raise NearDegeneracyError(
                "second-order shift diverges for near-degenerate pairs "
                f"{[tuple(p) for p in pairs]}; split them (e.g. a tiny detuning "
                "gradient) before asking for perturbative shifts"
            )
        dl = np.where(tiny, np.inf, dl)

    lambda2 = diag_term + (t / dl).sum(axis=1)
    return PerturbedSpectrum(lambda0=lam.copy(), lambda2=lambda2, a=float(a))


@dataclass(frozen=True)
class EdgeCurves:
    """Predicted detuning/decay trajectories of selected modes vs W."""

    mode_indices: np.ndarray
    w_grid: np.ndarray
    detuning: np.ndarray        # (n_modes, n_w)
    decay: np.ndarray
    band_edge_low: np.ndarray   # (n_w,) lowest predicted detuning among the modes
    band_edge_high: np.ndarray


def export_shift_csv(perturbed: PerturbedSpectrum, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("alpha,re_lambda0,im_lambda0,re_lambda2,im_lambda2\n")
        for k in range(len(perturbed.lambda0)):
            l0, l2 = perturbed.lambda0[k], perturbed.lambda2[k]
            fh.write(
                f"{k + 1},{l0.real:.12g},{l0.imag:.12g},{l2.real:.12g},{l2.imag:.12g}\n"
            )


def export_curves_csv(curves: "EdgeCurves", path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("alpha,w,detuning,decay\n")
        for i, m in enumerate(curves.mode_indices):
            for j, w in enumerate(curves.w_grid):
                fh.write(
                    f"{m + 1},{w:.12g},{curves.detuning[i, j]:.12g},"
                    f"{curves.decay[i, j]:.12g}\n"
                )


def predicted_edge_spectrum(
    perturbed: PerturbedSpectrum, mode_indices, w_grid
) -> EdgeCurves:
    idx = np.asarray(mode_indices, dtype=int)
    ws = np.asarray(w_grid, dtype=float)
    if idx.size == 0:
        raise ValueError("no modes selected")
    lam = (
        perturbed.lambda0[idx, None]
        + (ws[None, :] * perturbed.a) ** 2 * perturbed.lambda2[idx, None]
    )
    det = -lam.real / 2.0
    return EdgeCurves(
        mode_indices=idx,
        w_grid=ws,
        detuning=det,
        decay=lam.imag,
        band_edge_low=det.min(axis=0),
        band_edge_high=det.max(axis=0),
    )
