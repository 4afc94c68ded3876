"""Least-squares solver for the conformal reparametrization problem.

Given a normal field s = s_sc nu on a conformal chart, find a tangential
field sigma = Re(g) u_x - Im(g) u_y killing the infinitesimal conformal
deficit:

    d_z g = phi_s := (1/2) s_sc [(a11 - a22) - 2 i a12]   on Sigma,
    boundary tangency of s + sigma on each wall ring.

In the disk chart z = r e^{i phi} the tangency condition reads
Re(e^{i phi} g) = -e^{-lambda} cot(theta) s_sc at r = 1; on the flat
cylinder chart z = t + i phi it is a condition on Re(g) at each ring with
the sign of the outward conormal.  Expanding in angular Fourier modes
decouples the PDE into first-order radial systems; the boundary condition
couples conjugate mode pairs.  Each small block is solved by dense
minimum-norm least squares (the kernel consists of conformal fields, which
do not affect any downstream identity).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .deficit import conformal_deficit
from .geometry import GeometryField
from .grids import ANNULUS, DISK
from .variations import VariationField, split_field

__all__ = ["ReparamSolution", "solve_conformal_reparam", "gauge_field"]


@dataclass(frozen=True)
class ReparamSolution:
    geom: GeometryField
    g: np.ndarray = field(repr=False)        # complex (n_r, n_phi)
    sigma: np.ndarray = field(repr=False)
    vfield: VariationField = field(repr=False)  # s + sigma, split cached
    pde_residual: float = 0.0
    bc_residual: float = 0.0
    deficit: float = 0.0
    tangency_residual: float = 0.0

    def record(self) -> dict:
        return {
            "pde_residual": self.pde_residual,
            "bc_residual": self.bc_residual,
            "deficit": self.deficit,
            "tangency_residual": self.tangency_residual,
        }


def _rhs_field(geom: GeometryField, s_sc: np.ndarray) -> np.ndarray:
    return 0.5 * s_sc * ((geom.a11 - geom.a22) - 2j * geom.a12)


def _boundary_data(geom: GeometryField, s_sc: np.ndarray, theta: float) -> dict[int, np.ndarray]:
    """Real boundary data per wall ring for the tangency condition on g."""
    out = {}
    cot = 1.0 / np.tan(theta)
    for rd in geom.wall_rings():
        i = rd.ring.i_r
        elam = np.exp(geom.lam[i])
        # sigma_n = -cot(alpha) s on every ring; conormal sign enters below
        out[i] = -rd.ring.side * cot * s_sc[i] / elam
    return out


def solve_conformal_reparam(geom: GeometryField, s_sc: np.ndarray, theta: float,
                            pde_weight: float = 1.0, bc_weight: float = 10.0) -> ReparamSolution:
    """Solve for the deficit-killing tangential reparametrization field."""
    if not geom.conformal:
        raise ValueError("the reparametrization problem needs a conformal chart")
    if geom.chart.branch_order > 0:
        raise ValueError("branched charts are not admitted in the spectral pipeline")
    g = geom.grid
    n_r, n_phi = g.shape
    rhs = _rhs_field(geom, s_sc)
    rhs_hat = np.fft.fft(rhs, axis=1) / n_phi       # coefficient convention
    beta = _boundary_data(geom, s_sc, theta)
    beta_hat = {i: np.fft.fft(b) / n_phi for i, b in beta.items()}
    modes = np.fft.fftfreq(n_phi, d=1.0 / n_phi).astype(int)
    mode_pos = {int(m): idx for idx, m in enumerate(modes)}

    sqw = np.sqrt(np.abs(g.wr) * (g.r if g.topology == DISK else 1.0)) * pde_weight
    ghat = np.zeros((n_r, n_phi), dtype=complex)

    def pde_block(m: int):
        # disk: (1/2)[g_m' + (m/r) g_m] = rhs_hat_{m-1}
        # annulus: (1/2)[g_m' + m g_m] = rhs_hat_m
        if g.topology == DISK:
            A = 0.5 * (g.Dr + np.diag(m / g.r))
            k = m - 1
        else:
            A = 0.5 * (g.Dr + m * np.eye(n_r))
            k = m
        if k in mode_pos:
            b = rhs_hat[:, mode_pos[k]].copy()
        else:
            b = np.zeros(n_r, dtype=complex)
        return sqw[:, None] * A, sqw * b

    def real_block(A, b):
        # complex rows -> stacked real rows acting on [Re z, Im z]
        n = A.shape[1]
        R = np.zeros((2 * A.shape[0], 2 * n))
        R[0::2, :n] = A.real
        R[0::2, n:] = -A.imag
        R[1::2, :n] = A.imag
        R[1::2, n:] = A.real
        rb = np.zeros(2 * A.shape[0])
        rb[0::2] = b.real
        rb[1::2] = b.imag
        return R, rb

    solved = set()

    def solve_pair(m1: int, m2: int | None):
        # stack PDE rows of both modes plus the ring coupling constraints
        A1, b1 = pde_block(m1)
        R1, rb1 = real_block(A1, b1)
        if m2 is None or m2 == m1:
            nun = 2 * n_r
            rows = [R1]
            rhs_rows = [rb1]
            offs = {m1: 0}
        else:
            A2, b2 = pde_block(m2)
            R2, rb2 = real_block(A2, b2)
            nun = 4 * n_r
            Z = np.zeros_like(R1)
            rows = [np.hstack([R1, Z]), np.hstack([Z, R2])]
            rhs_rows = [rb1, rb2]
            offs = {m1: 0, m2: 2 * n_r}
        con_rows, con_rhs = [], []
        for i_ring, bh in beta_hat.items():
            pos = i_ring  # radial index of the ring
            # constraint on mode pair (m1, m2): g_{m1}(ring) + conj(g_{m2}(ring)) = 2 beta_hat_k
            # with k = m1 + 1 on the disk, k = m1 on the annulus
            k = m1 + 1 if g.topology == DISK else m1
            if k not in mode_pos:
                continue
            bk = bh[mode_pos[k]]
            row_re = np.zeros(nun)
            row_im = np.zeros(nun)
            o1 = offs[m1]
            row_re[o1 + pos] = 1.0
            row_im[o1 + n_r + pos] = 1.0
            if m2 is None or m2 == m1:
                # self-paired: Re part doubles, Im part cancels
                row_re[o1 + pos] = 2.0
                row_im[:] = 0.0
                con_rows.append(bc_weight * row_re)
                con_rhs.append(bc_weight * 2.0 * bk.real)
            else:
                o2 = offs[m2]
                row_re[o2 + pos] = 1.0
                row_im[o2 + n_r + pos] = -1.0
                con_rows.append(bc_weight * row_re)
                con_rhs.append(bc_weight * 2.0 * bk.real)
                con_rows.append(bc_weight * row_im)
                con_rhs.append(bc_weight * 2.0 * bk.imag)
        Amat = np.vstack(rows + [np.array(con_rows)]) if con_rows else np.vstack(rows)
        bvec = np.concatenate(rhs_rows + [np.array(con_rhs)]) if con_rhs else np.concatenate(rhs_rows)
        sol, *_ = np.linalg.lstsq(Amat, bvec, rcond=None)
        for m, o in offs.items():
            ghat[:, mode_pos[m]] = sol[o:o + n_r] + 1j * sol[o + n_r:o + 2 * n_r]
            solved.add(m)

    if g.topology == DISK:
        # pairs (m1, m2) = (k - 1, -k - 1)
        solve_pair(-1, None)
        for k in range(1, n_phi // 2):
            solve_pair(k - 1, -k - 1)
        for m in [int(m) for m in modes if int(m) not in solved]:
            solve_pair(m, None)
    else:
        solve_pair(0, None)
        for k in range(1, n_phi // 2):
            solve_pair(k, -k)
        for m in [int(m) for m in modes if int(m) not in solved]:
            solve_pair(m, None)

    g_sol = np.fft.ifft(ghat * n_phi, axis=1)
    sigma = g_sol.real[..., None] * geom.ux - g_sol.imag[..., None] * geom.uy
    v = s_sc[..., None] * geom.nu + sigma
    vfield = split_field(geom, v, {"kind": "reparam"})

    # residual record
    gx, gy = g.diff_xy(g_sol)
    dzg = 0.5 * (gx - 1j * gy)
    pde_res = float(np.sqrt(np.sum(g.weights * np.abs(dzg - rhs) ** 2)))
    bc_res = 0.0
    for i_ring, b in beta.items():
        if g.topology == DISK:
            lhs = np.real(np.exp(1j * g.phi) * g_sol[i_ring])
        else:
            lhs = g_sol[i_ring].real
        bc_res = max(bc_res, float(np.max(np.abs(lhs - b))))
    deficit = conformal_deficit(geom, vfield).value
    return ReparamSolution(geom=geom, g=g_sol, sigma=sigma, vfield=vfield,
                           pde_residual=pde_res, bc_residual=bc_res,
                           deficit=deficit,
                           tangency_residual=vfield.tangency_residual)


def gauge_field(geom: GeometryField, s_sc: np.ndarray, theta: float,
                width: float = 0.25) -> np.ndarray:
    """A reference tangential field matching the boundary data (zeta_s).

    Localized near the wall rings by a Gaussian profile; subtracting it
    turns the affine tangency condition into a linear one.  The solver does
    not need it (it handles the affine condition directly); it is exposed
    for diagnostics.
    """
    g = geom.grid
    beta = _boundary_data(geom, s_sc, theta)
    gz = np.zeros(g.shape, dtype=complex)
    span = g.r[-1] - g.r[0]
    for i_ring, b in beta.items():
        bump = np.exp(-(((g.r - g.r[i_ring]) / (width * span)) ** 2))
        if g.topology == DISK:
            gz += bump[:, None] * (np.exp(-1j * g.phi) * b)[None, :]
        else:
            gz += bump[:, None] * b[None, :]
    return gz
