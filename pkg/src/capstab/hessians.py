"""Analytic second-variation formulas and their finite-difference oracles.

Formula ids and the functionals they differentiate twice:

* ``AREA``        Hessian of the area.
* ``VOLUME``      Hessian of the weighted enclosed-volume V^h.
* ``WETTING``     Hessian of the weighted wetting functional W^theta.
* ``COMBINED``    Hessian of A^{h,theta} = A + V^h + W^theta (the sum).
* ``CMC_CAP``     the capillary stability form: the second derivative of
                  A^{h,theta} along wall-preserving (admissible) families
                  at an h-cmc theta-capillary surface.  It differs from
                  COMBINED by the wall constraint-curvature term
                  sin(theta) oint A^{dM}(v, v) dtau.
* ``ENERGY_MOD``  Hessian of E^{h,theta} (conformal charts).

Hessians here mean F''(0) - dF[Phi''(0)], which is family independent; the
matching oracle subtracts the first-variation correction against the
family's measured acceleration.  For CMC_CAP the oracle is the plain
second derivative along a wall-exact family, no correction (the constraint
curvature is part of the quantity).

All boundary conormal terms run over every ring of the computational
surface, including the artificial cutoff ring of disk-polar grids; the
wetting and Robin terms run over wall rings only.  The Robin coefficient

    rho_R = -cot(theta) <A(n, n), nu> + (1/sin(theta)) <A^{dM}(nu_hat, nu_hat), N>

carries the sign forced by this package's orientation conventions
(mean-curvature normal, outward conormal); it is pinned by closed-form
oracles in the tests: translations and rotations are null directions and
the cap-dilation family has second derivative -5 pi / 4 at theta = pi/3.
"""

from __future__ import annotations

import numpy as np

from .deficit import fd_derivative
from .functionals import FunctionalId, first_variation
from .geometry import GeometryField, RingData
from .variations import VariationField, make_family, split_field

__all__ = ["FORMULAS", "analytic_hessian", "hessian_oracle_check",
           "constraint_boundary_term", "robin_coefficient"]

FORMULAS = ("AREA", "VOLUME", "WETTING", "COMBINED", "CMC_CAP", "ENERGY_MOD")


def _dot(a, b):
    return np.sum(a * b, axis=-1)


class _Work:
    """Shared derived fields for the formula evaluations."""

    def __init__(self, geom: GeometryField, vf: VariationField):
        self.geom = geom
        self.vf = vf
        g = geom.grid
        self.s = vf.s_sc
        self.sigma = vf.sigma
        # coordinate components of sigma: sigma = a u_x + b u_y
        self.a = _dot(vf.sigma, geom.ux) / geom.e2l
        self.b = _dot(vf.sigma, geom.uy) / geom.e2l
        self.sx, self.sy = g.diff_xy(self.s)
        self.sigx, self.sigy = g.diff_xy(vf.sigma)
        S = self.s[..., None] * geom.nu
        self.Sx, self.Sy = g.diff_xy(S)
        self.vx, self.vy = g.diff_xy(vf.v)
        self.vphi = g.diff_phi(vf.v)

    def dir_sigma(self, Fx, Fy):
        """Directional derivative along sigma of a gridded field."""
        trail = (None,) * (Fx.ndim - 2)
        a = self.a[(...,) + trail] if trail else self.a
        b = self.b[(...,) + trail] if trail else self.b
        return a * Fx + b * Fy

    def div_sigma(self):
        return (_dot(self.sigx, self.geom.ux) + _dot(self.sigy, self.geom.uy)) / self.geom.e2l

    def A_sigma_sigma(self):
        g = self.geom
        return g.e2l * (self.a**2 * g.a11 + 2 * self.a * self.b * g.a12
                        + self.b**2 * g.a22)

    def dtau_v(self, rd: RingData):
        """Arc-length derivative of v along the ring, in the gamma_dot direction."""
        i = rd.ring.i_r
        return rd.eps * self.vphi[i] / rd.arc_density[:, None]


def robin_coefficient(rd: RingData, theta: float) -> np.ndarray:
    """Capillary Robin data on a wall ring."""
    return -rd.A_nn / np.tan(theta) + rd.ApM_hh / np.sin(theta)


def _hess_area(w: _Work) -> dict:
    geom, s = w.geom, w.s
    grad_s2 = (w.sx**2 + w.sy**2) / geom.e2l
    interior = geom.integrate(
        grad_s2
        + s**2 * geom.H_sc**2
        + geom.H_sc * w.A_sigma_sigma()
        - s**2 * geom.normA2
        + 2.0 * geom.H_sc * w.dir_sigma(w.sx, w.sy)
    )
    div_sig = w.div_sigma()
    boundary = 0.0
    for rd in geom.all_rings():
        i = rd.ring.i_r
        sig_n = _dot(w.sigma[i], rd.n_out)
        term = (div_sig[i] * sig_n
                - 2.0 * s[i] * geom.H_sc[i] * sig_n
                - 2.0 * _dot(w.dir_sigma(w.Sx, w.Sy)[i], rd.n_out)
                - _dot(w.dir_sigma(w.sigx, w.sigy)[i], rd.n_out))
        boundary += geom.ring_integrate(rd, term)
    return {"interior": float(interior), "boundary": float(boundary),
            "value": float(interior + boundary)}


def _hess_volume(w: _Work, h: float, grad_h=None) -> dict:
    geom, s = w.geom, w.s
    integrand = (-2.0 * h * w.dir_sigma(w.sx, w.sy)
                 - h * w.A_sigma_sigma()
                 - h * s**2 * geom.H_sc)
    if grad_h is not None:
        dnu_h, dsig_h = grad_h  # optional scalar fields (grad h . nu, grad h . sigma)
        integrand = integrand + (dsig_h + s * dnu_h) * s
    interior = geom.integrate(integrand)
    boundary = 0.0
    for rd in geom.all_rings():
        i = rd.ring.i_r
        boundary += geom.ring_integrate(rd, h * s[i] * _dot(w.sigma[i], rd.n_out))
    return {"interior": float(interior), "boundary": float(boundary),
            "value": float(interior + boundary)}


def _hess_wetting(w: _Work, theta: float, dcos_theta=None) -> dict:
    geom = w.geom
    total = 0.0
    for rd in geom.wall_rings():
        i = rd.ring.i_r
        v_ring = w.vf.v[i]
        dv = w.dtau_v(rd)
        p = _dot(v_ring, rd.gamma_dot)
        q = _dot(v_ring, rd.nu_hat)
        term = np.cos(theta) * (p * _dot(dv, rd.nu_hat) - q * _dot(dv, rd.gamma_dot))
        if dcos_theta is not None:
            term = term - dcos_theta[i] * q
        total += geom.ring_integrate(rd, term)
    return {"boundary": float(total), "value": float(total)}


def _hess_energy_mod(w: _Work, h: float, theta: float) -> dict:
    geom = w.geom
    grid = geom.grid
    t_e = float(np.sum(grid.weights * (_dot(w.vx, w.vx) + _dot(w.vy, w.vy))))
    dets = (np.einsum("ijk,ijk->ij", w.vf.v, np.cross(w.vx, geom.uy))
            + np.einsum("ijk,ijk->ij", w.vf.v, np.cross(geom.ux, w.vy)))
    t_v = float(h * np.sum(grid.weights * dets))
    t_w = _hess_wetting(w, theta)["value"]
    return {"dirichlet": t_e, "volume": t_v, "wetting": t_w,
            "value": t_e + t_v + t_w}


def _hess_cmc_cap(w: _Work, h: float, theta: float) -> dict:
    geom, s = w.geom, w.s
    grad_s2 = (w.sx**2 + w.sy**2) / geom.e2l
    interior = geom.integrate(grad_s2 - geom.normA2 * s**2)
    boundary = 0.0
    for rd in geom.wall_rings():
        i = rd.ring.i_r
        boundary += geom.ring_integrate(rd, robin_coefficient(rd, theta) * s[i] ** 2)
    return {"interior": float(interior), "boundary": float(boundary),
            "value": float(interior + boundary)}


def constraint_boundary_term(geom: GeometryField, vf: VariationField,
                             theta: float) -> float:
    """Wall constraint curvature sin(theta) oint A^{dM}(v, v) dtau."""
    total = 0.0
    for rd in geom.wall_rings():
        i = rd.ring.i_r
        apm_vv = geom.ambient.wall_second_form(geom.u[i], vf.v[i], vf.v[i])
        total += geom.ring_integrate(rd, apm_vv)
    return float(np.sin(theta) * total)


def analytic_hessian(formula: str, geom: GeometryField, vf: VariationField,
                     h: float = 0.0, theta: float = np.pi / 2.0,
                     grad_h=None, dcos_theta=None,
                     criticality_tol: float = 1e-6) -> dict:
    """Evaluate one second-variation formula; returns the named terms too."""
    if formula not in FORMULAS:
        raise ValueError(f"unknown formula id {formula!r} (choose from {FORMULAS})")
    if formula in ("CMC_CAP", "ENERGY_MOD") and not geom.conformal:
        raise ValueError(f"{formula} requires a conformal chart")
    if formula == "CMC_CAP":
        cmc_res = float(np.max(np.abs(geom.H_sc - h)))
        ang_res = max((float(np.max(np.abs(np.cos(rd.alpha) - np.cos(theta))))
                       for rd in geom.wall_rings()), default=0.0)
        if cmc_res > criticality_tol or ang_res > criticality_tol:
            raise ValueError(
                f"CMC_CAP needs a capillary-critical chart: |H-h|={cmc_res:.2e}, "
                f"|cos a - cos t|={ang_res:.2e}")
    w = _Work(geom, vf)
    if formula == "AREA":
        return _hess_area(w)
    if formula == "VOLUME":
        return _hess_volume(w, h, grad_h)
    if formula == "WETTING":
        return _hess_wetting(w, theta, dcos_theta)
    if formula == "COMBINED":
        pa = _hess_area(w)
        pv = _hess_volume(w, h, grad_h)
        pw = _hess_wetting(w, theta, dcos_theta)
        return {"area": pa["value"], "volume": pv["value"], "wetting": pw["value"],
                "value": pa["value"] + pv["value"] + pw["value"]}
    if formula == "CMC_CAP":
        return _hess_cmc_cap(w, h, theta)
    return _hess_energy_mod(w, h, theta)


_FUNCTIONAL_FOR = {
    "AREA": lambda h, t: FunctionalId("AREA"),
    "VOLUME": lambda h, t: FunctionalId("VOLUME_H", h=h),
    "WETTING": lambda h, t: FunctionalId("WETTING_THETA", theta=t),
    "COMBINED": lambda h, t: FunctionalId("AREA_MOD", h=h, theta=t),
    "CMC_CAP": lambda h, t: FunctionalId("AREA_MOD", h=h, theta=t),
    "ENERGY_MOD": lambda h, t: FunctionalId("ENERGY_MOD", h=h, theta=t),
}


def hessian_oracle_check(formula: str, geom: GeometryField, vf: VariationField,
                         h: float = 0.0, theta: float = np.pi / 2.0,
                         t0: float | None = None) -> dict:
    """Compare an analytic formula with its Richardson FD oracle.

    The oracle is F''(0) - dF[Phi''(0)] along a linear family (for CMC_CAP:
    the plain wall-exact second derivative, the admissible Hessian).
    """
    analytic = analytic_hessian(formula, geom, vf, h=h, theta=theta)
    F = _FUNCTIONAL_FOR[formula](h, theta)
    fam = make_family(vf, profile="linear")
    fd2, fd_err = fd_derivative(F, fam, order=2, t0=t0)
    if formula == "CMC_CAP":
        correction = 0.0
    else:
        accel = fam.accel0()
        if float(np.max(np.abs(accel))) < 1e-13:
            correction = 0.0
        else:
            wf = split_field(geom, accel)
            fv = first_variation(F, geom, wf, tangency_tol=np.inf)
            correction = fv[0] if isinstance(fv, tuple) else fv
    oracle = fd2 - correction
    err = abs(analytic["value"] - oracle)
    return {
        "formula": formula,
        "analytic": analytic["value"],
        "terms": analytic,
        "oracle": oracle,
        "fd2": fd2,
        "fd2_err_est": fd_err,
        "correction": correction,
        "abs_err": err,
        "rel_err": err / max(1.0, abs(oracle)),
    }
