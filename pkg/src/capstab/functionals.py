"""Area, Dirichlet energy, weighted enclosed-volume and wetting functionals.

Only the area and the energy are functions of the surface alone; the
enclosed-volume and wetting functionals are defined along a declared
variation family as space-time pullback integrals (their absolute values
depend on the family; only t-derivatives are geometric).

Sign conventions, fixed by the chart orientation det[nu, u_x, u_y] > 0
and the gamma_dot-oriented boundary (both validated by finite-difference
oracles in the tests):

* d V^h [v]      = + int <v, h nu> dSigma
* d W^theta [v]  = - cos(theta) oint <v, nu_hat> dtau
* d A [v]        = - int <s, H> dSigma + oint_(all rings) <sigma, n> dtau

so a capillary droplet cap (h = H_sc > 0, alpha = theta) is exactly
critical for A + V^h + W^theta.  On disk-polar grids the cutoff ring is a
genuine boundary of the computational surface and contributes to the
conormal boundary terms.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import GeometryField
from .grids import Grid
from .variations import VariationFamily, VariationField

__all__ = ["FunctionalId", "area", "dirichlet_energy", "first_variation",
           "functional_along_family", "TAGS"]

TAGS = ("AREA", "ENERGY", "VOLUME_H", "WETTING_THETA", "AREA_MOD", "ENERGY_MOD")

GL8_NODES, GL8_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class FunctionalId:
    tag: str
    h: float = 0.0
    theta: float = np.pi / 2.0

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown functional tag {self.tag!r}")
        if self.tag in ("VOLUME_H", "AREA_MOD", "ENERGY_MOD") and self.h < 0.0:
            raise ValueError("mean-curvature weight h must be >= 0")
        if self.tag in ("WETTING_THETA", "AREA_MOD", "ENERGY_MOD"):
            if not 0.0 < self.theta <= np.pi / 2.0:
                raise ValueError("contact-angle weight theta must lie in (0, pi/2]")
            if self.theta == np.pi / 2.0:
                warnings.warn("theta = pi/2 is the free-boundary edge case",
                              stacklevel=2)


def _dot(a, b):
    return np.sum(a * b, axis=-1)


# -- surface functionals of a position field ---------------------------------

def area_of_positions(grid: Grid, pos: np.ndarray) -> float:
    px, py = grid.diff_xy(pos)
    density = np.linalg.norm(np.cross(px, py), axis=-1)
    return float(np.sum(grid.weights * density))


def energy_of_positions(grid: Grid, pos: np.ndarray) -> float:
    px, py = grid.diff_xy(pos)
    return float(0.5 * np.sum(grid.weights * (_dot(px, px) + _dot(py, py))))


def area(geom: GeometryField) -> float:
    """Surface area by quadrature of the metric density."""
    return float(np.sum(geom.grid.weights * geom.e2l))


def dirichlet_energy(geom: GeometryField) -> float:
    """(1/2) int (|u_x|^2 + |u_y|^2) dx dy over the parameter domain."""
    return float(0.5 * np.sum(geom.grid.weights * (geom.Eg + geom.Gg)))


# -- functionals along a family ----------------------------------------------

def _volume_along(fam: VariationFamily, h: float, t: float) -> float:
    """Space-time quadrature of Phi^*(h Vol) over [0, t] x Sigma."""
    if h == 0.0 or t == 0.0:
        return 0.0
    grid = fam.geom.grid
    total = 0.0
    for xi, wq in zip(GL8_NODES, GL8_WEIGHTS):
        s = 0.5 * t * (xi + 1.0)
        ds = 0.5 * t * wq
        pos = fam.positions(s)
        psi = fam.velocity(s)
        px, py = grid.diff_xy(pos)
        integrand = _dot(psi, np.cross(px, py))
        total += ds * float(np.sum(grid.weights * integrand))
    return h * total


def _wetting_along(fam: VariationFamily, theta: float, t: float) -> float:
    """Space-time quadrature of Phi^*(cos theta Area^{dM}) over [0, t] x dSigma.

    The boundary is traversed in the gamma_dot direction (sign eps per ring).
    """
    if t == 0.0:
        return 0.0
    geom = fam.geom
    grid = geom.grid
    dphi = 2.0 * np.pi / grid.n_phi
    total = 0.0
    for xi, wq in zip(GL8_NODES, GL8_WEIGHTS):
        s = 0.5 * t * (xi + 1.0)
        ds = 0.5 * t * wq
        pos = fam.positions(s)
        psi = fam.velocity(s)
        pos_phi = grid.diff_phi(pos)
        for rd in geom.wall_rings():
            i = rd.ring.i_r
            wall_res = float(np.max(np.abs(geom.ambient.phi(pos[i]))))
            if wall_res > 1e-7:
                raise ValueError(
                    f"family leaves the wall: |Phi| = {wall_res:.2e} at t={s:.3g}")
            N = geom.ambient.normal(pos[i])
            integrand = _dot(N, np.cross(psi[i], pos_phi[i]))
            total += ds * rd.eps * float(np.sum(integrand) * dphi)
    return np.cos(theta) * total


def functional_along_family(F: FunctionalId, fam: VariationFamily, t: float) -> float:
    """Evaluate a functional along the family at parameter t.

    AREA/ENERGY are evaluated at Phi(t); VOLUME_H and WETTING_THETA are the
    swept space-time integrals over [0, t]; the modified functionals sum.
    """
    if abs(t) > fam.radius * (1.0 + 1e-12):
        raise ValueError(f"t={t:.3g} outside the family validity radius")
    tag = F.tag
    if tag == "AREA":
        return area_of_positions(fam.geom.grid, fam.positions(t))
    if tag == "ENERGY":
        return energy_of_positions(fam.geom.grid, fam.positions(t))
    if tag == "VOLUME_H":
        return _volume_along(fam, F.h, t)
    if tag == "WETTING_THETA":
        return _wetting_along(fam, F.theta, t)
    if tag == "AREA_MOD":
        return (area_of_positions(fam.geom.grid, fam.positions(t))
                + _volume_along(fam, F.h, t) + _wetting_along(fam, F.theta, t))
    if tag == "ENERGY_MOD":
        return (energy_of_positions(fam.geom.grid, fam.positions(t))
                + _volume_along(fam, F.h, t) + _wetting_along(fam, F.theta, t))
    raise ValueError(tag)


# -- analytic first variations ------------------------------------------------

def _fv_area(geom: GeometryField, vf: VariationField) -> float:
    interior = -geom.integrate(vf.s_sc * geom.H_sc)
    boundary = 0.0
    for rd in geom.all_rings():
        boundary += geom.ring_integrate(rd, _dot(vf.sigma[rd.ring.i_r], rd.n_out))
    return float(interior + boundary)


def _fv_energy(geom: GeometryField, vf: VariationField) -> float:
    vx, vy = geom.grid.diff_xy(vf.v)
    return float(np.sum(geom.grid.weights * (_dot(vx, geom.ux) + _dot(vy, geom.uy))))


def _fv_volume(geom: GeometryField, vf: VariationField, h: float) -> float:
    return float(h * geom.integrate(vf.s_sc))


def _fv_wetting(geom: GeometryField, vf: VariationField, theta: float) -> float:
    total = 0.0
    for rd in geom.wall_rings():
        total += geom.ring_integrate(rd, _dot(vf.v[rd.ring.i_r], rd.nu_hat))
    return float(-np.cos(theta) * total)


def first_variation(F: FunctionalId, geom: GeometryField, vf: VariationField,
                    tangency_tol: float = 1e-9):
    """Analytic first variation; AREA_MOD also returns criticality residuals."""
    if vf.tangency_residual > tangency_tol:
        raise ValueError(
            f"variation violates boundary tangency: {vf.tangency_residual:.2e}")
    tag = F.tag
    if tag == "AREA":
        return _fv_area(geom, vf)
    if tag == "ENERGY":
        return _fv_energy(geom, vf)
    if tag == "VOLUME_H":
        return _fv_volume(geom, vf, F.h)
    if tag == "WETTING_THETA":
        return _fv_wetting(geom, vf, F.theta)
    if tag == "ENERGY_MOD":
        return (_fv_energy(geom, vf) + _fv_volume(geom, vf, F.h)
                + _fv_wetting(geom, vf, F.theta))
    if tag == "AREA_MOD":
        value = (_fv_area(geom, vf) + _fv_volume(geom, vf, F.h)
                 + _fv_wetting(geom, vf, F.theta))
        cmc_res = float(geom.integrate(np.abs(geom.H_sc - F.h)))
        ang = [np.max(np.abs(np.cos(rd.alpha) - np.cos(F.theta)))
               for rd in geom.wall_rings()]
        return value, {"cmc_residual": cmc_res,
                       "angle_residual": float(max(ang)) if ang else 0.0}
    raise ValueError(tag)
