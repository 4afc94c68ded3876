"""Infinitesimal conformal deficit and the second-order area-energy gap.

For a conformal base surface and any variation field v = s + sigma, the
second derivative of (energy - area) along every family with velocity v
equals the conformal deficit

    4 int |mu|^2 dSigma = 4 int |eta|^2 e^{2 lambda} dx dy,

where, writing sigma = Re(g) u_x - Im(g) u_y in the parameter coordinates,

    eta = d_z g - (1/2) <s, nu> [(a11 - a22) - 2 i a12]

is the coefficient of the deficit tensor against u_zbar (x) dz.  The norm
convention |mu|^2 = 2 e^{-2 lambda} |eta u_zbar|^2 is fixed once by the
flat-disk anchor v = (x^2, 0, 0) -> deficit pi (see the tests).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fd import richardson_d1, richardson_d2
from .functionals import FunctionalId, functional_along_family
from .geometry import GeometryField
from .variations import VariationField, VariationFamily, make_family

__all__ = ["DeficitField", "conformal_deficit", "fd_derivative", "verify_comparison"]


@dataclass(frozen=True)
class DeficitField:
    geom: GeometryField
    eta: np.ndarray = field(repr=False)   # complex (n_r, n_phi)
    value: float = 0.0                    # 4 int |mu|^2 dSigma

    def density(self) -> np.ndarray:
        """Pointwise deficit density against the parameter measure dx dy."""
        return 4.0 * np.abs(self.eta) ** 2 * self.geom.e2l


def conformal_deficit(geom: GeometryField, vf: VariationField) -> DeficitField:
    """Evaluate eta per node and the scalar deficit 4 int |mu|^2."""
    if not geom.conformal:
        raise ValueError("the conformal deficit requires a conformal base chart")
    g = vf.g_param
    gx, gy = geom.grid.diff_xy(g)
    dzg = 0.5 * (gx - 1j * gy)
    azz = 0.5 * ((geom.a11 - geom.a22) - 2j * geom.a12)
    eta = dzg - vf.s_sc * azz
    value = float(np.sum(geom.grid.weights * 4.0 * np.abs(eta) ** 2 * geom.e2l))
    return DeficitField(geom=geom, eta=eta, value=value)


def fd_derivative(F: FunctionalId, fam: VariationFamily, order: int = 2,
                  t0: float | None = None) -> tuple[float, float]:
    """Centered FD derivative of F along the family with Richardson.

    Steps are {t0, t0/2}; the default t0 follows the configured rule
    1e-3 * chart scale / max |v|.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if t0 is None:
        t0 = 1e-3 * fam.geom.chart.scale / max(1.0, fam.field0.max_norm())
    if t0 < 1e-8 * fam.geom.chart.scale:
        raise ValueError("finite-difference step underflow")
    if t0 > fam.radius:
        raise ValueError("finite-difference step exceeds the family radius")
    f = lambda t: functional_along_family(F, fam, t)
    if order == 1:
        return richardson_d1(f, t0)
    return richardson_d2(f, t0, f0=f(0.0))


def verify_comparison(geom: GeometryField, vf: VariationField,
                      t0: float | None = None) -> dict:
    """Check FD^2(E - A) = 4 int |mu|^2 across both family profiles.

    Plain FD^2(A) is allowed to differ between the profiles; the E - A
    difference must not.  Returns the residual record.
    """
    if not geom.conformal:
        raise ValueError("comparison requires a conformal base chart")
    deficit = conformal_deficit(geom, vf)
    record = {"deficit": deficit.value, "profiles": {}}
    F_E = FunctionalId("ENERGY")
    F_A = FunctionalId("AREA")
    # the identity needs no boundary condition; families of non-tangent
    # fields must simply not be retracted (retraction would change Phi'(0))
    retraction = None if vf.tangency_residual <= 1e-9 else "none"
    for prof in ("linear", "cosine"):
        fam = make_family(vf, profile=prof, retraction=retraction)
        gap = lambda t: (functional_along_family(F_E, fam, t)
                         - functional_along_family(F_A, fam, t))
        step = t0
        if step is None:
            step = 1e-3 * geom.chart.scale / max(1.0, vf.max_norm())
        gap2, gap_err = richardson_d2(gap, step, f0=gap(0.0))
        a2, _ = richardson_d2(lambda t: functional_along_family(F_A, fam, t),
                              step)
        record["profiles"][prof] = {
            "fd2_gap": gap2,
            "fd2_gap_err": gap_err,
            "fd2_area": a2,
            "abs_residual": abs(gap2 - deficit.value),
            "rel_residual": abs(gap2 - deficit.value) / max(1.0, abs(deficit.value)),
        }
    vals = [p["fd2_gap"] for p in record["profiles"].values()]
    areas = [p["fd2_area"] for p in record["profiles"].values()]
    record["profile_gap_spread"] = float(abs(vals[0] - vals[1]))
    record["profile_area_spread"] = float(abs(areas[0] - areas[1]))
    record["max_abs_residual"] = float(max(p["abs_residual"]
                                           for p in record["profiles"].values()))
    return record


def export_deficit_csv(df: DeficitField, path: str) -> None:
    """Node table: node id, x, y, Re eta, Im eta."""
    g = df.geom.grid
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node,x,y,re_eta,im_eta\n")
        for i in range(g.n_r):
            for j in range(g.n_phi):
                fh.write(f"{g.node_index(i, j)},{g.x[i, j]:.12g},{g.y[i, j]:.12g},"
                         f"{df.eta[i, j].real:.12g},{df.eta[i, j].imag:.12g}\n")
