"""Variation fields along a sampled surface, and one-parameter families.

A variation field is an ambient vector field v along the surface with its
normal/tangential split cached.  Boundary tangency (v in T dM along wall
rings) is enforced by subtracting the wall-normal component against a
smooth Gaussian blend that equals 1 exactly on the ring, so projected
fields remain spectrally smooth.

Families Phi(t) share the initial velocity v but differ in their time
profile and in how boundary rows are kept on the wall:

* profile "linear":  Phi = u + t v
* profile "cosine":  Phi = u + (sin t + 1 - cos t) v   (same Phi'(0),
  nonzero acceleration, used to exhibit family dependence of plain
  second derivatives)

With ``retraction="wall"`` the rows near wall rings are blended onto the
wall by the ambient region's retraction, keeping Phi(t, dSigma) on dM
exactly for every t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import GeometryField
from .grids import DISK

__all__ = ["VariationField", "VariationFamily", "make_variation", "make_family"]

BLEND_WIDTH = 0.15     # Gaussian blend width, fraction of the radial span
POLE_DAMP_WIDTH = 0.1  # width of the cutoff-ring damping factor


def _dot(a, b):
    return np.sum(a * b, axis=-1)


@dataclass(frozen=True)
class VariationField:
    geom: GeometryField
    v: np.ndarray = field(repr=False)        # (n_r, n_phi, 3)
    s_sc: np.ndarray = field(repr=False)     # <v, nu>
    sigma: np.ndarray = field(repr=False)    # tangential part
    g_frame: np.ndarray = field(repr=False)  # sigma^1 - i sigma^2 in the unit frame
    tangency_residual: float = 0.0
    recipe: dict = field(default_factory=dict)

    @property
    def g_param(self) -> np.ndarray:
        """Complex g with sigma = Re(g) u_x - Im(g) u_y (coordinate basis)."""
        return self.g_frame * np.exp(-self.geom.lam)

    def max_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.v, axis=-1)))


def split_field(geom: GeometryField, v: np.ndarray,
                recipe: dict | None = None) -> VariationField:
    """Cache the normal/tangential split of an ambient field."""
    s_sc = _dot(v, geom.nu)
    sigma = v - s_sc[..., None] * geom.nu
    ex = geom.ux / np.exp(geom.lam)[..., None]
    ey = geom.uy / np.exp(geom.lam)[..., None]
    g_frame = _dot(sigma, ex) - 1j * _dot(sigma, ey)
    res = 0.0
    for rd in geom.wall_rings():
        res = max(res, float(np.max(np.abs(_dot(v[rd.ring.i_r], rd.N)))))
    return VariationField(geom=geom, v=v, s_sc=s_sc, sigma=sigma,
                          g_frame=g_frame, tangency_residual=res,
                          recipe=recipe or {})


def _ring_blend(geom: GeometryField, wall_only: bool = True) -> np.ndarray:
    """Smooth (n_r,) profile equal to 1 exactly on (wall) boundary rings."""
    g = geom.grid
    span = g.r[-1] - g.r[0]
    w = BLEND_WIDTH * span
    b = np.zeros(g.n_r)
    for rd in geom.all_rings():
        if wall_only and not rd.ring.on_wall:
            continue
        b = b + np.exp(-(((g.r - g.r[rd.ring.i_r]) / w) ** 2))
    return np.clip(b, 0.0, 1.0)


def _project_tangent(geom: GeometryField, v: np.ndarray) -> np.ndarray:
    """Remove the wall-normal component near wall rings (smooth blend)."""
    blend = _ring_blend(geom)
    mask = blend > 1e-14
    out = v.copy()
    if not np.any(mask):
        return out
    u_sel = geom.u[mask]
    N = geom.ambient.normal(u_sel)
    vn = _dot(v[mask], N)
    out[mask] = v[mask] - (blend[mask, None] * vn)[..., None] * N
    return out


def _pole_damp(geom: GeometryField) -> np.ndarray:
    """Factor vanishing exactly on the cutoff ring of disk-polar grids."""
    g = geom.grid
    if g.topology != DISK:
        return np.ones(g.n_r)
    return 1.0 - np.exp(-(((g.r - g.r[0]) / POLE_DAMP_WIDTH) ** 2))


def make_variation(geom: GeometryField, recipe, seed: int | None = None,
                   project: bool = True, damp_pole_sigma: bool = False) -> VariationField:
    """Build a variation field from a recipe.

    Recipes (tuple or dict): ("translation", axis), ("rotation", axis),
    ("normal", coeffs) with a polynomial in the ambient coordinates times
    nu, ("ambient-poly", degree) seeded random polynomial components,
    ("param-poly", {component: {(i, j): coeff}}), ("boundary-nu-hat",)
    extending the outer-ring conormal-in-wall frame field, and
    ("values", array) for raw node data.
    """
    if isinstance(recipe, dict):
        kind = recipe["kind"]
        args = recipe
    else:
        kind = recipe[0]
        args = {"args": recipe[1:]}
    u = geom.u
    shape = geom.grid.shape

    if kind == "translation":
        axis = args.get("axis", args.get("args", (2,))[0])
        v = np.zeros(shape + (3,))
        v[..., axis] = 1.0
    elif kind == "rotation":
        axis = args.get("axis", args.get("args", (2,))[0])
        e = np.zeros(3)
        e[axis] = 1.0
        v = np.cross(e, u)
    elif kind == "normal":
        coeffs = args.get("coeffs", args.get("args", ({(0, 0, 0): 1.0},))[0])
        f = np.zeros(shape)
        for (i, j, k), cval in coeffs.items():
            f += cval * u[..., 0] ** i * u[..., 1] ** j * u[..., 2] ** k
        v = f[..., None] * geom.nu
    elif kind == "ambient-poly":
        degree = args.get("degree", args.get("args", (2,))[0])
        rng = np.random.default_rng(seed)
        v = np.zeros(shape + (3,))
        for comp in range(3):
            for i in range(degree + 1):
                for j in range(degree + 1 - i):
                    for k in range(degree + 1 - i - j):
                        c = rng.standard_normal()
                        v[..., comp] += c * u[..., 0] ** i * u[..., 1] ** j * u[..., 2] ** k
        v /= max(1.0, np.max(np.linalg.norm(v, axis=-1)))
    elif kind == "param-poly":
        comp_coeffs = args.get("coeffs", args.get("args", ({},))[0])
        x, y = geom.grid.x, geom.grid.y
        v = np.zeros(shape + (3,))
        for comp, cdict in comp_coeffs.items():
            for (i, j), cval in cdict.items():
                v[..., int(comp)] += cval * x**i * y**j
    elif kind == "boundary-nu-hat":
        rd = geom.rings[geom.grid.n_r - 1]
        if rd.nu_hat is None:
            raise ValueError("outer ring carries no wall frame")
        v = np.broadcast_to(rd.nu_hat[None, :, :], shape + (3,)).copy()
    elif kind == "values":
        v = np.array(args.get("values", args.get("args", (None,))[0]), dtype=float)
        if v.shape != shape + (3,):
            raise ValueError(f"field values must have shape {shape + (3,)}")
    else:
        raise ValueError(f"unknown variation recipe {kind!r}")

    rec = {"kind": kind, "seed": seed, "project": project}
    if project:
        v = _project_tangent(geom, v)
    vf = split_field(geom, v, rec)
    if damp_pole_sigma:
        d = _pole_damp(geom)[:, None]
        v2 = vf.s_sc[..., None] * geom.nu + d[..., None] * vf.sigma
        vf = split_field(geom, v2, {**rec, "damp_pole_sigma": True})
    return vf


@dataclass(frozen=True)
class VariationFamily:
    geom: GeometryField
    field0: VariationField
    profile: str = "linear"
    retraction: str = "wall"
    radius: float = 0.1

    def tau(self, t: float) -> float:
        if self.profile == "linear":
            return t
        if self.profile == "cosine":
            return float(np.sin(t) + 1.0 - np.cos(t))
        raise ValueError(f"unknown profile {self.profile!r}")

    def dtau(self, t: float) -> float:
        if self.profile == "linear":
            return 1.0
        return float(np.cos(t) + np.sin(t))

    def _ring_profiles(self):
        """Per-wall-ring radial blend profiles, each 1 exactly on its ring."""
        g = self.geom.grid
        w = BLEND_WIDTH * (g.r[-1] - g.r[0])
        out = []
        for rd in self.geom.wall_rings():
            prof = np.exp(-(((g.r - g.r[rd.ring.i_r]) / w) ** 2))
            out.append((rd.ring.i_r, prof))
        return out

    def positions(self, t: float) -> np.ndarray:
        if abs(t) > self.radius * (1.0 + 1e-12):
            raise ValueError(f"|t|={abs(t):.3g} beyond the family radius {self.radius:.3g}")
        Y = self.geom.u + self.tau(t) * self.field0.v
        if self.retraction == "none":
            return Y
        # broadcast each wall ring's retraction correction radially, so that
        # Phi(0) = u and Phi'(0) = v are untouched while boundary rows stay
        # on the wall exactly
        out = Y.copy()
        for i_ring, prof in self._ring_profiles():
            corr = self.geom.ambient.retract(Y[i_ring]) - Y[i_ring]
            out += prof[:, None, None] * corr[None, :, :]
        return out

    def velocity(self, t: float) -> np.ndarray:
        Y = self.geom.u + self.tau(t) * self.field0.v
        dY = self.dtau(t) * self.field0.v
        if self.retraction == "none":
            return dY
        out = dY.copy()
        for i_ring, prof in self._ring_profiles():
            J = self.geom.ambient.retract_jacobian(Y[i_ring])
            dcorr = np.einsum("pij,pj->pi", J, dY[i_ring]) - dY[i_ring]
            out += prof[:, None, None] * dcorr[None, :, :]
        return out

    def accel0(self, h: float | None = None) -> np.ndarray:
        """Phi''(0) by centered differences with one Richardson sweep."""
        if h is None:
            h = 1e-2 * self.radius
        def d2(step):
            return (self.positions(step) - 2.0 * self.positions(0.0)
                    + self.positions(-step)) / step**2
        c1, c2 = d2(h), d2(h / 2)
        return (4.0 * c2 - c1) / 3.0

    def wall_residual(self, t: float) -> float:
        """Max |Phi| over wall rings at time t (0 for exact families)."""
        pos = self.positions(t)
        res = 0.0
        for rd in self.geom.wall_rings():
            res = max(res, float(np.max(np.abs(self.geom.ambient.phi(pos[rd.ring.i_r])))))
        return res


def make_family(vf: VariationField, profile: str = "linear",
                retraction: str | None = None, radius: float | None = None) -> VariationFamily:
    geom = vf.geom
    if retraction is None:
        # the half-space wall is affine: tangent linear motion stays on it
        retraction = "none" if geom.ambient.name == "half-space" else "wall"
    if radius is None:
        radius = 0.2 * geom.chart.scale / max(1.0, vf.max_norm())
    return VariationFamily(geom=geom, field0=vf, profile=profile,
                           retraction=retraction, radius=radius)
