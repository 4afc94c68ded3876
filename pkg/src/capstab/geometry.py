"""Sampled surface geometry: metric, frames, curvatures, boundary data.

Conventions (validated against finite-difference oracles in the tests):

* nu = (u_x cross u_y)/|u_x cross u_y|, so det[nu, u_x, u_y] > 0 always;
  charts are built so this is the mean-curvature-directed normal.
* n is the geometric outward unit conormal of each boundary ring.
* gamma_dot = n cross nu, so the triple (gamma_dot, n, nu) is right-handed.
* nu_hat = N cross gamma_dot, which enforces det[gamma_dot, nu_hat, N] = +1.
* cos(alpha) = <nu_hat, n> defines the contact angle; on these conventions
  the frame identity nu = -sin(alpha) nu_hat + cos(alpha) N holds.

On disk-polar grids the inner cutoff ring is an artificial boundary: it
carries conormal and arc-weight data (boundary integrals in variational
formulas must include it) but no wall frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ambient import AmbientRegion
from .charts import ImmersionChart, make_chart
from .grids import ANNULUS, DISK, Grid, Ring

__all__ = ["GeometryField", "GeometryError", "RingData", "sample_geometry",
           "contact_angle", "export_obj"]

TOL_BOUNDARY = 1e-9
TOL_FRAME = 1e-8
TOL_CONFORMAL = 1e-10
EPS_METRIC = 1e-12


class GeometryError(RuntimeError):
    """Geometry sampling check failure."""


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def _unit(a):
    return a / np.linalg.norm(a, axis=-1, keepdims=True)


@dataclass(frozen=True)
class RingData:
    """Frames and curvature scalars along one boundary ring."""

    ring: Ring
    arc_w: np.ndarray            # (n_phi,) arc-length quadrature weights
    arc_density: np.ndarray      # d tau / d phi
    t_hat: np.ndarray            # unit tangent in the +phi direction
    n_out: np.ndarray            # outward unit conormal
    gamma_dot: np.ndarray        # n cross nu
    eps: float                   # <gamma_dot, t_hat>, +-1
    # wall data (None on the cutoff ring)
    N: np.ndarray | None = None
    nu_hat: np.ndarray | None = None
    alpha: np.ndarray | None = None
    A_nn: np.ndarray | None = None      # <A(n, n), nu>
    A_gg: np.ndarray | None = None      # <A(gamma_dot, gamma_dot), nu>
    ApM_hh: np.ndarray | None = None    # <A^{dM}(nu_hat, nu_hat), N>
    ApM_gg: np.ndarray | None = None    # <A^{dM}(gamma_dot, gamma_dot), N>
    ApM_gh: np.ndarray | None = None    # <A^{dM}(gamma_dot, nu_hat), N>
    frame_residual: float = 0.0


@dataclass(frozen=True)
class GeometryField:
    grid: Grid
    chart: ImmersionChart
    ambient: AmbientRegion
    u: np.ndarray = field(repr=False)
    ux: np.ndarray = field(repr=False)
    uy: np.ndarray = field(repr=False)
    uxx: np.ndarray = field(repr=False)
    uxy: np.ndarray = field(repr=False)
    uyy: np.ndarray = field(repr=False)
    Eg: np.ndarray = field(repr=False)   # first fundamental form
    Fg: np.ndarray = field(repr=False)
    Gg: np.ndarray = field(repr=False)
    e2l: np.ndarray = field(repr=False)  # area density sqrt(EG - F^2)
    lam: np.ndarray = field(repr=False)  # 0.5 log e2l (conformal factor when conformal)
    nu: np.ndarray = field(repr=False)
    a11: np.ndarray = field(repr=False)  # frame scalars <A(e_i, e_j), nu> (conformal)
    a12: np.ndarray = field(repr=False)
    a22: np.ndarray = field(repr=False)
    H_sc: np.ndarray = field(repr=False)
    normA2: np.ndarray = field(repr=False)
    conformal: bool = True
    conf_residual: float = 0.0
    rings: dict[int, RingData] = field(default_factory=dict, repr=False)
    B: float = 0.0
    J: float = 0.0

    # -- convenience -------------------------------------------------------

    @property
    def area_weights(self) -> np.ndarray:
        """Quadrature weights for surface integrals (parameter weights x e2l)."""
        return self.grid.weights * self.e2l

    def integrate(self, f: np.ndarray) -> float | np.ndarray:
        """Surface integral of a gridded scalar/vector field."""
        return np.tensordot(self.area_weights, f, axes=([0, 1], [0, 1]))

    def ring_integrate(self, rd: RingData, f_ring: np.ndarray) -> float | np.ndarray:
        """Boundary integral over one ring with arc-length weights."""
        return np.tensordot(rd.arc_w, f_ring, axes=(0, 0))

    def wall_rings(self) -> list[RingData]:
        return [rd for rd in self.rings.values() if rd.ring.on_wall]

    def all_rings(self) -> list[RingData]:
        return list(self.rings.values())

    def surface_gradient_sq(self, f: np.ndarray) -> np.ndarray:
        """|grad_Sigma f|^2 for a scalar field (conformal charts)."""
        fx, fy = self.grid.diff_xy(f)
        return (fx**2 + fy**2) / self.e2l


def _ring_frames(grid: Grid, ring: Ring, jets: dict, nu: np.ndarray,
                 region: AmbientRegion, conformal: bool,
                 tol_boundary: float, tol_frame: float) -> RingData:
    i = ring.i_r
    u = jets["u"][i]
    ux, uy = jets["ux"][i], jets["uy"][i]
    if grid.topology == DISK:
        cphi, sphi = np.cos(grid.phi), np.sin(grid.phi)
        u_r = cphi[:, None] * ux + sphi[:, None] * uy
        u_phi = grid.r[i] * (-sphi[:, None] * ux + cphi[:, None] * uy)
    else:
        u_r = ux
        u_phi = uy
    arc_density = np.linalg.norm(u_phi, axis=-1)
    arc_w = arc_density * (2.0 * np.pi / grid.n_phi)
    t_hat = u_phi / arc_density[:, None]
    # outward conormal: component of +-u_r orthogonal to the ring tangent
    n_raw = ring.side * u_r
    n_raw = n_raw - _dot(n_raw, t_hat)[:, None] * t_hat
    n_out = _unit(n_raw)
    gamma_dot = np.cross(n_out, nu[i])
    eps_arr = _dot(gamma_dot, t_hat)
    eps = float(np.sign(eps_arr.mean()))
    if np.max(np.abs(np.abs(eps_arr) - 1.0)) > 1e-6:
        raise GeometryError("boundary tangent frame is not consistent along the ring")

    if not ring.on_wall:
        return RingData(ring=ring, arc_w=arc_w, arc_density=arc_density,
                        t_hat=t_hat, n_out=n_out, gamma_dot=gamma_dot, eps=eps)

    phi_vals = region.phi(u)
    off = float(np.max(np.abs(phi_vals)))
    if off > tol_boundary:
        raise GeometryError(
            f"boundary node off the ambient wall: max |Phi(u)| = {off:.3e} > {tol_boundary:.1e}")
    N = region.normal(u)
    nu_hat = np.cross(N, gamma_dot)
    ip = _dot(nu_hat, n_out)
    if np.max(np.abs(ip)) > 1.0 + tol_frame:
        raise GeometryError("frame inconsistency: |<nu_hat, n>| exceeds 1")
    alpha = np.arccos(np.clip(ip, -1.0, 1.0))
    # frame identity residual: nu = -sin(alpha) nu_hat + cos(alpha) N
    recon = -np.sin(alpha)[:, None] * nu_hat + np.cos(alpha)[:, None] * N
    res = float(np.max(np.linalg.norm(recon - nu[i], axis=-1)))
    if res > 100 * tol_frame:
        raise GeometryError(f"frame orientation check failed: residual {res:.3e}")

    def second_form(X, Y):
        # <A(X, Y), nu> from the second jets; X, Y tangent ambient vectors
        g = np.stack([jets["ux"][i], jets["uy"][i]], axis=-2)  # (n_phi, 2, 3)
        gram = np.einsum("pab,pcb->pac", g, g)
        rhsX = np.einsum("pab,pb->pa", g, X)
        rhsY = np.einsum("pab,pb->pa", g, Y)
        Xc = np.linalg.solve(gram, rhsX[..., None])[..., 0]
        Yc = np.linalg.solve(gram, rhsY[..., None])[..., 0]
        hess = np.stack([
            np.stack([_dot(jets["uxx"][i], nu[i]), _dot(jets["uxy"][i], nu[i])], axis=-1),
            np.stack([_dot(jets["uxy"][i], nu[i]), _dot(jets["uyy"][i], nu[i])], axis=-1),
        ], axis=-2)
        return np.einsum("pa,pab,pb->p", Xc, hess, Yc)

    A_nn = second_form(n_out, n_out)
    A_gg = second_form(gamma_dot, gamma_dot)
    ApM_hh = region.wall_second_form(u, nu_hat, nu_hat)
    ApM_gg = region.wall_second_form(u, gamma_dot, gamma_dot)
    ApM_gh = region.wall_second_form(u, gamma_dot, nu_hat)
    return RingData(ring=ring, arc_w=arc_w, arc_density=arc_density, t_hat=t_hat,
                    n_out=n_out, gamma_dot=gamma_dot, eps=eps, N=N, nu_hat=nu_hat,
                    alpha=alpha, A_nn=A_nn, A_gg=A_gg, ApM_hh=ApM_hh, ApM_gg=ApM_gg,
                    ApM_gh=ApM_gh, frame_residual=res)


def sample_geometry(chart: ImmersionChart, grid: Grid, ambient: AmbientRegion,
                    orientation: str = "mean-curvature",
                    tol_boundary: float = TOL_BOUNDARY,
                    tol_frame: float = TOL_FRAME,
                    tol_conformal: float = TOL_CONFORMAL,
                    eps_metric: float = EPS_METRIC) -> GeometryField:
    """Evaluate a chart on a grid and assemble all geometric data.

    ``orientation``: "mean-curvature" flips the chart (when it supports
    ``flip_orientation``) so that H_sc >= 0; "chart" keeps the chart as
    built; "flip" reflects unconditionally.
    """
    if chart.topology != grid.topology:
        raise GeometryError(
            f"chart expects a {chart.topology} grid, got {grid.topology}")
    if orientation == "flip":
        chart = _flipped(chart)

    jets = chart.jets(grid.x, grid.y)
    u, ux, uy = jets["u"], jets["ux"], jets["uy"]
    Eg, Fg, Gg = _dot(ux, ux), _dot(ux, uy), _dot(uy, uy)
    det_g = Eg * Gg - Fg**2
    if np.min(det_g) < eps_metric:
        raise GeometryError(f"degenerate metric: min det g = {np.min(det_g):.3e}")
    e2l = np.sqrt(det_g)
    cross = np.cross(ux, uy)
    nu = cross / e2l[..., None]

    # scalar mean curvature via the general first-fundamental-form formula
    H_sc = _dot(Gg[..., None] * jets["uxx"] - 2.0 * Fg[..., None] * jets["uxy"]
                + Eg[..., None] * jets["uyy"], nu) / det_g

    if orientation == "mean-curvature":
        mean_H = float(np.mean(H_sc))
        if mean_H < -1e-8 and "flip_orientation" in chart.params:
            return sample_geometry(_flipped(chart), grid, ambient, "chart",
                                   tol_boundary, tol_frame, tol_conformal, eps_metric)
        if mean_H < -1e-8:
            raise GeometryError(
                "chart normal opposes the mean curvature vector and the chart "
                "cannot be reflected; pass orientation='chart' to accept it")

    # conformality
    uzuz_re = 0.25 * (Eg - Gg)
    uzuz_im = -0.5 * Fg
    conf_res = float(np.max(np.hypot(uzuz_re, uzuz_im) / e2l))
    conformal = chart.conformal
    if conformal and conf_res > tol_conformal:
        raise GeometryError(
            f"chart flagged conformal but conformality residual is {conf_res:.3e}")

    lam = 0.5 * np.log(e2l)
    a11 = _dot(jets["uxx"], nu) / e2l
    a12 = _dot(jets["uxy"], nu) / e2l
    a22 = _dot(jets["uyy"], nu) / e2l
    normA2 = a11**2 + 2.0 * a12**2 + a22**2
    if conformal:
        H_sc = a11 + a22

    orth = max(np.max(np.abs(_dot(nu, ux))) / np.sqrt(np.max(Eg)),
               np.max(np.abs(_dot(nu, uy))) / np.sqrt(np.max(Gg)))
    if orth > tol_frame:
        raise GeometryError(f"normal not orthogonal to the tangent plane: {orth:.3e}")

    rings: dict[int, RingData] = {}
    for ring in grid.rings:
        rings[ring.i_r] = _ring_frames(grid, ring, jets, nu, ambient, conformal,
                                       tol_boundary, tol_frame)

    return GeometryField(
        grid=grid, chart=chart, ambient=ambient,
        u=u, ux=ux, uy=uy, uxx=jets["uxx"], uxy=jets["uxy"], uyy=jets["uyy"],
        Eg=Eg, Fg=Fg, Gg=Gg, e2l=e2l, lam=lam, nu=nu,
        a11=a11, a12=a12, a22=a22, H_sc=H_sc, normA2=normA2,
        conformal=conformal, conf_residual=conf_res, rings=rings,
        B=ambient.B, J=0.0,
    )


def _flipped(chart: ImmersionChart) -> ImmersionChart:
    params = dict(chart.params)
    if "flip_orientation" not in params:
        raise GeometryError(f"chart family {chart.family!r} has no orientation flip")
    params["flip_orientation"] = not params["flip_orientation"]
    return make_chart(chart.family, **params)


def contact_angle(geom: GeometryField, theta_ref: float | None = None) -> dict:
    """Contact angle per wall ring, with deviation from a reference angle.

    When ``theta_ref`` is None the chart's capillary reference angle is
    used if it has one.
    """
    if theta_ref is None:
        theta_ref = geom.chart.reference.get("theta")
    out = {"rings": {}, "theta_ref": theta_ref, "max_dev": None}
    devs = []
    for rd in geom.wall_rings():
        out["rings"][rd.ring.i_r] = rd.alpha
        if theta_ref is not None:
            devs.append(np.max(np.abs(np.cos(rd.alpha) - np.cos(theta_ref))))
    if devs:
        out["max_dev"] = float(max(devs))
    return out


def laplacian_mean_curvature_residual(geom: GeometryField) -> float:
    """Max deviation between trace-of-A and the grid-Laplacian route to H_sc."""
    ux_x, ux_y = geom.grid.diff_xy(geom.u)
    uxx = geom.grid.diff_xy(ux_x)[0]
    uyy = geom.grid.diff_xy(ux_y)[1]
    lap = uxx + uyy
    H_disc = _dot(lap, geom.nu) / geom.e2l
    return float(np.max(np.abs(H_disc - geom.H_sc)))


def export_obj(geom: GeometryField, path: str) -> None:
    """Write the sampled surface as a Wavefront OBJ mesh."""
    g = geom.grid
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# capstab surface export: {geom.chart.family}\n")
        for i in range(g.n_r):
            for j in range(g.n_phi):
                p = geom.u[i, j]
                fh.write(f"v {p[0]:.12g} {p[1]:.12g} {p[2]:.12g}\n")
        for i in range(g.n_r - 1):
            for j in range(g.n_phi):
                jn = (j + 1) % g.n_phi
                a = g.node_index(i, j) + 1
                b = g.node_index(i + 1, j) + 1
                c = g.node_index(i + 1, jn) + 1
                d = g.node_index(i, jn) + 1
                fh.write(f"f {a} {b} {c}\n")
                fh.write(f"f {a} {c} {d}\n")
