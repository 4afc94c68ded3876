"""Analytic immersion charts u: parameter domain -> R^3.

Charts are declared as closed-form expressions in the parameter Cartesian
coordinates (x, y); first and second derivative evaluators are generated
symbolically at construction time, so every chart carries exact jets.

Orientation convention: the surface normal used everywhere downstream is
nu = (u_x cross u_y)/|u_x cross u_y|, which makes det[nu, u_x, u_y] > 0.
Each chart is constructed (via a parameter reflection y -> -y where
needed) so that this normal is the mean-curvature-directed one on its
reference scenario; ``flip_orientation`` reflects the chart for callers
that want the opposite normal without breaking the determinant convention.

The disk charts accept ``branch_power`` k >= 1, precomposing with z -> z^k.
Branched charts (k > 1) are admitted only in quadrature work, never in
spectral assembly; they carry interior branching order k - 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp

from .grids import ANNULUS, DISK

__all__ = ["ImmersionChart", "make_chart", "spherical_cap", "flat_disk",
           "graph_perturbation", "linear_map", "cylinder_bridge"]


@dataclass(frozen=True)
class ImmersionChart:
    family: str
    params: dict
    topology: str           # expected grid topology
    conformal: bool         # exact conformality claim (checked at sampling)
    scale: float            # characteristic length for step-size choices
    branch_order: int       # interior branching order b (0 if immersed)
    reference: dict         # capillary reference data (theta, h) if any
    _fu: Callable = field(repr=False)
    _fux: Callable = field(repr=False)
    _fuy: Callable = field(repr=False)
    _fuxx: Callable = field(repr=False)
    _fuxy: Callable = field(repr=False)
    _fuyy: Callable = field(repr=False)

    def jets(self, x: np.ndarray, y: np.ndarray) -> dict[str, np.ndarray]:
        """Evaluate u and its first/second parameter derivatives.

        Returns arrays of shape x.shape + (3,).
        """
        out = {}
        for key, fn in (("u", self._fu), ("ux", self._fux), ("uy", self._fuy),
                        ("uxx", self._fuxx), ("uxy", self._fuxy), ("uyy", self._fuyy)):
            comps = fn(x, y)
            arr = np.stack([np.broadcast_to(np.asarray(c, dtype=float), x.shape)
                            for c in comps], axis=-1)
            out[key] = arr
        return out

    def position(self, x, y) -> np.ndarray:
        return self.jets(np.asarray(x, dtype=float), np.asarray(y, dtype=float))["u"]


def _lambdify_chart(ux_expr, xs, ys):
    """Build u and derivative lambdas from a 3-vector of sympy expressions."""
    u = sp.Matrix(ux_expr)
    dx = u.diff(xs)
    dy = u.diff(ys)
    dxx = dx.diff(xs)
    dxy = dx.diff(ys)
    dyy = dy.diff(ys)

    def lam(m):
        fns = [sp.lambdify((xs, ys), m[i], modules="numpy") for i in range(3)]
        def f(x, y, _fns=fns):
            return [g(x, y) for g in _fns]
        return f

    return lam(u), lam(dx), lam(dy), lam(dxx), lam(dxy), lam(dyy)


def _branch(xs, ys, k: int):
    """Real/imaginary parts of (x + i y)^k."""
    z = (xs + sp.I * ys) ** k
    return sp.re(sp.expand(z)), sp.im(sp.expand(z))


def spherical_cap(theta_c: float, branch_power: int = 1,
                  flip_orientation: bool = False) -> ImmersionChart:
    """Droplet cap of a unit sphere over the plane z = 0.

    The cap meets the plane at contact angle ``theta_c``; it is the
    h-cmc theta-capillary reference surface with h = 2 and theta = theta_c
    inside the upper half space.  The chart is the inverse stereographic
    parametrization of the unit disk (exactly conformal); the y-reflection
    built into it orients the cross-product normal toward the mean
    curvature vector (into the droplet).
    """
    if not 0.0 < theta_c < np.pi:
        raise ValueError("cap angle must lie in (0, pi)")
    xs, ys = sp.symbols("x y", real=True)
    X, Y = _branch(xs, ys, int(branch_power))
    if not flip_orientation:
        Y = -Y  # reflect so the cross-product normal points along H
    c = sp.Float(float(np.tan(theta_c / 2.0)), 30)
    D = 1 + c**2 * (X**2 + Y**2)
    expr = [2 * c * X / D, 2 * c * Y / D, 2 / D - 1 - sp.cos(sp.Float(theta_c, 30))]
    fns = _lambdify_chart(expr, xs, ys)
    return ImmersionChart(
        family="spherical-cap",
        params={"theta_c": theta_c, "branch_power": branch_power,
                "flip_orientation": flip_orientation},
        topology=DISK,
        conformal=True,
        scale=1.0,
        branch_order=int(branch_power) - 1,
        reference={"theta": theta_c, "h": 2.0},
        _fu=fns[0], _fux=fns[1], _fuy=fns[2], _fuxx=fns[3], _fuxy=fns[4], _fuyy=fns[5],
    )


def flat_disk(branch_power: int = 1, flip_orientation: bool = False) -> ImmersionChart:
    """Identity chart of the flat unit disk in the plane z = 0."""
    xs, ys = sp.symbols("x y", real=True)
    sgn = -1 if flip_orientation else 1
    X, Y = _branch(xs, sgn * ys, int(branch_power))
    expr = [X, Y, sp.Integer(0)]
    fns = _lambdify_chart(expr, xs, ys)
    return ImmersionChart(
        family="flat-disk",
        params={"branch_power": branch_power, "flip_orientation": flip_orientation},
        topology=DISK,
        conformal=True,
        scale=1.0,
        branch_order=int(branch_power) - 1,
        reference={"theta": np.pi / 2.0, "h": 0.0},
        _fu=fns[0], _fux=fns[1], _fuy=fns[2], _fuxx=fns[3], _fuxy=fns[4], _fuyy=fns[5],
    )


def graph_perturbation(coeffs: dict[tuple[int, int], float], base: str = "disk") -> ImmersionChart:
    """Graph z = P(x, y) over the unit disk; generally not conformal."""
    xs, ys = sp.symbols("x y", real=True)
    P = sum(sp.Float(v, 30) * xs**i * ys**j for (i, j), v in coeffs.items())
    expr = [xs, ys, P]
    fns = _lambdify_chart(expr, xs, ys)
    return ImmersionChart(
        family="graph-perturbation",
        params={"coeffs": dict(coeffs)},
        topology=DISK,
        conformal=False,
        scale=1.0,
        branch_order=0,
        reference={},
        _fu=fns[0], _fux=fns[1], _fuy=fns[2], _fuxx=fns[3], _fuxy=fns[4], _fuyy=fns[5],
    )


def linear_map(a: float = 2.0, b: float = 1.0) -> ImmersionChart:
    """u = (a x, b y, 0): flat but anisotropic, conformal iff a = b."""
    xs, ys = sp.symbols("x y", real=True)
    expr = [sp.Float(a, 30) * xs, sp.Float(b, 30) * ys, sp.Integer(0)]
    fns = _lambdify_chart(expr, xs, ys)
    return ImmersionChart(
        family="linear-map",
        params={"a": a, "b": b},
        topology=DISK,
        conformal=bool(np.isclose(a, b)),
        scale=max(abs(a), abs(b)),
        branch_order=0,
        reference={},
        _fu=fns[0], _fux=fns[1], _fuy=fns[2], _fuxx=fns[3], _fuxy=fns[4], _fuyy=fns[5],
    )


def cylinder_bridge(radius: float = 0.6) -> ImmersionChart:
    """Coaxial cylinder bridge, conformally parametrized on an annulus.

    Parameters are (t, phi) with u = (R cos phi, R sin phi, R t); the
    conformal factor is the constant R.  With t spanning [-Z/R, Z/R] and
    R^2 + Z^2 = 1 the two boundary rings sit on the unit sphere.
    """
    xs, ys = sp.symbols("x y", real=True)
    R = sp.Float(radius, 30)
    expr = [R * sp.cos(ys), R * sp.sin(ys), R * xs]
    fns = _lambdify_chart(expr, xs, ys)
    return ImmersionChart(
        family="cylinder-bridge",
        params={"radius": radius},
        topology=ANNULUS,
        conformal=True,
        scale=radius,
        branch_order=0,
        reference={"h": 1.0 / radius},
        _fu=fns[0], _fux=fns[1], _fuy=fns[2], _fuxx=fns[3], _fuxy=fns[4], _fuyy=fns[5],
    )


def make_chart(family: str, **kwargs) -> ImmersionChart:
    table = {
        "spherical-cap": spherical_cap,
        "flat-disk": flat_disk,
        "graph-perturbation": graph_perturbation,
        "linear-map": linear_map,
        "cylinder-bridge": cylinder_bridge,
    }
    if family not in table:
        raise ValueError(f"unknown chart family {family!r} (choose from {sorted(table)})")
    return table[family](**kwargs)
