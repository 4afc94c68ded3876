"""Ambient regions M in flat R^3 with boundary walls.

Each region is M = {Phi <= 0} with wall dM = {Phi = 0} and outward unit
normal N = grad(Phi)/|grad(Phi)|.  Regions also provide the second
fundamental form of the wall, a retraction onto the wall (used to keep
variation families exactly boundaried), the signed distance to the wall,
and the inner focal radius.

Vector arguments have shape (..., 3); all maps broadcast over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["AmbientRegion", "half_space", "unit_ball", "solid_cylinder", "make_region"]


def _norm(p, axis=-1, keepdims=True):
    return np.sqrt(np.sum(p * p, axis=axis, keepdims=keepdims))


@dataclass(frozen=True)
class AmbientRegion:
    """Flat ambient region with a smooth wall.

    ``focal_radius`` is np.inf for the half space; callers cap it with a
    configurable rho_max where a finite value is required.
    """

    name: str
    focal_radius: float
    B: float  # sup over the wall of the largest |eigenvalue| of A^{dM}

    def phi(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def normal(self, p: np.ndarray) -> np.ndarray:
        """Outward unit normal, extended off the wall (nearest-point value)."""
        raise NotImplementedError

    def normal_jacobian(self, p: np.ndarray) -> np.ndarray:
        """Ambient Jacobian dN of the extended normal, shape (..., 3, 3)."""
        raise NotImplementedError

    def retract(self, p: np.ndarray) -> np.ndarray:
        """Nearest-point style projection onto the wall."""
        raise NotImplementedError

    def retract_jacobian(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def depth(self, p: np.ndarray) -> np.ndarray:
        """Distance to the wall, positive inside M."""
        raise NotImplementedError

    # second fundamental form of the wall: A(X, Y) = <D_X Y, N> = -<Y, dN X>
    def wall_second_form(self, p: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        dN = self.normal_jacobian(p)
        return -np.einsum("...i,...ij,...j->...", Y, dN, X)


@dataclass(frozen=True)
class HalfSpace(AmbientRegion):
    """M = {z >= z0}; the wall is the plane z = z0 and N = -e3."""

    z0: float = 0.0

    def phi(self, p):
        return self.z0 - p[..., 2]

    def normal(self, p):
        out = np.zeros_like(p)
        out[..., 2] = -1.0
        return out

    def normal_jacobian(self, p):
        return np.zeros(p.shape + (3,))

    def retract(self, p):
        out = p.copy()
        out[..., 2] = self.z0
        return out

    def retract_jacobian(self, p):
        J = np.zeros(p.shape + (3,))
        J[..., 0, 0] = 1.0
        J[..., 1, 1] = 1.0
        return J

    def depth(self, p):
        return p[..., 2] - self.z0


@dataclass(frozen=True)
class UnitBall(AmbientRegion):
    """M = {|p| <= 1}; N = p/|p|."""

    def phi(self, p):
        return _norm(p, keepdims=False) - 1.0

    def normal(self, p):
        return p / _norm(p)

    def normal_jacobian(self, p):
        n = _norm(p)
        ph = p / n
        eye = np.broadcast_to(np.eye(3), p.shape + (3,))
        return (eye - ph[..., :, None] * ph[..., None, :]) / n[..., None]

    def retract(self, p):
        return p / _norm(p)

    def retract_jacobian(self, p):
        n = _norm(p)
        ph = p / n
        eye = np.broadcast_to(np.eye(3), p.shape + (3,))
        return (eye - ph[..., :, None] * ph[..., None, :]) / n[..., None]

    def depth(self, p):
        return 1.0 - _norm(p, keepdims=False)


@dataclass(frozen=True)
class SolidCylinder(AmbientRegion):
    """M = {x^2 + y^2 <= R^2}; N is the horizontal radial direction."""

    radius: float = 1.0

    def _rho(self, p):
        return np.sqrt(p[..., 0] ** 2 + p[..., 1] ** 2)

    def phi(self, p):
        return self._rho(p) - self.radius

    def normal(self, p):
        rho = self._rho(p)[..., None]
        out = np.zeros_like(p)
        out[..., 0] = p[..., 0]
        out[..., 1] = p[..., 1]
        return out / rho

    def normal_jacobian(self, p):
        rho = self._rho(p)
        ex = p[..., 0] / rho
        ey = p[..., 1] / rho
        J = np.zeros(p.shape + (3,))
        J[..., 0, 0] = (1.0 - ex * ex) / rho
        J[..., 0, 1] = -ex * ey / rho
        J[..., 1, 0] = -ex * ey / rho
        J[..., 1, 1] = (1.0 - ey * ey) / rho
        return J

    def retract(self, p):
        rho = self._rho(p)[..., None]
        out = p.copy()
        out[..., :2] = p[..., :2] * (self.radius / rho)
        return out

    def retract_jacobian(self, p):
        rho = self._rho(p)
        ex = p[..., 0] / rho
        ey = p[..., 1] / rho
        scale = self.radius / rho
        J = np.zeros(p.shape + (3,))
        J[..., 0, 0] = scale * (1.0 - ex * ex)
        J[..., 0, 1] = -scale * ex * ey
        J[..., 1, 0] = -scale * ex * ey
        J[..., 1, 1] = scale * (1.0 - ey * ey)
        J[..., 2, 2] = 1.0
        return J

    def depth(self, p):
        return self.radius - self._rho(p)


def half_space(z0: float = 0.0) -> AmbientRegion:
    return HalfSpace(name="half-space", focal_radius=np.inf, B=0.0, z0=z0)


def unit_ball() -> AmbientRegion:
    return UnitBall(name="unit-ball", focal_radius=1.0, B=1.0)


def solid_cylinder(radius: float = 1.0) -> AmbientRegion:
    return SolidCylinder(name="solid-cylinder", focal_radius=radius, B=1.0 / radius, radius=radius)


def make_region(name: str, **kwargs) -> AmbientRegion:
    table = {
        "half-space": half_space,
        "unit-ball": unit_ball,
        "solid-cylinder": solid_cylinder,
    }
    if name not in table:
        raise ValueError(f"unknown ambient region {name!r} (choose from {sorted(table)})")
    return table[name](**kwargs)
