"""Parametric grids with quadrature and spectral differentiation.

Two topologies are supported:

* ``disk-polar``: the parameter domain is the unit disk with a small
  inner cutoff ``r0`` (the polar coordinate chart is singular at the
  origin).  Nodes live on radial rings ``r0 <= r <= 1`` times a uniform
  periodic angular grid.  Only the outermost ring is a physical boundary;
  the cutoff ring is an artificial boundary that formulas must account
  for explicitly.
* ``annulus-cylindrical``: the parameter domain is a flat cylinder
  ``[t0, t1] x S^1`` with complex coordinate ``t + i*phi``.  Both radial
  extremes are physical boundary rings.

Radial rules: ``chebyshev`` (Chebyshev-Lobatto nodes with Clenshaw-Curtis
weights, spectrally accurate, the default for quadrature-heavy work) and
``uniform`` (trapezoid weights, used for nested finite-element ladders).
Angular quadrature is the periodic trapezoid rule and angular derivatives
are computed by FFT.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Grid", "GridError", "Ring", "build_grid"]

DISK = "disk-polar"
ANNULUS = "annulus-cylindrical"


class GridError(ValueError):
    """Invalid grid specification."""


def chebyshev_lobatto(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes (ascending on [-1,1]), Clenshaw-Curtis weights, diff matrix."""
    if n < 2:
        raise GridError("need at least 2 radial nodes")
    m = n - 1
    theta = np.pi * np.arange(m + 1) / m
    x = np.cos(theta)
    # Clenshaw-Curtis weights (Trefethen, Spectral Methods in MATLAB, clencurt)
    w = np.zeros(m + 1)
    ii = np.arange(1, m)
    v = np.ones(m - 1)
    if m % 2 == 0:
        w[0] = w[m] = 1.0 / (m**2 - 1)
        for k in range(1, m // 2):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
        v -= np.cos(m * theta[ii]) / (m**2 - 1)
    else:
        w[0] = w[m] = 1.0 / m**2
        for k in range(1, (m - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
    w[ii] = 2.0 * v / m
    # differentiation matrix on the cos-ordered nodes
    c = np.hstack([2.0, np.ones(m - 1), 2.0]) * (-1.0) ** np.arange(m + 1)
    X = np.tile(x, (m + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(m + 1))
    D -= np.diag(D.sum(axis=1))
    # reorder ascending
    x = x[::-1]
    w = w[::-1]
    D = D[::-1, ::-1]
    return x, w, D


def uniform_nodes(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Uniform nodes on [-1,1] with trapezoid weights and an FD(4) diff matrix."""
    x = np.linspace(-1.0, 1.0, n)
    h = x[1] - x[0]
    w = np.full(n, h)
    w[0] = w[-1] = h / 2.0
    D = np.zeros((n, n))
    if n >= 5:
        for i in range(2, n - 2):
            D[i, i - 2 : i + 3] = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12 * h)
        one_sided = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12 * h)
        D[0, :5] = one_sided
        D[1, :5] = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / (12 * h)
        D[-1, -5:] = -one_sided[::-1]
        D[-2, -5:] = -np.array([-3.0, -10.0, 18.0, -6.0, 1.0])[::-1] / (12 * h)
    else:
        for i in range(n):
            if i == 0:
                D[i, :2] = [-1.0 / h, 1.0 / h]
            elif i == n - 1:
                D[i, -2:] = [-1.0 / h, 1.0 / h]
            else:
                D[i, i - 1], D[i, i + 1] = -0.5 / h, 0.5 / h
    return x, w, D


@dataclass(frozen=True)
class Ring:
    """One radial ring of boundary nodes.

    ``side`` is +1 at the outer radial extreme and -1 at the inner one; the
    outward parameter direction across the ring is ``side * d/dr``.
    ``on_wall`` distinguishes physical boundary (mapped into the ambient
    wall) from the artificial cutoff ring of disk-polar grids.
    """

    i_r: int
    side: int
    on_wall: bool


@dataclass(frozen=True)
class Grid:
    topology: str
    n_r: int
    n_phi: int
    r0: float
    r1: float
    radial_rule: str
    r: np.ndarray = field(repr=False)          # (n_r,)
    phi: np.ndarray = field(repr=False)        # (n_phi,)
    wr: np.ndarray = field(repr=False)         # radial weights, no r factor
    Dr: np.ndarray = field(repr=False)         # radial differentiation matrix
    x: np.ndarray = field(repr=False)          # (n_r, n_phi) parameter Cartesian
    y: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)    # (n_r, n_phi) parameter-area weights
    boundary_mask: np.ndarray = field(repr=False)
    rings: tuple[Ring, ...] = ()

    # -- structure ---------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_phi)

    @property
    def n_nodes(self) -> int:
        return self.n_r * self.n_phi

    def node_index(self, i: int, j: int) -> int:
        return i * self.n_phi + j

    def wall_rings(self) -> tuple[Ring, ...]:
        return tuple(rg for rg in self.rings if rg.on_wall)

    # -- calculus on gridded fields ----------------------------------------

    def diff_r(self, f: np.ndarray) -> np.ndarray:
        """d/dr (or d/dt on annuli) along axis 0."""
        return np.tensordot(self.Dr, f, axes=(1, 0))

    def diff_phi(self, f: np.ndarray) -> np.ndarray:
        """Spectral d/dphi along axis 1."""
        n = self.n_phi
        k = np.fft.fftfreq(n, d=1.0 / n)
        if n % 2 == 0:
            k = k.copy()
            k[n // 2] = 0.0  # zero the Nyquist mode for odd derivatives
        fh = np.fft.fft(f, axis=1)
        shape = [1, n] + [1] * (f.ndim - 2)
        out = np.fft.ifft(fh * (1j * k).reshape(shape), axis=1)
        if np.isrealobj(f):
            return out.real
        return out

    def diff_xy(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Parameter-Cartesian derivatives (f_x, f_y)."""
        fr = self.diff_r(f)
        fp = self.diff_phi(f)
        if self.topology == ANNULUS:
            return fr, fp
        trail = (1,) * (f.ndim - 2)
        c = np.cos(self.phi).reshape((1, self.n_phi) + trail)
        s = np.sin(self.phi).reshape((1, self.n_phi) + trail)
        rinv = (1.0 / self.r).reshape((self.n_r, 1) + trail)
        fx = c * fr - s * rinv * fp
        fy = s * fr + c * rinv * fp
        return fx, fy

    def integrate(self, f: np.ndarray) -> float | np.ndarray:
        """Quadrature over the parameter domain (weights include r dr dphi)."""
        return np.tensordot(self.weights, f, axes=([0, 1], [0, 1]))

    def ring_values(self, ring: Ring, f: np.ndarray) -> np.ndarray:
        return f[ring.i_r]

    def ring_integrate_param(self, f_ring: np.ndarray) -> float | np.ndarray:
        """Integral over one ring against dphi only (caller supplies densities)."""
        return f_ring.sum(axis=0) * (2.0 * np.pi / self.n_phi)


def build_grid(
    topology: str = DISK,
    n_r: int = 64,
    n_phi: int = 128,
    r0: float = 0.02,
    t_range: tuple[float, float] = (-1.0, 1.0),
    radial_rule: str = "chebyshev",
) -> Grid:
    """Build a parametric grid.

    ``r0`` is the disk-polar inner cutoff (ignored for annuli, whose radial
    coordinate spans ``t_range``).
    """
    if n_r < 4 or n_phi < 8:
        raise GridError(f"resolution too small: n_r={n_r}, n_phi={n_phi} (need >=4, >=8)")
    if topology not in (DISK, ANNULUS):
        raise GridError(f"unknown topology {topology!r}")
    if topology == DISK and not (0.0 < r0 < 0.5):
        raise GridError(f"inner cutoff r0={r0} outside (0, 0.5)")
    if radial_rule == "chebyshev":
        xi, wi, Di = chebyshev_lobatto(n_r)
    elif radial_rule == "uniform":
        xi, wi, Di = uniform_nodes(n_r)
    else:
        raise GridError(f"unknown radial rule {radial_rule!r}")

    if topology == DISK:
        a, b = r0, 1.0
    else:
        a, b = t_range
        if not b > a:
            raise GridError("empty annulus t_range")
    half = 0.5 * (b - a)
    r = a + half * (xi + 1.0)
    wr = wi * half
    Dr = Di / half
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi

    if topology == DISK:
        x = r[:, None] * np.cos(phi)[None, :]
        y = r[:, None] * np.sin(phi)[None, :]
        weights = (wr * r)[:, None] * np.full(n_phi, 2.0 * np.pi / n_phi)[None, :]
        rings = (
            Ring(i_r=n_r - 1, side=+1, on_wall=True),
            Ring(i_r=0, side=-1, on_wall=False),
        )
        bmask = np.zeros((n_r, n_phi), dtype=bool)
        bmask[-1, :] = True
    else:
        x = np.broadcast_to(r[:, None], (n_r, n_phi)).copy()
        y = np.broadcast_to(phi[None, :], (n_r, n_phi)).copy()
        weights = wr[:, None] * np.full(n_phi, 2.0 * np.pi / n_phi)[None, :]
        rings = (
            Ring(i_r=n_r - 1, side=+1, on_wall=True),
            Ring(i_r=0, side=-1, on_wall=True),
        )
        bmask = np.zeros((n_r, n_phi), dtype=bool)
        bmask[0, :] = True
        bmask[-1, :] = True

    if np.any(weights <= 0):
        raise GridError("non-positive quadrature weight")

    return Grid(
        topology=topology,
        n_r=n_r,
        n_phi=n_phi,
        r0=r0 if topology == DISK else a,
        r1=1.0 if topology == DISK else b,
        radial_rule=radial_rule,
        r=r,
        phi=phi,
        wr=wr,
        Dr=Dr,
        x=x,
        y=y,
        weights=weights,
        boundary_mask=bmask,
        rings=rings,
    )
