"""Centered finite differences with two-level Richardson extrapolation.

Used as the independent oracle for every analytic first/second variation
formula.  The error estimate is the difference between the extrapolated
value and the finer of the two raw levels.
"""

from __future__ import annotations

from typing import Callable

__all__ = ["richardson_d1", "richardson_d2"]


def _d1(f: Callable[[float], float], t0: float) -> float:
    return (f(t0) - f(-t0)) / (2.0 * t0)


def _d2(f: Callable[[float], float], t0: float, f0: float) -> float:
    return (f(t0) - 2.0 * f0 + f(-t0)) / t0**2


def richardson_d1(f: Callable[[float], float], t0: float) -> tuple[float, float]:
    """First derivative at 0 from steps {t0, t0/2}."""
    c = _d1(f, t0)
    fine = _d1(f, t0 / 2.0)
    val = (4.0 * fine - c) / 3.0
    return val, abs(val - fine)


def richardson_d2(f: Callable[[float], float], t0: float,
                  f0: float | None = None) -> tuple[float, float]:
    """Second derivative at 0 from steps {t0, t0/2}."""
    if f0 is None:
        f0 = f(0.0)
    c = _d2(f, t0, f0)
    fine = _d2(f, t0 / 2.0, f0)
    val = (4.0 * fine - c) / 3.0
    return val, abs(val - fine)
