"""Covariance of the clipped process sgn(X(t) - u).

For a zero-mean unit-variance stationary Gaussian process the clipped
covariance reduces to the bivariate orthant probability:

    R_u(t) = 4 * (B(u, r(t)) - Phi(u)^2),

where ``B(u, rho) = P(rho Z + sqrt(1-rho^2) Y <= u, Z <= u)``.  At the
zero level this is the classical arcsine law
``R_0(t) = (2/pi) arcsin r(t)``, and at ``t = 0`` it is the binary
variance ``1 - (1 - 2 Phi(u))^2``.
"""

from __future__ import annotations

import math

import numpy as np

from .covmodel import CovarianceModel
from .errors import DomainError
from .numerics import Grid, b_integral, norm_cdf

__all__ = ["ClippedCovariance", "clipped_covariance", "arcsin_covariance"]


def clipped_covariance(model: CovarianceModel, u: float, t):
    """Covariance of sgn(X - u) at lag ``t`` (scalar or array, t >= 0)."""
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0.0):
        raise DomainError("lag must be non-negative")
    phi_u = float(norm_cdf(u))
    rho = np.asarray(model.r(np.atleast_1d(ta)), dtype=float)
    out = np.array([4.0 * (b_integral(u, float(rh)) - phi_u * phi_u) for rh in rho])
    return float(out[0]) if ta.ndim == 0 else out


def arcsin_covariance(model: CovarianceModel, t):
    """Zero-level reference ``(2/pi) arcsin r(t)``."""
    ta = np.asarray(t, dtype=float)
    out = 2.0 / math.pi * np.arcsin(np.clip(np.asarray(model.r(ta)), -1.0, 1.0))
    return float(out) if ta.ndim == 0 else out


class ClippedCovariance:
    """Clipped covariance at a fixed level with a tabulation cache."""

    def __init__(self, model: CovarianceModel, level: float):
        self.model = model
        self.level = float(level)
        self.cache: Grid | None = None

    @property
    def variance(self) -> float:
        """R_u(0), the variance of the +-1 indicator."""
        p = float(norm_cdf(self.level))
        return 1.0 - (1.0 - 2.0 * p) ** 2

    def evaluate(self, t):
        return clipped_covariance(self.model, self.level, t)

    def tabulate(self, t_grid) -> Grid:
        pts = np.asarray(t_grid, dtype=float)
        self.cache = Grid(points=pts, values=self.evaluate(pts))
        return self.cache
