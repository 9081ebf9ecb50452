"""The crossing-conditioned (Slepian) representation and its clipped mean.

A smooth stationary Gaussian process observed at a u-level up-crossing
decomposes into three parts,

    X_u(t) = u*r(t) - R * r'(t)/sqrt(-r''(0)) + Delta(t),

with R a standard Rayleigh slope factor and Delta a non-stationary
Gaussian residual with covariance

    r_Delta(t, s) = r(t-s) - r(t) r(s) + r'(t) r'(s) / r''(0).

The central quantity here is the expected value of the clipped process
sgn(X_u(t) - u),

    E_u^+(t) = 1 - 2 Phi(u (1-r) / sD)
               - (2 / sqrt(-r''(0))) * (r' / sqrt(1-r^2))
                 * exp(-(u^2/2) (1-r)/(1+r))
                 * Phi((-u / sqrt(-r''(0))) * sqrt((1-r)/(1+r)) * r' / sD),

    sD = sqrt(1 - r^2 + r'^2 / r''(0)),

with limits E_u^+(0+) = 1 and E_u^+(inf) = 1 - 2 Phi(u), together with
the down-crossing counterpart E_u^-(t) = -E_{-u}^+(t), the conditional
version given the slope factor, and a sampler for the three-component
decomposition.

Numerically the formula is a 0/0 battleground as t -> 0: both
``1 - r^2`` and ``r'^2 / r''(0)`` collapse onto each other at order
t^2, leaving an O(t^4) denominator.  Evaluation therefore goes through
the model's stable ``1 - r(t)`` and returns the analytic limit below a
small threshold or whenever the residual variance is numerically
exhausted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .covmodel import CovarianceModel
from .errors import DomainError, NumericalError

__all__ = [
    "SlepianPath",
    "expected_clipped_up",
    "expected_clipped_down",
    "conditional_expected_clipped",
    "sample_slepian_path",
]

# below this time the closed form is evaluated as its t -> 0 limit
T_EPS = 1e-8
# square-root arguments this far below zero are treated as roundoff
CLAMP = -1e-12


def _clipped_up_values(model: CovarianceModel, u: float, t: np.ndarray) -> np.ndarray:
    """Vectorized E_u^+ on strictly positive times (no domain checks)."""
    g2 = -model.r_pp0
    sqrt_g2 = math.sqrt(g2)
    r = np.asarray(model.r(t), dtype=float)
    m = np.asarray(model.one_minus(t), dtype=float)   # 1 - r
    p = 1.0 + r
    rp = np.asarray(model.r_prime(t), dtype=float)

    mp = m * p                                        # 1 - r^2, stably
    var = mp - rp * rp / g2                           # residual variance
    if np.any(var < CLAMP):
        worst = float(np.min(var))
        raise NumericalError(
            f"residual variance {worst:.3e} below clamp tolerance; "
            "covariance model violates the Cauchy-Schwarz bound")
    degenerate = (t <= T_EPS) | (var <= 0.0) | (mp <= 0.0)

    var_safe = np.where(degenerate, 1.0, var)
    mp_safe = np.where(degenerate, 1.0, mp)
    p_safe = np.maximum(p, 1e-300)
    sD = np.sqrt(var_safe)

    term1 = 1.0 - 2.0 * ndtr(u * m / sD)
    pref = -(2.0 / sqrt_g2) * rp / np.sqrt(mp_safe)
    arg2 = (-u / sqrt_g2) * np.sqrt(m / p_safe) * rp / sD
    term2 = pref * np.exp(-0.5 * u * u * m / p_safe) * ndtr(arg2)

    out = np.where(degenerate, 1.0, term1 + term2)
    return np.clip(out, -1.0, 1.0)


def expected_clipped_up(model: CovarianceModel, u: float, t):
    """Expected value of the clipped process at a u-level up-crossing.

    Accepts a positive scalar or array of times.  Values lie in
    [-1, 1]; the t -> 0 limit is 1 and the large-t limit is
    ``1 - 2*Phi(u)``.
    """
    ta = np.asarray(t, dtype=float)
    if np.any(ta <= 0.0):
        raise DomainError("time must be strictly positive")
    out = _clipped_up_values(model, float(u), np.atleast_1d(ta))
    return float(out[0]) if ta.ndim == 0 else out


def expected_clipped_down(model: CovarianceModel, u: float, t):
    """Expected value of the clipped process at a u-level down-crossing.

    Equal to ``-expected_clipped_up(model, -u, t)`` by the value
    symmetry of the Gaussian law; limits are -1 at 0+ and
    ``1 - 2*Phi(u)`` at infinity.
    """
    return -expected_clipped_up(model, -u, t)


def conditional_expected_clipped(model: CovarianceModel, u: float, t, s):
    """Clipped mean at an up-crossing, conditional on slope factor ``s``.

        E[sgn(X_u(t) - u) | R = s]
            = 1 - 2 Phi((u (1-r) + s r'/sqrt(-r''(0))) / sD)

    Mixing this against the standard Rayleigh density recovers
    ``expected_clipped_up``; that identity is the defining consistency
    check.  When the residual variance degenerates (t -> 0) the limit
    is +1 for every s > 0: the path has just crossed upward.
    """
    ta = np.asarray(t, dtype=float)
    sa = np.asarray(s, dtype=float)
    if np.any(ta <= 0.0):
        raise DomainError("time must be strictly positive")
    if np.any(sa <= 0.0):
        raise DomainError("slope factor must be strictly positive")

    g2 = -model.r_pp0
    r = np.asarray(model.r(ta), dtype=float)
    m = np.asarray(model.one_minus(ta), dtype=float)
    rp = np.asarray(model.r_prime(ta), dtype=float)
    var = m * (1.0 + r) - rp * rp / g2
    if np.any(var < CLAMP):
        raise NumericalError("residual variance below clamp tolerance")
    degenerate = (ta <= T_EPS) | (var <= 0.0)
    var_safe = np.where(degenerate, 1.0, var)
    arg = (u * m + sa * rp / math.sqrt(g2)) / np.sqrt(var_safe)
    out = np.where(degenerate, 1.0, 1.0 - 2.0 * ndtr(arg))
    if ta.ndim == 0 and sa.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True, eq=False)
class SlepianPath:
    """One sampled path of the three-component crossing decomposition."""

    grid: np.ndarray
    deterministic_part: np.ndarray
    slope_part: np.ndarray
    residual_part: np.ndarray
    rayleigh_draw: float
    level: float

    @property
    def total(self) -> np.ndarray:
        return self.deterministic_part + self.slope_part + self.residual_part


def _residual_covariance(model: CovarianceModel, t: np.ndarray) -> np.ndarray:
    tt = t[:, None]
    ss = t[None, :]
    cov = (np.asarray(model.r(np.abs(tt - ss)))
           - np.asarray(model.r(tt)) * np.asarray(model.r(ss))
           + np.asarray(model.r_prime(tt)) * np.asarray(model.r_prime(ss)) / model.r_pp0)
    return 0.5 * (cov + cov.T)


def sample_slepian_path(model: CovarianceModel, u: float, grid,
                        count: int, seed) -> list[SlepianPath]:
    """Sample crossing-conditioned paths on a grid starting at zero.

    Draws ``R ~ Rayleigh(1)`` and the residual as a zero-mean Gaussian
    vector with covariance ``r_Delta``.  The residual vanishes
    identically at ``t = 0`` (its variance there is exactly zero), so
    it is sampled on the interior grid and pinned to zero at the
    origin; every returned path satisfies ``total[0] == u`` exactly and
    starts with positive slope.

    The covariance factorization retries with escalating diagonal
    jitter from 1e-14 to 1e-10 and raises :class:`NumericalError`
    beyond that.
    """
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise DomainError("grid must be a 1-d array with at least two points")
    if t[0] != 0.0:
        raise DomainError("grid must start at zero")
    if not np.all(np.diff(t) > 0):
        raise DomainError("grid must be strictly increasing")
    if count < 1:
        raise DomainError("count must be positive")

    interior = t[1:]
    cov = _residual_covariance(model, interior)
    chol = None
    for jitter in (0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10):
        try:
            chol = np.linalg.cholesky(cov + jitter * np.eye(len(interior)))
            break
        except np.linalg.LinAlgError:
            continue
    if chol is None:
        raise NumericalError(
            "residual covariance not factorizable with jitter up to 1e-10")

    rng = np.random.default_rng(seed)
    g2 = -model.r_pp0
    det_part = u * np.asarray(model.r(t), dtype=float)
    slope_shape = -np.asarray(model.r_prime(t), dtype=float) / math.sqrt(g2)

    rdraws = rng.rayleigh(1.0, size=count)
    residuals = rng.standard_normal((count, len(interior))) @ chol.T

    paths = []
    for i in range(count):
        paths.append(SlepianPath(
            grid=t,
            deterministic_part=det_part,
            slope_part=rdraws[i] * slope_shape,
            residual_part=np.concatenate(([0.0], residuals[i])),
            rayleigh_draw=float(rdraws[i]),
            level=float(u),
        ))
    return paths
