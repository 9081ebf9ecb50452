"""Scalar special functions and generic numerical kernels.

Everything here is pure and reentrant: the normal CDF, the
Rayleigh-vs-normal probability

    Xi(m, s) = P(R < W),   R ~ Rayleigh(s'), W ~ N(mu, sw^2),
               (m, s) = (mu, s') / sw,

the bivariate orthant-style integral

    B(u, rho) = P(rho*Z + sqrt(1-rho^2)*Y <= u, Z <= u),

numerical Laplace transforms of tabulated functions with exponential
tail corrections, Gaver-Stehfest inversion, and monotone inverse-CDF
sampling with tail extrapolation.  These are the kernels every other
module builds on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import quad, simpson, trapezoid
from scipy.special import ndtr

from .errors import DomainError, MonotonicityViolation, NumericalError

__all__ = [
    "Grid",
    "TailModel",
    "LaplaceEvaluable",
    "norm_cdf",
    "xi",
    "b_integral",
    "numerical_laplace",
    "fit_exponential_tail",
    "gaver_stehfest_invert",
    "inverse_cdf_sample",
    "spawn_seeds",
]


def spawn_seeds(seed, n: int) -> list:
    """Derive ``n`` independent child seeds from any seed-like object."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return seed.spawn(n)


# ---------------------------------------------------------------------------
# tabulation substrate
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Grid:
    """A tabulated real function: strictly increasing abscissae and values.

    Invariants are enforced at construction: ``points`` strictly
    increasing with ``points[0] >= 0``, equal lengths, at least two
    entries.
    """

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)
        if pts.ndim != 1 or vals.ndim != 1 or pts.shape != vals.shape:
            raise DomainError("grid points and values must be 1-d and aligned")
        if len(pts) < 2:
            raise DomainError("grid needs at least two points")
        if pts[0] < 0.0:
            raise DomainError("grid points must be non-negative")
        if not np.all(np.diff(pts) > 0.0):
            raise DomainError("grid points must be strictly increasing")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(vals))):
            raise DomainError("grid entries must be finite")

    def __len__(self) -> int:
        return len(self.points)

    def interpolate(self, t):
        return np.interp(t, self.points, self.values)


@dataclass(frozen=True)
class TailModel:
    """Exponential tail ``amplitude * exp(-rate * t)`` beyond a grid."""

    rate: float
    amplitude: float

    def __post_init__(self):
        if not (self.rate > 0.0 and math.isfinite(self.rate)):
            raise DomainError("tail rate must be positive and finite")


@dataclass(frozen=True, eq=False)
class LaplaceEvaluable:
    """A function of a positive Laplace argument.

    Either a closed form ``s -> value`` or a tabulated original
    function (a :class:`Grid` over time) plus an exponential tail
    model, in which case evaluation goes through
    :func:`numerical_laplace`.
    """

    closed_form: Callable[[float], float] | None = None
    grid: Grid | None = None
    tail: TailModel | None = field(default=None)

    def __post_init__(self):
        if (self.closed_form is None) == (self.grid is None):
            raise DomainError("provide exactly one of closed_form or grid")
        if self.grid is not None and self.tail is None:
            raise DomainError("tabulated transforms require a tail model")

    def __call__(self, s):
        if self.closed_form is not None:
            return self.closed_form(s)
        return numerical_laplace(self.grid, s, self.tail)


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

def norm_cdf(x):
    """Standard normal CDF, accurate to well below 1e-14 absolute.

    Accepts scalars (including +-inf) or arrays.
    """
    if np.isscalar(x):
        return float(ndtr(x))
    return ndtr(np.asarray(x, dtype=float))


def xi(mu_t: float, sigma_t: float) -> float:
    """P(R < W) for independent R ~ Rayleigh, W normal, in reduced form.

    With ``(mu_t, sigma_t) = (mu, sigma_r) / sigma_w`` the probability is

        Xi = Phi(m) - s/sqrt(1+s^2) * Phi(m*s/sqrt(1+s^2))
             * exp(-m^2 / (2*(1+s^2)))

    which lives in [0, 1] and is nondecreasing in ``mu_t``.
    """
    if not sigma_t > 0.0:
        raise DomainError(f"sigma_t must be positive, got {sigma_t}")
    s2 = sigma_t * sigma_t
    root = math.sqrt(1.0 + s2)
    val = norm_cdf(mu_t) - (sigma_t / root) * norm_cdf(mu_t * sigma_t / root) \
        * math.exp(-mu_t * mu_t / (2.0 * (1.0 + s2)))
    return min(1.0, max(0.0, val))


_SQRT_2PI = math.sqrt(2.0 * math.pi)


def b_integral(u_tilde: float, rho: float) -> float:
    """P(rho*Z + sqrt(1-rho^2)*Y <= u, Z <= u) by adaptive quadrature.

    ``Z`` and ``Y`` are independent standard normals.  Evaluates

        B(u, rho) = int_{-inf}^{u} phi(z) Phi((u - rho*z)/sqrt(1-rho^2)) dz

    on (min(-8, u-8), u]; the dropped lower tail is below Phi(-8),
    comfortably inside the 1e-10 accuracy budget.  The correlated
    limits are handled analytically: B(u, 1) = Phi(u) and
    B(u, -1) = max(0, 2*Phi(u) - 1).
    """
    if abs(rho) > 1.0:
        raise DomainError(f"correlation must lie in [-1, 1], got {rho}")
    u = float(u_tilde)
    if rho >= 1.0 - 1e-12:
        return float(norm_cdf(u))
    if rho <= -1.0 + 1e-12:
        return max(0.0, 2.0 * float(norm_cdf(u)) - 1.0)

    den = math.sqrt((1.0 - rho) * (1.0 + rho))

    def integrand(z):
        return math.exp(-0.5 * z * z) / _SQRT_2PI * ndtr((u - rho * z) / den)

    lo = min(-8.0, u - 8.0)
    # breakpoint where the inner CDF argument crosses zero helps quad
    # when |rho| is close to one and the integrand is nearly a step
    pts = None
    if rho != 0.0:
        zstar = u / rho
        if lo < zstar < u:
            pts = [zstar]
    val, _ = quad(integrand, lo, u, epsabs=1e-13, epsrel=1e-12,
                  limit=200, points=pts)
    return min(1.0, max(0.0, val))


# ---------------------------------------------------------------------------
# Laplace transforms of tabulated functions
# ---------------------------------------------------------------------------

def numerical_laplace(f: Grid, s: float, tail: TailModel | None = None) -> float:
    """Laplace transform of a tabulated function at ``s > 0``.

    Simpson quadrature of ``f(t) * exp(-s*t)`` on the grid (trapezoid
    for two points), plus the closed-form contribution of the
    exponential tail beyond the last grid point when a tail model is
    supplied.
    """
    if not s > 0.0:
        raise DomainError(f"Laplace argument must be positive, got {s}")
    t = f.points
    y = f.values * np.exp(-s * t)
    if len(t) >= 3:
        val = float(simpson(y, x=t))
    else:
        val = float(trapezoid(y, x=t))
    if tail is not None:
        t_end = t[-1]
        val += tail.amplitude * math.exp(-(s + tail.rate) * t_end) / (s + tail.rate)
    return val


def fit_exponential_tail(grid: Grid, floor: float = 1e-12) -> TailModel:
    """Fit ``A * exp(-theta * t)`` to the last decade of a positive tail.

    Uses the grid points in ``(t_hi/10, t_hi]`` where ``t_hi`` is the
    largest abscissa whose value still exceeds ``floor`` (values below
    that are treated as numerically unresolved).  The fit is a linear
    regression of ``log value`` on ``t``.  The tail amplitude is taken
    relative to the END of the grid, i.e. the returned model satisfies
    ``amplitude * exp(-rate * t)`` matched to the fitted line, so the
    model remains usable for extrapolation beyond the grid.
    """
    t = grid.points
    v = grid.values
    usable = v > floor
    if usable.sum() < 2:
        raise NumericalError("tail fit needs at least two resolvable values")
    t_hi = t[usable][-1]
    window = usable & (t > t_hi / 10.0) & (t <= t_hi)
    if window.sum() < 2:
        window = usable
    tt = t[window]
    lv = np.log(v[window])
    slope, intercept = np.polyfit(tt, lv, 1)
    if not slope < 0.0:
        raise NumericalError("tail is not exponentially decaying")
    return TailModel(rate=-float(slope), amplitude=float(math.exp(intercept)))


# ---------------------------------------------------------------------------
# Gaver-Stehfest inversion
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _stehfest_weights(order: int) -> tuple[float, ...]:
    # Salzer weights computed in exact rational arithmetic; they grow to
    # ~1e8 at order 14 and alternate in sign, so exactness here keeps the
    # only rounding in the final fsum.
    half = order // 2
    fact = [Fraction(1)]
    for i in range(1, 2 * half + 1):
        fact.append(fact[-1] * i)
    weights = []
    for k in range(1, order + 1):
        acc = Fraction(0)
        for j in range((k + 1) // 2, min(k, half) + 1):
            acc += (Fraction(j) ** half * fact[2 * j]
                    / (fact[half - j] * fact[j] * fact[j - 1]
                       * fact[k - j] * fact[2 * j - k]))
        weights.append(float(acc * (-1) ** (k + half)))
    return tuple(weights)


def gaver_stehfest_invert(psi, t: float, order: int = 14) -> float:
    """Gaver-Stehfest estimate of the original function at ``t``.

    ``psi`` is evaluated at the real abscissae ``k*ln(2)/t``.  The order
    must be even and between 8 and 18; 14 is a good default in double
    precision (roughly six significant digits on smooth transforms,
    degrading in the deep tail where the inverse is far below its peak).
    """
    if order % 2 != 0 or not 8 <= order <= 18:
        raise DomainError(f"order must be even and in [8, 18], got {order}")
    if not t > 0.0:
        raise DomainError(f"time must be positive, got {t}")
    w = _stehfest_weights(order)
    ln2_t = math.log(2.0) / t
    return ln2_t * math.fsum(w[k - 1] * psi(k * ln2_t) for k in range(1, order + 1))


# ---------------------------------------------------------------------------
# inverse-CDF sampling
# ---------------------------------------------------------------------------

def inverse_cdf_sample(cdf: Grid, tail_rate: float | None, uniform):
    """Monotone piecewise-linear inversion of a tabulated CDF.

    ``uniform`` may be a scalar or an array of values in (0, 1).  For
    values above the final tabulated CDF level the exponential tail
    with the given ``tail_rate`` extrapolates the quantile; without a
    tail rate the final CDF value must already be within 1e-9 of one,
    and such draws clamp to the last grid point.
    """
    vals = cdf.values
    diffs = np.diff(vals)
    bad = diffs < 0.0
    if bad.any():
        idx = int(np.argmax(bad))
        raise MonotonicityViolation(
            f"cdf decreases at index {idx + 1}", which="cdf", index=idx + 1,
            t=float(cdf.points[idx + 1]))
    if abs(vals[0]) > 1e-12:
        raise DomainError("cdf must start at zero")
    f_end = vals[-1]
    if tail_rate is None and f_end < 1.0 - 1e-9:
        raise DomainError(
            "cdf does not reach one and no tail rate was supplied")
    if tail_rate is not None and not tail_rate > 0.0:
        raise DomainError("tail rate must be positive")

    u = np.asarray(uniform, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    if np.any((u <= 0.0) | (u >= 1.0)):
        raise DomainError("uniform draws must lie strictly inside (0, 1)")

    out = np.interp(u, vals, cdf.points)
    over = u > f_end
    if over.any():
        if tail_rate is None:
            out[over] = cdf.points[-1]
        else:
            out[over] = cdf.points[-1] + np.log((1.0 - f_end) / (1.0 - u[over])) / tail_rate
    if scalar:
        return float(out[0])
    return out
