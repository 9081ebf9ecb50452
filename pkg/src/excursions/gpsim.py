"""Stationary Gaussian trajectory simulation and level-crossing extraction.

Trajectories are generated by circulant embedding: the covariance
sequence ``r(k dt)`` is periodized, diagonalized by the FFT, and two
independent real paths are read off the real and imaginary parts of a
transformed complex normal vector.  The target covariance is exact on
the grid as long as the embedding eigenvalues are non-negative; tiny
negative eigenvalues (total magnitude below 1e-8 of the trace) are
clipped, anything worse raises.

A spectral synthesis route is available as an independent cross-check
for models that carry a spectrum, so simulator bias can be bounded by
comparing the two.

Crossings of a level are located by linear interpolation between
bracketing samples; the first and last (incomplete) intervals are
discarded, so the extracted above/below lengths strictly alternate.
The Rice crossing intensity

    (1/pi) sqrt(-r''(0)) exp(-u^2 / 2)

serves as the closed-form cross-check on crossing counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covmodel import CovarianceModel
from .errors import DomainError, EmptyExcursionSet, NumericalError
from .numerics import spawn_seeds
from .persistency import BatchEstimate, batch_ci

__all__ = [
    "Trajectory",
    "ExcursionSet",
    "simulate_gp",
    "simulate_gp_batch",
    "simulate_gp_spectral",
    "extract_excursions",
    "rice_crossing_rate",
    "persistency_from_trajectories",
]

_COV_FLOOR = 1e-16          # treat the covariance as dead beyond this
_NEG_EIG_BUDGET = 1e-8      # relative to the embedding trace


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A simulated stationary Gaussian path on a uniform grid."""

    dt: float
    values: np.ndarray
    model_name: str
    seed: object = None

    def __post_init__(self):
        if len(self.values) < 2:
            raise DomainError("trajectory needs at least two samples")

    @property
    def duration(self) -> float:
        return self.dt * (len(self.values) - 1)


@dataclass(frozen=True, eq=False)
class ExcursionSet:
    """Complete excursion lengths of one trajectory at a level."""

    above_lengths: np.ndarray
    below_lengths: np.ndarray
    level: float
    crossing_count: int


def _embedding(model: CovarianceModel, dt: float, n: int):
    # pad with lags until the covariance is numerically dead so the
    # periodization does not wrap correlation back into the window
    block = max(64, n // 8)
    pad = block
    while abs(float(model.r(dt * (n - 1 + pad)))) >= _COV_FLOOR and pad < 60 * block:
        pad += block
    length = n + pad
    c = np.asarray(model.r(np.arange(length + 1) * dt), dtype=float)
    tilde = np.concatenate((c, c[-2:0:-1]))
    lam = np.fft.fft(tilde).real
    neg = lam < 0.0
    if neg.any():
        deficit = -lam[neg].sum()
        if deficit >= _NEG_EIG_BUDGET * lam.sum():
            raise NumericalError(
                f"circulant embedding not nonnegative definite "
                f"(deficit {deficit:.3e}); enlarge the embedding")
        lam[neg] = 0.0
    return lam, len(tilde)


def _paths_from_embedding(lam: np.ndarray, m: int, n: int, count: int, rng):
    scale = np.sqrt(lam / m)
    out = np.empty((count, n))
    done = 0
    while done < count:
        k = min(32, (count - done + 1) // 2)
        z = rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))
        w = np.fft.fft(z * scale, axis=1)
        take = min(k, count - done)
        out[done:done + take] = w.real[:take, :n]
        done += take
        if done < count:
            take = min(k, count - done)
            out[done:done + take] = w.imag[:take, :n]
            done += take
    return out


def simulate_gp(model: CovarianceModel, dt: float, n: int, seed) -> Trajectory:
    """One stationary Gaussian trajectory with exact grid covariance."""
    if not dt > 0.0:
        raise DomainError("dt must be positive")
    if n < 2:
        raise DomainError("need at least two samples")
    lam, m = _embedding(model, dt, n)
    rng = np.random.default_rng(seed)
    values = _paths_from_embedding(lam, m, n, 1, rng)[0]
    return Trajectory(dt=dt, values=values, model_name=model.name, seed=seed)


def simulate_gp_batch(model: CovarianceModel, dt: float, n: int,
                      count: int, seed) -> np.ndarray:
    """``count`` independent trajectories as a (count, n) array."""
    if count < 1:
        raise DomainError("count must be positive")
    lam, m = _embedding(model, dt, n)
    rng = np.random.default_rng(seed)
    return _paths_from_embedding(lam, m, n, count, rng)


def simulate_gp_spectral(model: CovarianceModel, dt: float, n: int, seed) -> Trajectory:
    """Spectral synthesis route; requires the model to carry a spectrum.

    Independent of the circulant path, hence usable to bound simulator
    bias.  Each FFT frequency bin carries Gaussian amplitude with
    variance ``S(w_k) dw`` (split between the two quadrature phases),
    so the realized covariance is the Riemann-sum approximation of the
    target; bias is O(dw^2) plus the spectral mass beyond the Nyquist
    frequency.
    """
    if model.spectrum is None:
        raise DomainError(f"model {model.name} has no spectral density")
    if not dt > 0.0 or n < 2:
        raise DomainError("need dt > 0 and n >= 2")
    m = 1 << int(math.ceil(math.log2(4 * n)))
    dw = 2.0 * math.pi / (m * dt)
    w = np.arange(m // 2 + 1) * dw
    bin_var = np.asarray(model.spectrum(w), dtype=float) * dw
    rng = np.random.default_rng(seed)
    re = rng.standard_normal(m // 2 + 1)
    im = rng.standard_normal(m // 2 + 1)
    # two-sided bins at 0 < k < m/2 put half of 2 S dw in each phase;
    # the real dc and Nyquist bins carry S dw outright
    coeff = np.sqrt(bin_var / 2.0) * (re - 1j * im)
    coeff[0] = math.sqrt(bin_var[0]) * re[0]
    coeff[-1] = math.sqrt(bin_var[-1]) * re[-1]
    values = np.fft.irfft(coeff, n=m) * m
    return Trajectory(dt=dt, values=values[:n], model_name=model.name, seed=seed)


def extract_excursions(traj: Trajectory, u: float) -> ExcursionSet:
    """Alternating above/below interval lengths of one trajectory.

    Crossing instants are located by linear interpolation between the
    bracketing samples; boundary intervals (cut by the window) are
    dropped.  Raises :class:`EmptyExcursionSet` when fewer than two
    crossings exist.
    """
    d = traj.values - u
    flips = d[:-1] * d[1:] < 0.0
    idx = np.nonzero(flips)[0]
    if len(idx) < 2:
        raise EmptyExcursionSet(
            f"no complete excursion of level {u} in the trajectory")
    frac = d[idx] / (d[idx] - d[idx + 1])
    times = (idx + frac) * traj.dt
    lengths = np.diff(times)
    above = d[idx[:-1] + 1] > 0.0
    return ExcursionSet(
        above_lengths=lengths[above],
        below_lengths=lengths[~above],
        level=float(u),
        crossing_count=int(len(idx)),
    )


def rice_crossing_rate(model: CovarianceModel, u: float) -> float:
    """Mean number of u-crossings per unit time (up plus down)."""
    return math.sqrt(-model.r_pp0) / math.pi * math.exp(-0.5 * u * u)


def persistency_from_trajectories(model: CovarianceModel, u: float,
                                  n_traj: int, traj_len: int, dt: float,
                                  seed, reps: int = 10,
                                  min_tail_count: int = 50
                                  ) -> tuple[BatchEstimate, BatchEstimate]:
    """Trajectory-based persistency estimates (above, below).

    Splits ``n_traj`` trajectories into ``reps`` replicates, pools the
    extracted excursion lengths within each replicate, and fits both
    tails.  Trajectories without complete excursions raise through from
    the extraction step.
    """
    if n_traj < reps:
        raise DomainError("need at least one trajectory per replicate")
    per_rep = n_traj // reps
    seeds = spawn_seeds(seed, reps)

    pools_above: list[np.ndarray] = []
    pools_below: list[np.ndarray] = []
    for rep in range(reps):
        batch = simulate_gp_batch(model, dt, traj_len, per_rep, seeds[rep])
        above, below = [], []
        for row in batch:
            exc = extract_excursions(
                Trajectory(dt=dt, values=row, model_name=model.name), u)
            above.append(exc.above_lengths)
            below.append(exc.below_lengths)
        pools_above.append(np.concatenate(above))
        pools_below.append(np.concatenate(below))

    est_above = batch_ci(lambda i: pools_above[i], reps, min_tail_count)
    est_below = batch_ci(lambda i: pools_below[i], reps, min_tail_count)
    return est_above, est_below
