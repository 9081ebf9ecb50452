import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import kstest

from excursions.errors import DomainError, MonotonicityViolation
from excursions.numerics import (Grid, LaplaceEvaluable, TailModel, b_integral,
                                 fit_exponential_tail, gaver_stehfest_invert,
                                 inverse_cdf_sample, norm_cdf, numerical_laplace,
                                 xi)


# ---------------------------------------------------------------- norm_cdf

def test_norm_cdf_reference_points():
    # oracle: quadrature of the normal density, independent of ndtr
    oracle, _ = quad(lambda x: math.exp(-x * x / 2) / math.sqrt(2 * math.pi),
                     -12.0, 1.0, epsabs=1e-15)
    assert norm_cdf(1.0) == pytest.approx(oracle, abs=1e-14)
    assert norm_cdf(1.0) == pytest.approx(0.8413447461, abs=1e-9)
    assert norm_cdf(0.0) == 0.5
    assert norm_cdf(math.inf) == 1.0
    assert norm_cdf(-math.inf) == 0.0


def test_norm_cdf_symmetry_bulk():
    rng = np.random.default_rng(2)
    x = rng.normal(scale=3.0, size=10_000)
    assert np.max(np.abs(norm_cdf(x) + norm_cdf(-x) - 1.0)) < 1e-14


def test_norm_cdf_monotone():
    x = np.linspace(-10, 10, 5001)
    assert np.all(np.diff(norm_cdf(x)) >= 0.0)


# ---------------------------------------------------------------------- xi

def test_xi_zero_mean_closed_form():
    # mu = 0 collapses to (1/2) (1 - s/sqrt(1+s^2))
    assert xi(0.0, 1.0) == pytest.approx(0.5 * (1 - 1 / math.sqrt(2)), abs=1e-15)
    assert xi(0.0, 1.0) == pytest.approx(0.1464466094, abs=1e-10)
    for s in (0.5, 2.0):
        assert xi(0.0, s) == pytest.approx(
            0.5 * (1 - s / math.sqrt(1 + s * s)), abs=1e-14)


def test_xi_limits_and_domain():
    assert xi(40.0, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert xi(-40.0, 1.0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        xi(0.0, 0.0)
    with pytest.raises(DomainError):
        xi(0.0, -1.0)


def test_xi_monte_carlo_rayleigh_vs_normal():
    # P(R < W), R ~ Rayleigh(sigma_t), W ~ N(mu_t, 1)
    rng = np.random.default_rng(11)
    n = 200_000
    for mu_t, sigma_t in [(0.0, 1.0), (0.7, 0.4), (-0.5, 1.7), (1.2, 2.5),
                          (2.0, 0.3)]:
        r = rng.rayleigh(sigma_t, n)
        w = rng.normal(mu_t, 1.0, n)
        phat = np.mean(r < w)
        se = math.sqrt(max(phat * (1 - phat), 1e-12) / n)
        assert abs(xi(mu_t, sigma_t) - phat) < 3.5 * se


@settings(max_examples=60, deadline=None)
@given(st.floats(-5, 5), st.floats(0.05, 5), st.floats(-5, 5))
def test_xi_range_and_monotone_in_mu(mu1, sigma, mu2):
    a, b = xi(mu1, sigma), xi(mu2, sigma)
    assert 0.0 <= a <= 1.0
    if mu1 < mu2:
        assert a <= b + 1e-12


# ---------------------------------------------------------------- b_integral

def test_b_integral_zero_level_arcsine():
    for rho in np.linspace(-0.999, 0.999, 31):
        expect = 0.25 + math.asin(rho) / (2 * math.pi)
        assert b_integral(0.0, rho) == pytest.approx(expect, abs=1e-10)


def test_b_integral_independence_and_limits():
    for u in (-2.0, -0.5, 0.0, 0.7, 1.5):
        assert b_integral(u, 0.0) == pytest.approx(float(norm_cdf(u)) ** 2, abs=1e-10)
    assert b_integral(1.0, 1.0) == pytest.approx(0.8413447461, abs=1e-8)
    assert b_integral(1.0, -1.0) == pytest.approx(2 * float(norm_cdf(1.0)) - 1, abs=1e-12)
    assert b_integral(-1.0, -1.0) == 0.0


def test_b_integral_monotone_in_both_args():
    rhos = np.linspace(-0.95, 0.95, 20)
    vals = [b_integral(0.5, r) for r in rhos]
    assert np.all(np.diff(vals) >= -1e-12)
    us = np.linspace(-2, 2, 20)
    vals = [b_integral(u, 0.3) for u in us]
    assert np.all(np.diff(vals) >= -1e-12)


def test_b_integral_domain():
    with pytest.raises(DomainError):
        b_integral(0.0, 1.5)


# --------------------------------------------------------- numerical_laplace

def test_laplace_of_exponential():
    t = np.linspace(0.0, 40.0, 8001)
    g = Grid(points=t, values=np.exp(-t))
    tail = TailModel(rate=1.0, amplitude=1.0)
    # oracle: int exp(-2t) dt = 1/2
    assert numerical_laplace(g, 1.0, tail) == pytest.approx(0.5, rel=1e-8)
    g2 = Grid(points=t, values=np.exp(-2.0 * t))
    tail2 = TailModel(rate=2.0, amplitude=1.0)
    assert numerical_laplace(g2, 1.0, tail2) == pytest.approx(1.0 / 3.0, rel=1e-8)


def test_laplace_of_zero_and_domain():
    t = np.linspace(0.0, 5.0, 101)
    g = Grid(points=t, values=np.zeros_like(t))
    assert numerical_laplace(g, 1.0) == 0.0
    with pytest.raises(DomainError):
        numerical_laplace(g, 0.0)


def test_laplace_tail_correction_matters():
    # short grid: the exponential tail carries most of the mass
    t = np.linspace(0.0, 2.0, 401)
    g = Grid(points=t, values=np.exp(-0.5 * t))
    tail = TailModel(rate=0.5, amplitude=1.0)
    assert numerical_laplace(g, 1.0, tail) == pytest.approx(1.0 / 1.5, rel=1e-7)


def test_fit_exponential_tail():
    t = np.linspace(0.0, 30.0, 3001)
    g = Grid(points=t, values=3.0 * np.exp(-0.7 * t))
    tail = fit_exponential_tail(g)
    assert tail.rate == pytest.approx(0.7, rel=1e-6)
    assert tail.amplitude == pytest.approx(3.0, rel=1e-4)


# ------------------------------------------------------------ Gaver-Stehfest

def test_gaver_stehfest_exponential_pair():
    est = gaver_stehfest_invert(lambda s: 1.0 / (1.0 + s), 1.0)
    assert est == pytest.approx(math.exp(-1.0), abs=1e-6)


def test_gaver_stehfest_constant():
    assert gaver_stehfest_invert(lambda s: 1.0 / s, 5.0) == pytest.approx(1.0, abs=1e-6)


def test_gaver_stehfest_exponential_density():
    est = gaver_stehfest_invert(lambda s: 2.0 / (2.0 + s), 0.5)
    assert est == pytest.approx(2.0 * math.exp(-1.0), abs=1e-5)


def test_gaver_stehfest_rate_sweep():
    # evaluated at t = 1/lam, where the inverse sits near its mode
    for lam in (0.5, 1.0, 2.0):
        est = gaver_stehfest_invert(lambda s: 1.0 / (s + lam), 1.0 / lam)
        assert est == pytest.approx(math.exp(-1.0), abs=1e-5)


def test_gaver_stehfest_order_validation():
    with pytest.raises(DomainError):
        gaver_stehfest_invert(lambda s: 1 / s, 1.0, order=13)
    with pytest.raises(DomainError):
        gaver_stehfest_invert(lambda s: 1 / s, 1.0, order=20)
    # all even orders in range work
    for order in (8, 10, 12, 14, 16, 18):
        gaver_stehfest_invert(lambda s: 1 / (1 + s), 1.0, order=order)


def test_laplace_evaluable_roundtrip():
    lap = LaplaceEvaluable(closed_form=lambda s: 1.0 / (1.0 + s))
    assert gaver_stehfest_invert(lap, 0.7) == pytest.approx(math.exp(-0.7), abs=1e-5)
    t = np.linspace(0.0, 60.0, 6001)
    tab = LaplaceEvaluable(grid=Grid(points=t, values=np.exp(-t)),
                           tail=TailModel(rate=1.0, amplitude=1.0))
    assert tab(1.0) == pytest.approx(0.5, rel=1e-7)


# -------------------------------------------------------- inverse_cdf_sample

def _exp_cdf_grid(t_max=30.0, n=3001):
    t = np.linspace(0.0, t_max, n)
    return Grid(points=t, values=1.0 - np.exp(-t))


def test_inverse_cdf_analytic_quantile():
    g = _exp_cdf_grid()
    u = 1.0 - math.exp(-1.0)
    assert inverse_cdf_sample(g, 1.0, u) == pytest.approx(1.0, abs=1e-4)


def test_inverse_cdf_left_edge():
    g = _exp_cdf_grid()
    assert inverse_cdf_sample(g, 1.0, 1e-12) == pytest.approx(0.0, abs=1e-8)


def test_inverse_cdf_kolmogorov_smirnov():
    g = _exp_cdf_grid(40.0, 4001)
    rng = np.random.default_rng(31)
    x = inverse_cdf_sample(g, 1.0, rng.random(1_000_000))
    assert kstest(x, "expon").statistic < 0.002


def test_inverse_cdf_tail_extrapolation():
    t = np.linspace(0.0, 3.0, 301)
    g = Grid(points=t, values=1.0 - np.exp(-t))
    u = 1.0 - math.exp(-10.0)
    assert inverse_cdf_sample(g, 1.0, u) == pytest.approx(10.0, abs=1e-3)


def test_inverse_cdf_monotonicity_violation():
    vals = np.array([0.0, 0.2, 0.1, 0.6, 1.0])
    g = Grid(points=np.arange(5.0), values=vals)
    with pytest.raises(MonotonicityViolation) as err:
        inverse_cdf_sample(g, None, 0.5)
    assert err.value.index == 2


def test_inverse_cdf_requires_tail_or_complete_cdf():
    t = np.linspace(0.0, 2.0, 201)
    g = Grid(points=t, values=1.0 - np.exp(-t))
    with pytest.raises(DomainError):
        inverse_cdf_sample(g, None, 0.5)


# ----------------------------------------------------------------- Grid type

def test_grid_invariants():
    with pytest.raises(DomainError):
        Grid(points=np.array([0.0, 0.0, 1.0]), values=np.zeros(3))
    with pytest.raises(DomainError):
        Grid(points=np.array([-1.0, 1.0]), values=np.zeros(2))
    with pytest.raises(DomainError):
        Grid(points=np.array([0.0, 1.0]), values=np.zeros(3))
    with pytest.raises(DomainError):
        Grid(points=np.array([0.0]), values=np.array([1.0]))
