"""Bath kernels: spread variance, drift, dephasing phase and decay.

The infinite thermal product has the exact closed form
prod_{k>=1} [1 + x^2/(k+a)^2] = Gamma(1+a)^2 / |Gamma(1+a+ix)|^2 with
x = t/beta and a = 1/(beta omega_c); mpmath evaluates it to arbitrary
precision, giving a tail-inclusive oracle for the truncated log-sum.
"""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotorbath import (BathKernels, BathParams, decay_coefficient,
                       dephasing_decay, dephasing_phase, spread_variance)
from rotorbath.bath import DECAY_CLAMP, decay_factor, log_thermal_product

PAPER_BATH = BathParams(eta=1.0, omega_c=10.87, beta=0.1)


def gamma_log_product(t, omega_c, beta):
    a = 1.0 / (beta * omega_c)
    x = t / beta
    val = 2 * mp.re(mp.loggamma(1 + a)) - 2 * mp.re(mp.loggamma(mp.mpc(1 + a, x)))
    return float(val)


# ---------------------------------------------------------------------------
# spread variance s(t)
# ---------------------------------------------------------------------------

def test_variance_zero_at_zero():
    assert spread_variance(0.0, PAPER_BATH) == 0.0


def test_variance_small_t_quadratic_regime():
    bath = PAPER_BATH
    t = 1e-3 / bath.omega_c
    expected = bath.eta * bath.phi_prime ** 2 * bath.omega_c * t ** 2
    assert abs(spread_variance(t, bath) - expected) / expected < 0.01


def test_variance_large_t_linear_regime():
    bath = PAPER_BATH
    t = 1e3 / bath.omega_c
    expected = math.pi * bath.eta * bath.phi_prime ** 2 * t
    assert abs(spread_variance(t, bath) - expected) / expected < 0.01


def test_variance_strictly_increasing():
    ts = np.linspace(0.01, 5.0, 40)
    vals = [spread_variance(t, PAPER_BATH) for t in ts]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_variance_vanishes_without_bath():
    off = BathParams(eta=0.0, omega_c=10.0, beta=0.1)
    assert spread_variance(1.0, off) == 0.0


def test_variance_scales_with_phi_prime_squared():
    b1 = BathParams(eta=0.5, omega_c=8.0, beta=0.2, phi_prime=1.0)
    b2 = BathParams(eta=0.5, omega_c=8.0, beta=0.2, phi_prime=3.0)
    assert math.isclose(spread_variance(2.0, b2),
                        9.0 * spread_variance(2.0, b1), rel_tol=1e-14)


# ---------------------------------------------------------------------------
# dephasing phase (proportional to m^2 - n^2)
# ---------------------------------------------------------------------------

def test_phase_zero_on_diagonal():
    assert dephasing_phase(4, 4, 1.0, 0.46, PAPER_BATH) == 0.0


def test_phase_antisymmetric():
    a = dephasing_phase(5, 2, 0.7, 0.46, PAPER_BATH)
    b = dephasing_phase(2, 5, 0.7, 0.46, PAPER_BATH)
    assert a == -b != 0.0


def test_phase_saturates_at_half_pi_arctan():
    # (m, n) = (1, 0), eta = 1, hbar = 0.46: limit is 0.46 * pi / 2.
    val = dephasing_phase(1, 0, 1e9, 0.46, PAPER_BATH)
    assert abs(val - 0.46 * math.pi / 2) < 1e-6


@given(m=st.integers(-50, 50), n=st.integers(-50, 50),
       t=st.floats(0.0, 100.0))
@settings(max_examples=60, deadline=None)
def test_phase_depends_on_m2_minus_n2(m, n, t):
    val = dephasing_phase(m, n, t, 0.46, PAPER_BATH)
    mirrored = dephasing_phase(-m, -n, t, 0.46, PAPER_BATH)
    assert val == mirrored
    assert val == -dephasing_phase(n, m, t, 0.46, PAPER_BATH)


# ---------------------------------------------------------------------------
# dephasing decay (proportional to (m - n)^2)
# ---------------------------------------------------------------------------

def test_decay_zero_on_diagonal_and_at_zero_time():
    assert dephasing_decay(7, 7, 3.0, 0.46, PAPER_BATH) == 0.0
    assert dephasing_decay(3, 0, 0.0, 0.46, PAPER_BATH) == 0.0


def test_decay_nonnegative_and_increasing_in_time():
    vals = [dephasing_decay(2, 0, t, 0.46, PAPER_BATH)
            for t in (0.25, 0.5, 1.0, 2.0, 4.0)]
    assert all(v > 0 for v in vals)
    assert all(b > a for a, b in zip(vals, vals[1:]))


@given(m=st.integers(-40, 40), n=st.integers(-40, 40))
@settings(max_examples=60, deadline=None)
def test_decay_depends_only_on_difference_squared(m, n):
    val = dephasing_decay(m, n, 1.0, 0.46, PAPER_BATH)
    assert val == dephasing_decay(n, m, 1.0, 0.46, PAPER_BATH)
    assert val == dephasing_decay(m + 3, n + 3, 1.0, 0.46, PAPER_BATH)
    assert val == dephasing_decay(-m, -n, 1.0, 0.46, PAPER_BATH)
    assert val >= 0.0


def test_decoupled_limit_gives_unit_factor():
    off = BathParams(eta=0.0, omega_c=10.0, beta=0.1)
    a2 = dephasing_decay(6, -3, 1.0, 0.46, off)
    a1 = dephasing_phase(6, -3, 1.0, 0.46, off)
    assert complex(np.exp(-1j * a1) * np.exp(-a2)) == 1.0 + 0.0j


def test_paper_point_against_gamma_oracle():
    # |m - n| = 1, eta = 1, hbar = 0.46, omega_c = 10.87, beta = 0.1, t = 1.
    bath = PAPER_BATH
    expected = 0.46 * (0.5 * math.log1p(10.87 ** 2)
                       + gamma_log_product(1.0, 10.87, 0.1))
    got = dephasing_decay(1, 0, 1.0, 0.46, bath)
    assert abs(got - expected) / expected < 1e-10


def test_truncated_product_matches_oracle_over_grid():
    for t in (0.05, 0.3, 1.0, 4.0):
        for beta_wc in (0.2, 1.087, 5.0, 20.0):
            beta = 0.1
            omega_c = beta_wc / beta
            bath = BathParams(eta=1.0, omega_c=omega_c, beta=beta)
            mine = log_thermal_product(t, bath)
            oracle = gamma_log_product(t, omega_c, beta)
            assert abs(mine - oracle) / abs(oracle) < 1e-8, (t, beta_wc)


def test_log_sum_agrees_with_literal_partial_product():
    # Multiply the first 10^6 factors directly (with rescaling) and compare
    # the log against the same truncated log-sum; this checks the summation
    # machinery independent of the tail treatment.
    t, omega_c, beta = 1.0, 10.87, 0.1
    n_terms = 10 ** 6
    k = np.arange(1, n_terms + 1, dtype=float)
    factors = 1.0 + (omega_c * t / (1.0 + k * beta * omega_c)) ** 2
    log_direct = 0.0
    running = 1.0
    for chunk in np.array_split(factors, 100):
        running *= np.prod(chunk)
        if running > 1e250 or running < 1e-250:
            log_direct += math.log(running)
            running = 1.0
    log_direct += math.log(running)
    log_sum = float(np.log1p(
        (omega_c * t / (1.0 + k * beta * omega_c)) ** 2).sum())
    assert abs(log_direct - log_sum) / log_sum < 1e-10


# ---------------------------------------------------------------------------
# kernel bundle and decay clamping
# ---------------------------------------------------------------------------

def test_kernels_cached_per_time():
    k1 = BathKernels.at(1.0, 0.46, PAPER_BATH)
    k2 = BathKernels.at(1.0, 0.46, PAPER_BATH)
    assert k1 is k2
    assert k1.variance == spread_variance(1.0, PAPER_BATH)
    assert k1.decay_coeff == decay_coefficient(1.0, 0.46, PAPER_BATH)


def test_decay_factor_clamps_underflow():
    out = decay_factor(np.array([0.0, 1.0, DECAY_CLAMP + 1.0, 1e6]))
    assert out[0] == 1.0
    assert math.isclose(out[1], math.exp(-1.0))
    assert out[2] == 0.0 and out[3] == 0.0
