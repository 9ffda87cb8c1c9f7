"""Exact scalar kernels induced by the ohmic bath.

Integrating the bath modes out of the nondemolition coupling leaves four
closed-form kernels, all functions of time and the bath constants only:

* spread_variance s(t) = 2 eta phi'^2 [t arctan(w_c t) - ln(1 + w_c^2 t^2)/(2 w_c)].
  The Gaussian that coarse-grains the classical angle has variance s(t)/beta.
  Quadratic in t below the cutoff time, linear (slope pi eta phi'^2) above it.
* drift_coefficient eta phi'^2 arctan(w_c t): systematic extra angle advance
  per unit momentum (the coupling renormalises the rotor frequency).
* dephasing_phase: unitary phase eta hbar (m^2 - n^2) arctan(w_c t) picked up
  by the momentum coherence <m|rho|n>.
* dephasing_decay: non-negative decay exponent proportional to (m - n)^2,
  with a thermal part given by an infinite product over Matsubara-like
  frequencies.  The product is evaluated as a sum of log terms truncated at
  a relative tolerance plus an analytic tail (the terms decay like 1/k^2,
  so the tail is a Hurwitz zeta value).

Everything vanishes identically at eta = 0, and the decay exponent is zero
on the diagonal m = n, so populations are never touched.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import zeta

from .errors import ConvergenceError
from .params import BathParams

# Beyond this exponent exp(-x) underflows to noise; treat the matrix
# element as exactly zero instead.
DECAY_CLAMP = 700.0

_CHUNK = 1 << 16
_MAX_PRODUCT_TERMS = 10 ** 8


def spread_variance(t: float, bath: BathParams) -> float:
    """Angle-spread scale s(t); the coarse-graining Gaussian has variance s(t)/beta."""
    if t < 0:
        raise ValueError("t must be non-negative")
    x = bath.omega_c * t
    return 2.0 * bath.eta * bath.phi_prime ** 2 * (
        t * np.arctan(x) - np.log1p(x * x) / (2.0 * bath.omega_c))


def drift_coefficient(t: float, bath: BathParams) -> float:
    """Bath-induced angle drift per unit momentum over time t."""
    return bath.eta * bath.phi_prime ** 2 * np.arctan(bath.omega_c * t)


def log_thermal_product(t: float, bath: BathParams, tol: float = 1e-12) -> float:
    """log of prod_{k>=1} [1 + (w_c t / (1 + k beta w_c))^2].

    Accumulates log1p terms in chunks until the per-term size guarantees
    the quadratic remainder of the tail is below tol, then adds the exact
    first-order tail sum_{k>k*} (t/beta)^2 / (k + 1/(beta w_c))^2 via the
    Hurwitz zeta function.
    """
    if t == 0.0:
        return 0.0
    x2 = (bath.omega_c * t) ** 2
    bw = bath.beta * bath.omega_c
    total = 0.0
    k0 = 1
    while True:
        k = np.arange(k0, k0 + _CHUNK, dtype=float)
        y = x2 / (1.0 + k * bw) ** 2
        total += float(np.log1p(y).sum())
        k0 += _CHUNK
        y_last = x2 / (1.0 + (k0 - 1) * bw) ** 2
        # log1p(y) - y is O(y^2/2); once y is tiny the zeta tail is exact
        # to the requested relative tolerance.
        if y_last < 1e-6 and 0.5 * y_last * y_last * (k0 - 1) < tol * max(total, 1.0):
            break
        if k0 > _MAX_PRODUCT_TERMS:
            raise ConvergenceError(
                f"thermal product did not converge within {_MAX_PRODUCT_TERMS} "
                f"terms (beta*omega_c = {bw:g} is pathological)")
    tail = (t / bath.beta) ** 2 * float(zeta(2.0, k0 + 1.0 / bw))
    return total + tail


def dephasing_phase(m, n, t: float, hbar: float, bath: BathParams):
    """Unitary phase on the (m, n) coherence; antisymmetric under m <-> n."""
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    out = bath.eta * hbar * (m * m - n * n) * np.arctan(bath.omega_c * t)
    return out if out.ndim else float(out)


def dephasing_decay(m, n, t: float, hbar: float, bath: BathParams,
                    product_tol: float = 1e-12):
    """Decay exponent on the (m, n) coherence; depends only on (m - n)^2."""
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    coeff = decay_coefficient(t, hbar, bath, product_tol)
    out = coeff * (m - n) ** 2
    return out if out.ndim else float(out)


def decay_coefficient(t: float, hbar: float, bath: BathParams,
                      product_tol: float = 1e-12) -> float:
    """Coefficient multiplying (m - n)^2 in the decay exponent."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if bath.eta == 0.0 or t == 0.0:
        return 0.0
    x2 = (bath.omega_c * t) ** 2
    return bath.eta * hbar * (0.5 * np.log1p(x2)
                              + log_thermal_product(t, bath, product_tol))


@dataclass(frozen=True)
class BathKernels:
    """All four kernels evaluated at one time, cached per (t, hbar, bath).

    variance is s(t); drift is the angle advance per unit momentum;
    phase_coeff multiplies (m^2 - n^2); decay_coeff multiplies (m - n)^2.
    """

    t: float
    variance: float
    drift: float
    phase_coeff: float
    decay_coeff: float

    @staticmethod
    def at(t: float, hbar: float, bath: BathParams,
           product_tol: float = 1e-12) -> "BathKernels":
        return _kernels_cached(float(t), float(hbar), bath, float(product_tol))


@lru_cache(maxsize=64)
def _kernels_cached(t: float, hbar: float, bath: BathParams,
                    product_tol: float) -> BathKernels:
    return BathKernels(
        t=t,
        variance=spread_variance(t, bath),
        drift=drift_coefficient(t, bath),
        phase_coeff=bath.eta * hbar * float(np.arctan(bath.omega_c * t)),
        decay_coeff=decay_coefficient(t, hbar, bath, product_tol),
    )


def decay_factor(decay_exponent: np.ndarray) -> np.ndarray:
    """exp(-A) with underflow-prone exponents clamped straight to zero."""
    a = np.asarray(decay_exponent, dtype=float)
    out = np.exp(-np.minimum(a, DECAY_CLAMP))
    return np.where(a > DECAY_CLAMP, 0.0, out)
