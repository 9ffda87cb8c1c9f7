"""Exact reduced-density-matrix propagation in the truncated momentum basis.

A basis state |l> carries momentum hbar*l for l in [-l_max, l_max].  One
kick period is: free evolution dressed by the bath over unit time (an
elementwise phase and decay on the coherences; populations untouched),
followed by the instantaneous kick rho -> U rho U+ with the Toeplitz
unitary <l|U|m> = i^(l-m) J_(l-m)(K/hbar).

Bessel bands are generated by backward recurrence (Miller's algorithm)
normalised with J_0 + 2 sum J_2k = 1; upward recurrence is unstable for
order > argument.  The von Neumann entropy comes from a Hermitian
eigendecomposition with a small floor replacing the eigenvalues that are
zero up to rounding (continuous extension of x ln x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import bath as bathmod
from .analysis import EntropySeries
from .errors import BasisError, PositivityError
from .params import BathParams, ValidatedConfig

# Default initial condition used throughout: packet centred at q = 0,
# p = pi*hbar, which sits in the chaotic sea for every K of interest.
DEFAULT_L_CENTER = math.pi

# Width parameter of the momentum-space Gaussian amplitude exp[-a l^2 + b l].
DEFAULT_WIDTH = 1.0

_TAIL_LIMIT = 1e-14          # packet amplitude allowed at the basis edge
_TRACE_LEAK_LIMIT = 1e-6     # kick-step trace drift treated as basis overflow
_EIG_NEGATIVE_LIMIT = -1e-6  # eigenvalue below this is a positivity failure


# ---------------------------------------------------------------------------
# Initial state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WavePacket:
    """Normalised momentum-space Gaussian amplitudes a_l = N exp[-a l^2 + b l]."""

    a_param: float
    b_param: complex
    l_max: int
    coeffs: np.ndarray

    @property
    def l_values(self) -> np.ndarray:
        return np.arange(-self.l_max, self.l_max + 1)


def make_wavepacket(hbar: float, p_center: float, q_center: float,
                    l_max: int, width: float = DEFAULT_WIDTH) -> WavePacket:
    """Gaussian wave packet centred at (q_center, p_center).

    The amplitude is exp[-width (l - l0)^2] exp(-i q_center l) with
    l0 = p_center / hbar (not necessarily an integer; a non-lattice centre
    avoids symmetry artifacts).  Raises BasisError when l_max is too small
    to hold the tails below 1e-14.
    """
    l0 = p_center / hbar
    l = np.arange(-l_max, l_max + 1)
    amp = np.exp(-width * (l - l0) ** 2).astype(complex)
    amp *= np.exp(-1j * q_center * l)
    norm = np.linalg.norm(amp)
    if norm == 0.0:
        raise BasisError("basis truncation: packet entirely outside the basis")
    amp /= norm
    if abs(amp[0]) > _TAIL_LIMIT or abs(amp[-1]) > _TAIL_LIMIT:
        raise BasisError(
            f"basis truncation: |a_l| = {max(abs(amp[0]), abs(amp[-1])):.2e} "
            f"at l = +/-{l_max}")
    b = 2.0 * width * l0 - 1j * q_center
    return WavePacket(a_param=width, b_param=complex(b), l_max=l_max, coeffs=amp)


# ---------------------------------------------------------------------------
# Density matrix
# ---------------------------------------------------------------------------

@dataclass
class DensityMatrix:
    """Truncated momentum-basis density operator; row 0 is l = -l_max."""

    entries: np.ndarray
    l_max: int

    @property
    def dim(self) -> int:
        return 2 * self.l_max + 1

    @property
    def l_values(self) -> np.ndarray:
        return np.arange(-self.l_max, self.l_max + 1)

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())


def pure_density(psi: WavePacket) -> DensityMatrix:
    """Rank-1 projector rho_mn = a_m a_n* of a normalised packet."""
    rho = np.outer(psi.coeffs, psi.coeffs.conj())
    return DensityMatrix(entries=rho, l_max=psi.l_max)


# ---------------------------------------------------------------------------
# Bath step (free evolution dressed by dephasing)
# ---------------------------------------------------------------------------

def bath_step(rho: DensityMatrix, t: float, hbar: float, bath: BathParams,
              product_tol: float = 1e-12) -> DensityMatrix:
    """Evolve through time t of bath-dressed free motion.

    Elementwise on the coherences: a free phase with the bath's extra
    frequency renormalisation, times a decay factor in (m - n)^2.  The
    diagonal is multiplied by exactly 1, so populations are bit-for-bit
    unchanged, and Hermiticity is preserved exactly.
    """
    factors = _bath_factor_matrix(rho.l_max, t, hbar, bath, product_tol)
    return DensityMatrix(entries=rho.entries * factors, l_max=rho.l_max)


def _bath_factor_matrix(l_max: int, t: float, hbar: float, bath: BathParams,
                        product_tol: float = 1e-12) -> np.ndarray:
    kernels = bathmod.BathKernels.at(t, hbar, bath, product_tol)
    l = np.arange(-l_max, l_max + 1, dtype=float)
    l2 = l * l
    m2n2 = l2[:, None] - l2[None, :]
    diff = l[:, None] - l[None, :]
    phase = (0.5 * hbar * t + kernels.phase_coeff) * m2n2
    decay = bathmod.decay_factor(kernels.decay_coeff * diff * diff)
    return np.exp(-1j * phase) * decay


# ---------------------------------------------------------------------------
# Kick
# ---------------------------------------------------------------------------

def bessel_j_array(x: float, n_max: int) -> np.ndarray:
    """J_0(x) .. J_n_max(x) by Miller backward recurrence.

    The downward recursion starts well above max(n_max, x) from an
    arbitrary seed and is normalised with J_0 + 2 sum_k J_2k = 1.
    """
    if x == 0.0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    start = n_max + int(1.2 * x) + 60
    out = np.zeros(start + 2)
    out[start + 1] = 0.0
    out[start] = 1e-300
    for nu in range(start, 0, -1):
        out[nu - 1] = (2.0 * nu / x) * out[nu] - out[nu + 1]
        if abs(out[nu - 1]) > 1e250:
            out[nu - 1:] *= 1e-250
    norm = out[0] + 2.0 * out[2::2].sum()
    return out[:n_max + 1] / norm


@dataclass
class KickMatrix:
    """Dense Toeplitz kick unitary with its retained half-bandwidth."""

    entries: np.ndarray
    band_width: int
    _sparse: Optional[sp.csr_matrix] = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def sparse(self) -> sp.csr_matrix:
        if self._sparse is None:
            self._sparse = sp.csr_matrix(self.entries)
        return self._sparse


_I_POWERS = np.array([1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j])


def kick_matrix(K: float, hbar: float, l_max: int,
                band_tol: float = 1e-14) -> KickMatrix:
    """Unitary kick operator <l|U|m> = i^(l-m) J_(l-m)(K/hbar).

    Since J_(-d) = (-1)^d J_d, the entries reduce to i^|d| J_|d|: a complex
    symmetric Toeplitz matrix.  The band is truncated where |J_d| stays
    below band_tol, but never below K/hbar + 40 so the retained band always
    contains the oscillatory region of the Bessel functions.
    """
    dim = 2 * l_max + 1
    x = K / hbar
    n_compute = min(dim - 1, int(math.ceil(x)) + 40)
    j = bessel_j_array(x, n_compute)
    significant = np.nonzero(np.abs(j) >= band_tol)[0]
    cut = int(significant[-1]) if significant.size else 0
    band = min(dim - 1, max(cut, n_compute))
    j = j[:band + 1]

    d = np.abs(np.arange(-l_max, l_max + 1)[:, None]
               - np.arange(-l_max, l_max + 1)[None, :])
    entries = np.zeros((dim, dim), dtype=complex)
    inside = d <= band
    entries[inside] = _I_POWERS[d[inside] % 4] * j[d[inside]]
    return KickMatrix(entries=entries, band_width=band)


def kick_step(rho: DensityMatrix, U: KickMatrix) -> DensityMatrix:
    """rho -> U rho U+, re-symmetrised; trace drift above 1e-6 means the
    basis is too small (probability leaked past +/- l_max)."""
    if U.dim != rho.dim:
        raise ValueError(f"kick matrix dim {U.dim} != density matrix dim {rho.dim}")
    tr_before = rho.trace()
    if U.band_width < rho.dim // 3:
        us = U.sparse()
        y = us @ rho.entries
        out = (us @ y.conj().T).conj().T
    else:
        out = U.entries @ rho.entries @ U.entries.conj().T
    out = 0.5 * (out + out.conj().T)
    new = DensityMatrix(entries=out, l_max=rho.l_max)
    drift = abs(new.trace() - tr_before)
    if drift > _TRACE_LEAK_LIMIT:
        raise BasisError(
            f"basis too small: kick leaked {drift:.3e} of the trace past "
            f"l = +/-{rho.l_max}")
    return new


# ---------------------------------------------------------------------------
# Observables
# ---------------------------------------------------------------------------

def entropy_from_eigenvalues(eigenvalues: np.ndarray,
                             eig_floor: float = 1e-14) -> float:
    """-sum lambda ln lambda in nats, with the x ln x -> 0 extension below the floor."""
    lam = np.asarray(eigenvalues, dtype=float)
    low = float(lam.min()) if lam.size else 0.0
    if low < _EIG_NEGATIVE_LIMIT:
        raise PositivityError(f"positivity violation: eigenvalue {low:.3e}")
    lam = lam[lam >= eig_floor]
    return float(-(lam * np.log(lam)).sum()) + 0.0


def von_neumann_entropy(rho: DensityMatrix, eig_floor: float = 1e-14) -> float:
    """Entropy -Tr rho ln rho of a Hermitian density matrix, in nats."""
    eigenvalues = np.linalg.eigvalsh(rho.entries)
    return entropy_from_eigenvalues(eigenvalues, eig_floor)


def quantum_energy(rho: DensityMatrix, hbar: float) -> float:
    """Kinetic expectation sum_m rho_mm (hbar m)^2 / 2."""
    populations = np.diag(rho.entries).real
    return float((populations * (hbar * rho.l_values) ** 2).sum() / 2.0)


# ---------------------------------------------------------------------------
# Full run
# ---------------------------------------------------------------------------

def auto_l_max(K: float, hbar: float, n_kicks: int,
               l_center: float = DEFAULT_L_CENTER) -> int:
    """Basis half-width keeping end-of-run leak below ~1e-8.

    Six diffusive standard deviations (sigma_l = K sqrt(n) / (sqrt(2) hbar))
    plus one kick bandwidth and the packet footprint.
    """
    sigma = (K / (math.sqrt(2.0) * hbar)) * math.sqrt(max(n_kicks, 1))
    band = K / hbar + 40.0
    return int(math.ceil(abs(l_center) + 6.0 * sigma + band + 10.0))


def run_quantum(config: ValidatedConfig, n_kicks: Optional[int] = None,
                p_center: Optional[float] = None, q_center: float = 0.0,
                width: float = DEFAULT_WIDTH,
                entropy_every: int = 1) -> EntropySeries:
    """Propagate the reduced density matrix for n_kicks periods.

    Each period applies the bath-dressed free step over unit time and then
    the kick.  Records entropy, energy, trace and the smallest eigenvalue
    at kick 0 (the initial pure state) and at every recorded kick; with
    entropy_every > 1 the eigendecomposition runs only at every few kicks
    to cut the cost of large-basis sweeps.
    """
    K, hbar = config.rotor.K, config.rotor.hbar
    n_kicks = config.kicks if n_kicks is None else n_kicks
    p_center = math.pi * hbar if p_center is None else p_center
    l_center = p_center / hbar
    l_max = config.numerics.l_max
    if l_max is None:
        l_max = auto_l_max(K, hbar, n_kicks, l_center)

    psi = make_wavepacket(hbar, p_center, q_center, l_max, width)
    rho = pure_density(psi)
    U = kick_matrix(K, hbar, l_max, config.numerics.band_tol)
    factors = _bath_factor_matrix(l_max, 1.0, hbar, config.bath,
                                  config.numerics.product_tol)
    eig_floor = config.numerics.eig_floor

    recorded = [0]
    eigenvalues = np.linalg.eigvalsh(rho.entries)
    entropy = [entropy_from_eigenvalues(eigenvalues, eig_floor)]
    energy = [quantum_energy(rho, hbar)]
    trace = [rho.trace()]
    min_eig = [float(eigenvalues.min())]

    for n in range(1, n_kicks + 1):
        try:
            rho = DensityMatrix(entries=rho.entries * factors, l_max=l_max)
            rho = kick_step(rho, U)
            if n % entropy_every == 0 or n == n_kicks:
                eigenvalues = np.linalg.eigvalsh(rho.entries)
                recorded.append(n)
                entropy.append(entropy_from_eigenvalues(eigenvalues, eig_floor))
                energy.append(quantum_energy(rho, hbar))
                trace.append(rho.trace())
                min_eig.append(float(eigenvalues.min()))
        except (BasisError, PositivityError) as exc:
            raise type(exc)(f"kick {n}: {exc}") from exc

    label = f"quantum K={K:g} hbar={hbar:g} eta={config.bath.eta:g}"
    return EntropySeries(
        kicks=np.array(recorded), entropy=np.array(entropy),
        energy=np.array(energy), label=label,
        extras={"trace": np.array(trace), "min_eig": np.array(min_eig)},
    )
