"""Liouville evolution of the Husimi distribution on a cylinder grid.

The grid is periodic in the angle (nq cells over [0, 2pi)) and truncated
in momentum (np_grid cells over [p_center - p_extent, p_center + p_extent]),
with the phase-space measure dq dp / (2 pi hbar).

One kick period is: free streaming plus the bath drift (each momentum row's
angle advances by p (t + eta phi'^2 arctan(w_c t))), followed by a circular
convolution of every row with a wrapped Gaussian of variance s(t)/beta,
and then the kick, which resamples each angle column at p - K sin q.
Shifts by non-grid amounts use linear interpolation: positivity matters
more for an entropy integrand than spectral accuracy.  The momentum
marginal is untouched by the bath step; the kick only rearranges momentum
within a column, leaving the angle marginal unchanged.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import bath as bathmod
from .analysis import EntropySeries
from .errors import GridError
from .params import BathParams, ValidatedConfig
from .quantum import DEFAULT_L_CENTER, DEFAULT_WIDTH, WavePacket, make_wavepacket

TWO_PI = 2.0 * math.pi

_ENTROPY_FLOOR = 1e-30       # cells below this contribute 0 to -f ln f
_BOUNDARY_INIT_LIMIT = 1e-10
_BOUNDARY_RUN_LIMIT = 1e-8
_KERNEL_CUTOFF_SIGMAS = 8.0

GRID_MAGIC = b"KRGRID01"


@dataclass(frozen=True)
class GridSpec:
    """Grid geometry: sizes, momentum half-width and centre."""

    nq: int
    np_grid: int
    p_extent: float
    p_center: float = 0.0


@dataclass
class PhaseSpaceGrid:
    """Non-negative distribution f(q, p) sampled on the cylinder grid.

    values has shape (np_grid, nq): one row per momentum cell.  Momentum
    samples sit at cell centres.
    """

    values: np.ndarray
    q: np.ndarray
    p: np.ndarray
    hbar: float

    @property
    def nq(self) -> int:
        return self.q.size

    @property
    def np_grid(self) -> int:
        return self.p.size

    @property
    def dq(self) -> float:
        return TWO_PI / self.nq

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    @property
    def measure(self) -> float:
        """Cell weight dq dp / (2 pi hbar)."""
        return self.dq * self.dp / (TWO_PI * self.hbar)

    def mass(self) -> float:
        return float(self.values.sum() * self.measure)

    def boundary_mass(self) -> float:
        return float((self.values[0].sum() + self.values[-1].sum()) * self.measure)

    def copy(self) -> "PhaseSpaceGrid":
        return PhaseSpaceGrid(values=self.values.copy(), q=self.q, p=self.p,
                              hbar=self.hbar)


def make_grid(spec: GridSpec, hbar: float) -> PhaseSpaceGrid:
    q = np.arange(spec.nq) * (TWO_PI / spec.nq)
    dp = 2.0 * spec.p_extent / spec.np_grid
    p = spec.p_center - spec.p_extent + (np.arange(spec.np_grid) + 0.5) * dp
    return PhaseSpaceGrid(values=np.zeros((spec.np_grid, spec.nq)), q=q, p=p,
                          hbar=hbar)


def auto_p_extent(K: float, hbar: float, n_kicks: int) -> float:
    """Momentum half-width: six diffusive sigmas plus kick and packet margins."""
    sigma = (K / math.sqrt(2.0)) * math.sqrt(max(n_kicks, 1))
    return 6.0 * sigma + K + 8.0 * hbar


# ---------------------------------------------------------------------------
# Initial distribution
# ---------------------------------------------------------------------------

def husimi_init(psi: WavePacket, spec: GridSpec, hbar: float) -> PhaseSpaceGrid:
    """Husimi distribution of the packet, renormalised on the grid.

    Evaluated as |sum_l a_l exp(-(l - p/hbar)^2 / 2) e^{ilq}|^2 / sqrt(pi),
    which expands to the double-sum form with cos((m-n)q) interference
    terms and is manifestly non-negative.  Periodic in q by construction.
    """
    grid = make_grid(spec, hbar)
    f = _husimi_values(psi, grid.q, grid.p, hbar)
    if f.min() < -1e-10 * f.max():
        raise GridError("Husimi evaluation error: negative density")
    np.clip(f, 0.0, None, out=f)
    grid.values = f
    mass = grid.mass()
    if mass <= 0.0 or abs(mass - 1.0) > 0.01:
        raise GridError(
            f"p-grid too small: Husimi mass on grid is {mass:.6f}, not 1")
    grid.values /= mass
    if grid.boundary_mass() > _BOUNDARY_INIT_LIMIT:
        raise GridError("p-grid too small: initial packet touches the boundary")
    return grid


def _husimi_values(psi: WavePacket, q: np.ndarray, p: np.ndarray,
                   hbar: float) -> np.ndarray:
    amp = psi.coeffs
    l = psi.l_values
    keep = np.abs(amp) > 1e-18 * np.abs(amp).max()
    l = l[keep]
    amp = amp[keep]
    envelope = np.exp(-0.5 * (l[None, :] - (p / hbar)[:, None]) ** 2)
    phases = np.exp(1j * np.outer(l, q))
    w = (envelope * amp[None, :]) @ phases
    return (np.abs(w) ** 2) / math.sqrt(math.pi)


# ---------------------------------------------------------------------------
# Bath step: shear + drift, then wrapped-Gaussian smearing of each row
# ---------------------------------------------------------------------------

def wrapped_gaussian_kernel(nq: int, sigma: float, dq: float) -> np.ndarray:
    """Wrapped Gaussian on the periodic angle grid, truncated at 8 sigma.

    Returns a length-nq kernel indexed by grid offset (offset 0 first),
    normalised to unit sum.  For sigma well above 2 pi the wraps overlap
    and the kernel tends to the uniform distribution, as it should.
    """
    offsets = (np.arange(nq) + nq // 2) % nq - nq // 2
    x0 = offsets * dq
    cutoff = _KERNEL_CUTOFF_SIGMAS * sigma
    wraps = int(math.ceil(cutoff / TWO_PI)) + 1
    kernel = np.zeros(nq)
    for w in range(-wraps, wraps + 1):
        x = x0 + w * TWO_PI
        inside = np.abs(x) <= cutoff
        kernel[inside] += np.exp(-0.5 * (x[inside] / sigma) ** 2)
    total = kernel.sum()
    if total == 0.0:
        kernel[0] = 1.0
        return kernel
    return kernel / total


def _shift_rows_periodic(values: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Shift each row right by its own (fractional) number of cells."""
    nq = values.shape[1]
    k = np.floor(shifts).astype(int)
    frac = shifts - k
    base = np.arange(nq)[None, :]
    cols = (base - k[:, None]) % nq
    v0 = np.take_along_axis(values, cols, axis=1)
    v1 = np.take_along_axis(values, (cols - 1) % nq, axis=1)
    return (1.0 - frac)[:, None] * v0 + frac[:, None] * v1


def bath_drift_smear(grid: PhaseSpaceGrid, t: float, bath: BathParams,
                     hbar: float) -> PhaseSpaceGrid:
    """Free streaming + bath drift + Gaussian coarse-graining over time t.

    Every momentum row shifts in angle by p (t + eta phi'^2 arctan(w_c t))
    and is then circularly convolved with a wrapped Gaussian of variance
    s(t)/beta.  The momentum marginal is preserved exactly.  At eta = 0
    this reduces to the pure shear of the free rotor.
    """
    kernels = bathmod.BathKernels.at(t, hbar, bath)
    shift_q = grid.p * (t + kernels.drift)
    out = _shift_rows_periodic(grid.values, shift_q / grid.dq)

    variance = kernels.variance / bath.beta if bath.eta > 0.0 else 0.0
    if variance > 0.0:
        kernel = wrapped_gaussian_kernel(grid.nq, math.sqrt(variance), grid.dq)
        spectrum = np.fft.rfft(out, axis=1) * np.fft.rfft(kernel)[None, :]
        out = np.fft.irfft(spectrum, n=grid.nq, axis=1)
        np.clip(out, 0.0, None, out=out)
    return PhaseSpaceGrid(values=out, q=grid.q, p=grid.p, hbar=grid.hbar)


# ---------------------------------------------------------------------------
# Kick: resample each angle column at p - K sin q
# ---------------------------------------------------------------------------

def kick_shift(grid: PhaseSpaceGrid, K: float) -> PhaseSpaceGrid:
    """Apply one kick, f(q, p) -> f(q, p - K sin q), by linear interpolation.

    Mass shifted past the momentum boundary (or already sitting on it) above
    1e-8 raises GridError; otherwise the distribution is renormalised to
    exact unit mass.
    """
    np_grid, nq = grid.values.shape
    shifts = K * np.sin(grid.q) / grid.dp
    k = np.floor(shifts).astype(int)
    frac = shifts - k
    rows = np.arange(np_grid)[:, None] - k[None, :]
    rows1 = rows - 1
    f = grid.values
    cols = np.broadcast_to(np.arange(nq)[None, :], rows.shape)
    v0 = np.where((rows >= 0) & (rows < np_grid),
                  f[np.clip(rows, 0, np_grid - 1), cols], 0.0)
    v1 = np.where((rows1 >= 0) & (rows1 < np_grid),
                  f[np.clip(rows1, 0, np_grid - 1), cols], 0.0)
    out = (1.0 - frac)[None, :] * v0 + frac[None, :] * v1

    new = PhaseSpaceGrid(values=out, q=grid.q, p=grid.p, hbar=grid.hbar)
    mass_before = grid.mass()
    mass_after = new.mass()
    lost = abs(mass_before - mass_after)
    if lost + new.boundary_mass() > _BOUNDARY_RUN_LIMIT * mass_before:
        raise GridError(
            f"p-grid too small: {lost:.3e} of the mass reached the boundary")
    new.values *= mass_before / mass_after
    return new


# ---------------------------------------------------------------------------
# Observables
# ---------------------------------------------------------------------------

def classical_entropy(grid: PhaseSpaceGrid) -> float:
    """-integral f ln f dq dp / (2 pi hbar), in nats."""
    f = grid.values
    safe = np.where(f > _ENTROPY_FLOOR, f, 1.0)
    return float(-(f * np.log(safe)).sum() * grid.measure)


def marginals(grid: PhaseSpaceGrid) -> tuple[np.ndarray, np.ndarray]:
    """(g1(q), g2(p)): angle and momentum marginals, each integrating to 1.

    A uniform distribution gives g1 = 1/(2 pi) everywhere.
    """
    g1 = grid.values.sum(axis=0) * grid.dp / (TWO_PI * grid.hbar)
    g2 = grid.values.sum(axis=1) * grid.dq / (TWO_PI * grid.hbar)
    return g1, g2


def classical_energy(grid: PhaseSpaceGrid) -> float:
    """Kinetic expectation integral f p^2/2 dq dp / (2 pi hbar)."""
    return float((grid.values * (grid.p ** 2 / 2.0)[:, None]).sum()
                 * grid.measure)


# ---------------------------------------------------------------------------
# Full run
# ---------------------------------------------------------------------------

def run_classical(config: ValidatedConfig, n_kicks: Optional[int] = None,
                  p_center: Optional[float] = None, q_center: float = 0.0,
                  width: float = DEFAULT_WIDTH,
                  entropy_every: int = 1) -> EntropySeries:
    """Evolve the Husimi distribution for n_kicks periods.

    Each period applies the bath drift-and-smear over unit time and then
    the kick, recording entropy, energy and mass (kick 0 is the initial
    Husimi distribution, whose entropy is close to 1 for the default
    packet).
    """
    K, hbar = config.rotor.K, config.rotor.hbar
    n_kicks = config.kicks if n_kicks is None else n_kicks
    p_center = DEFAULT_L_CENTER * hbar if p_center is None else p_center
    p_extent = config.numerics.p_extent
    if p_extent is None:
        p_extent = auto_p_extent(K, hbar, n_kicks)
    spec = GridSpec(nq=config.numerics.nq, np_grid=config.numerics.np_grid,
                    p_extent=p_extent, p_center=p_center)

    l_max = int(math.ceil(abs(p_center / hbar))) + 12
    psi = make_wavepacket(hbar, p_center, q_center, l_max, width)
    grid = husimi_init(psi, spec, hbar)

    recorded = [0]
    entropy = [classical_entropy(grid)]
    energy = [classical_energy(grid)]
    mass = [grid.mass()]
    for n in range(1, n_kicks + 1):
        try:
            grid = bath_drift_smear(grid, 1.0, config.bath, hbar)
            grid = kick_shift(grid, K)
        except GridError as exc:
            raise GridError(f"kick {n}: {exc}") from exc
        if n % entropy_every == 0 or n == n_kicks:
            recorded.append(n)
            entropy.append(classical_entropy(grid))
            energy.append(classical_energy(grid))
            mass.append(grid.mass())

    label = f"classical K={K:g} hbar={hbar:g} eta={config.bath.eta:g}"
    return EntropySeries(kicks=np.array(recorded), entropy=np.array(entropy),
                         energy=np.array(energy), label=label,
                         extras={"mass": np.array(mass)})


# ---------------------------------------------------------------------------
# Binary grid dump (magic "KRGRID01", nq, np_grid, p_min, p_max, then rows)
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<8sIIdd")


def save_grid(grid: PhaseSpaceGrid, path) -> None:
    """Write the 32-byte header and row-major float64 values, little-endian."""
    header = _HEADER.pack(GRID_MAGIC, grid.nq, grid.np_grid,
                          float(grid.p[0]), float(grid.p[-1]))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(grid.values, dtype="<f8").tobytes())


def load_grid(path, hbar: float) -> PhaseSpaceGrid:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        magic, nq, np_grid, p_min, p_max = _HEADER.unpack(raw)
        if magic != GRID_MAGIC:
            raise GridError(f"not a grid dump: bad magic {magic!r}")
        values = np.frombuffer(fh.read(), dtype="<f8").reshape(np_grid, nq)
    q = np.arange(nq) * (TWO_PI / nq)
    p = np.linspace(p_min, p_max, np_grid)
    return PhaseSpaceGrid(values=values.copy(), q=q, p=p, hbar=hbar)
