"""Quantum evolution: packet, kick matrix, bath step, entropy, full runs."""

import math

import numpy as np
import pytest

from rotorbath import (BasisError, BathParams, DensityMatrix, PositivityError,
                       bath_step, bessel_j_array, config_from_mapping,
                       kick_matrix, kick_step, make_wavepacket, pure_density,
                       quantum_energy, run_quantum, von_neumann_entropy)
from rotorbath.quantum import auto_l_max, entropy_from_eigenvalues

HBAR = 0.46
PAPER_BATH = BathParams(eta=1.0, omega_c=5 / HBAR, beta=0.1)


def default_packet(l_max=20):
    return make_wavepacket(HBAR, math.pi * HBAR, 0.0, l_max)


# ---------------------------------------------------------------------------
# Wave packet
# ---------------------------------------------------------------------------

def test_packet_normalised():
    psi = default_packet()
    assert abs(np.vdot(psi.coeffs, psi.coeffs).real - 1.0) < 1e-12


def test_packet_peaks_between_3_and_4():
    psi = default_packet()
    peak_l = psi.l_values[np.argmax(np.abs(psi.coeffs))]
    assert peak_l in (3, 4)
    # centre of mass sits at l0 = pi up to small lattice corrections
    prob = np.abs(psi.coeffs) ** 2
    assert abs((psi.l_values * prob).sum() - math.pi) < 0.02


def test_packet_momentum_spread():
    # Direct moment sum over the coefficients.  On the integer lattice the
    # nominal hbar/2 width picks up a ~5% correction; the exact value is
    # frozen from the same moment sum at high l_max.
    psi = default_packet(l_max=40)
    prob = np.abs(psi.coeffs) ** 2
    mean = (psi.l_values * prob).sum()
    var = (psi.l_values ** 2 * prob).sum() - mean ** 2
    assert abs(var - 0.22755029) < 1e-6
    dp = HBAR * math.sqrt(var)
    assert abs(dp - HBAR / 2) / (HBAR / 2) < 0.05


def test_packet_coefficients_match_form():
    psi = make_wavepacket(HBAR, math.pi * HBAR, 0.5, l_max=25)
    l = psi.l_values
    expected = np.exp(-(l - math.pi) ** 2).astype(complex)
    expected *= np.exp(-1j * 0.5 * l)
    expected /= np.linalg.norm(expected)
    assert np.allclose(psi.coeffs, expected, atol=1e-14)
    assert psi.a_param == 1.0
    assert math.isclose(psi.b_param.real, 2 * math.pi)
    assert math.isclose(psi.b_param.imag, -0.5)


def test_packet_basis_truncation_error():
    with pytest.raises(BasisError):
        make_wavepacket(HBAR, math.pi * HBAR, 0.0, l_max=5)


# ---------------------------------------------------------------------------
# Pure density matrix
# ---------------------------------------------------------------------------

def test_pure_density_is_projector():
    rho = pure_density(default_packet())
    assert abs(rho.trace() - 1.0) < 1e-12
    assert np.abs(rho.entries @ rho.entries - rho.entries).max() < 1e-10
    assert rho.hermiticity_defect() < 1e-15


def test_pure_state_has_zero_entropy():
    rho = pure_density(default_packet())
    assert von_neumann_entropy(rho) < 1e-10


# ---------------------------------------------------------------------------
# Bath step
# ---------------------------------------------------------------------------

def _random_density(l_max, seed=0):
    rng = np.random.default_rng(seed)
    dim = 2 * l_max + 1
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix(entries=rho, l_max=l_max)


def test_bath_step_reduces_to_free_evolution_without_bath():
    rho = _random_density(6, seed=1)
    off = BathParams(eta=0.0, omega_c=10.0, beta=0.1)
    out = bath_step(rho, 0.8, HBAR, off)
    l = np.arange(-6, 7, dtype=float)
    phases = np.exp(-1j * 0.5 * HBAR * 0.8 * (l[:, None] ** 2 - l[None, :] ** 2))
    assert np.allclose(out.entries, rho.entries * phases, atol=1e-15)


def test_bath_step_diagonal_exactly_unchanged():
    rho = _random_density(8, seed=2)
    out = bath_step(rho, 1.0, HBAR, PAPER_BATH)
    assert np.array_equal(np.diag(out.entries), np.diag(rho.entries))


def test_bath_step_preserves_hermiticity_exactly():
    rho = _random_density(8, seed=3)
    out = bath_step(rho, 1.0, HBAR, PAPER_BATH)
    assert out.hermiticity_defect() == 0.0


def test_bath_step_off_diagonals_decay_monotonically():
    rho = _random_density(5, seed=4)
    mags = []
    for t in (0.25, 0.5, 1.0, 2.0):
        out = bath_step(rho, t, HBAR, PAPER_BATH)
        mags.append(np.abs(out.entries[0, 3]))
    assert all(b < a for a, b in zip(mags, mags[1:]))


def test_bath_step_reflection_covariance():
    # Reflecting the basis l -> -l commutes with the bath step.
    rho = _random_density(6, seed=5)
    flipped = DensityMatrix(entries=rho.entries[::-1, ::-1].copy(), l_max=6)
    out = bath_step(rho, 1.0, HBAR, PAPER_BATH)
    out_flipped = bath_step(flipped, 1.0, HBAR, PAPER_BATH)
    assert np.allclose(out_flipped.entries, out.entries[::-1, ::-1], atol=1e-15)


# ---------------------------------------------------------------------------
# Bessel values and the kick matrix
# ---------------------------------------------------------------------------

def bessel_series(nu: int, x: float, terms: int = 200) -> float:
    """Ascending power series with recursively updated terms."""
    term = (x / 2.0) ** nu / math.factorial(nu)
    total = term
    for k in range(1, terms):
        term *= -(x / 2.0) ** 2 / (k * (nu + k))
        total += term
    return total


def test_bessel_against_series_oracle():
    x = 3.5 / HBAR  # about 7.609
    mine = bessel_j_array(x, 10)
    for nu in range(11):
        assert abs(mine[nu] - bessel_series(nu, x)) < 1e-10


def test_bessel_against_scipy():
    from scipy.special import jv
    x = 12.3
    mine = bessel_j_array(x, 30)
    assert np.allclose(mine, jv(np.arange(31), x), atol=1e-12)


def test_kick_matrix_identity_at_zero_K():
    U = kick_matrix(0.0, HBAR, l_max=5)
    assert np.array_equal(U.entries, np.eye(11, dtype=complex))


def test_kick_matrix_toeplitz_structure():
    U = kick_matrix(3.5, HBAR, l_max=12)
    assert np.allclose(U.entries[1:, 1:], U.entries[:-1, :-1], atol=0)


def test_kick_matrix_band_guarantee():
    U = kick_matrix(3.5, HBAR, l_max=60)
    assert U.band_width >= min(3.5 / HBAR + 40, 2 * 60)
    d = np.abs(np.subtract.outer(np.arange(121), np.arange(121)))
    assert np.all(U.entries[d > U.band_width] == 0.0)


def test_kick_matrix_interior_column_norms():
    U = kick_matrix(3.5, HBAR, l_max=60)
    interior = slice(U.band_width, 121 - U.band_width)
    norms = (np.abs(U.entries[:, interior]) ** 2).sum(axis=0)
    assert np.abs(norms - 1.0).max() < 1e-10


def test_kick_matrix_interior_unitarity():
    U = kick_matrix(2.0, HBAR, l_max=50)
    prod = U.entries.conj().T @ U.entries
    w = U.band_width
    inner = prod[w:-w, w:-w]
    assert np.abs(inner - np.eye(inner.shape[0])).max() < 1e-10


# ---------------------------------------------------------------------------
# Kick step
# ---------------------------------------------------------------------------

def test_kick_step_identity():
    rho = _random_density(5, seed=6)
    U = kick_matrix(0.0, HBAR, l_max=5)
    out = kick_step(rho, U)
    assert np.allclose(out.entries, rho.entries, atol=1e-15)


def test_kick_step_preserves_trace():
    rho = _random_density(40, seed=7)
    U = kick_matrix(1.5, HBAR, l_max=40)
    out = kick_step(rho, U)
    assert abs(out.trace() - rho.trace()) < 1e-10


def test_kick_step_matches_triple_loop_oracle():
    l_max = 2
    rho = _random_density(l_max, seed=8)
    U = kick_matrix(0.9, 1.1, l_max=l_max)
    out = kick_step(rho, U)
    dim = 2 * l_max + 1
    brute = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            for a in range(dim):
                for b in range(dim):
                    brute[i, j] += (U.entries[i, a] * rho.entries[a, b]
                                    * np.conj(U.entries[j, b]))
    assert np.abs(out.entries - brute).max() < 1e-12


def test_kick_step_sparse_and_dense_paths_agree():
    # Large basis with a narrow band exercises the sparse path; the dense
    # product is the reference.
    l_max = 80
    rho = _random_density(l_max, seed=9)
    U = kick_matrix(0.5, HBAR, l_max=l_max)
    assert U.band_width < rho.dim // 3
    out = kick_step(rho, U)
    dense = U.entries @ rho.entries @ U.entries.conj().T
    dense = 0.5 * (dense + dense.conj().T)
    assert np.abs(out.entries - dense).max() < 1e-12


def test_kick_step_dimension_mismatch():
    rho = _random_density(4)
    U = kick_matrix(1.0, HBAR, l_max=5)
    with pytest.raises(ValueError):
        kick_step(rho, U)


def test_kick_step_detects_basis_leak():
    # All probability parked on the edge state spills out of the basis.
    l_max = 30
    dim = 2 * l_max + 1
    rho = np.zeros((dim, dim), dtype=complex)
    rho[-1, -1] = 1.0
    U = kick_matrix(3.5, HBAR, l_max=l_max)
    with pytest.raises(BasisError):
        kick_step(DensityMatrix(entries=rho, l_max=l_max), U)


# ---------------------------------------------------------------------------
# Entropy and energy
# ---------------------------------------------------------------------------

def test_entropy_of_maximally_mixed_state():
    dim = 21
    rho = DensityMatrix(entries=np.eye(dim, dtype=complex) / dim, l_max=10)
    assert abs(von_neumann_entropy(rho) - math.log(dim)) < 1e-12


def test_entropy_two_level_example():
    rho = DensityMatrix(entries=np.diag([0.25, 0.75]).astype(complex), l_max=0)
    # -0.25 ln 0.25 - 0.75 ln 0.75
    assert abs(von_neumann_entropy(rho) - 0.5623351446188083) < 1e-12


def test_entropy_floor_ignores_rounding_dust():
    assert entropy_from_eigenvalues(np.array([1.0, 1e-16, -1e-12])) == 0.0


def test_entropy_positivity_violation():
    rho = DensityMatrix(entries=np.diag([1.001, -1e-3]).astype(complex),
                        l_max=0)
    with pytest.raises(PositivityError):
        von_neumann_entropy(rho)


def test_energy_concentrated_at_zero_momentum():
    dim = 11
    rho = np.zeros((dim, dim), dtype=complex)
    rho[5, 5] = 1.0  # l = 0
    assert quantum_energy(DensityMatrix(entries=rho, l_max=5), HBAR) == 0.0


def test_energy_of_initial_packet_matches_moments():
    psi = default_packet(l_max=30)
    rho = pure_density(psi)
    prob = np.abs(psi.coeffs) ** 2
    expected = ((HBAR * psi.l_values) ** 2 * prob).sum() / 2.0
    assert abs(quantum_energy(rho, HBAR) - expected) < 1e-12


# ---------------------------------------------------------------------------
# Full runs
# ---------------------------------------------------------------------------

def test_isolated_free_rotor_stays_pure():
    cfg = config_from_mapping({"K": 0.0, "eta": 0.0, "kicks": 20})
    series = run_quantum(cfg)
    assert np.abs(series.entropy).max() < 1e-10
    assert np.abs(series.extras["trace"] - 1.0).max() < 1e-10


def test_entropy_monotone_under_bath():
    cfg = config_from_mapping({"kicks": 8})
    series = run_quantum(cfg)
    assert np.all(np.diff(series.entropy) > -1e-6)
    assert series.entropy[-1] > 1.0


def test_run_records_and_label():
    cfg = config_from_mapping({"K": 2.0, "kicks": 5})
    series = run_quantum(cfg)
    assert list(series.kicks) == [0, 1, 2, 3, 4, 5]
    assert series.entropy[0] < 1e-12
    assert "quantum" in series.label and "K=2" in series.label
    assert np.abs(series.extras["trace"] - 1.0).max() < 1e-8
    assert series.extras["min_eig"].min() > -1e-8


def test_run_reflection_covariance():
    cfg = config_from_mapping({"kicks": 6})
    up = run_quantum(cfg, p_center=math.pi * HBAR)
    down = run_quantum(cfg, p_center=-math.pi * HBAR)
    assert np.allclose(up.entropy, down.entropy, atol=1e-9)
    assert np.allclose(up.energy, down.energy, atol=1e-9)


def test_entropy_subsampling_matches_full_run():
    cfg = config_from_mapping({"kicks": 8})
    full = run_quantum(cfg)
    sub = run_quantum(cfg, entropy_every=3)
    assert list(sub.kicks) == [0, 3, 6, 8]
    for n, s in zip(sub.kicks, sub.entropy):
        i = list(full.kicks).index(n)
        assert abs(full.entropy[i] - s) < 1e-12


def test_auto_l_max_scales_with_diffusion():
    small = auto_l_max(3.5, HBAR, 10)
    large = auto_l_max(3.5, HBAR, 40)
    assert large > small
    assert auto_l_max(7.0, HBAR, 10) > small
