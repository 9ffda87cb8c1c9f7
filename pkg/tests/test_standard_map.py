"""Standard map, tangent-map Lyapunov exponents, momentum diffusion."""

import math

import numpy as np
import pytest

from rotorbath import MapState, diffusion_coefficient, lyapunov, step
from rotorbath.standard_map import tangent_matrix


def test_fixed_point_at_origin():
    s = step(MapState(q=0.0, p=0.0), K=3.5)
    assert s.q == 0.0 and s.p == 0.0


def test_half_turn_no_kick():
    # q advances to pi where sin vanishes, so p is untouched.
    s = step(MapState(q=0.0, p=math.pi), K=3.5)
    assert math.isclose(s.q, math.pi)
    assert math.isclose(s.p, math.pi, rel_tol=0, abs_tol=1e-12)


def test_single_step_direct_evaluation():
    s = step(MapState(q=0.0, p=1.0), K=2.0)
    assert math.isclose(s.q, 1.0)
    assert math.isclose(s.p, 1.0 + 2.0 * math.sin(1.0), rel_tol=1e-15)


def test_angle_wrapped():
    s = step(MapState(q=5.0, p=4.0), K=1.0)
    assert 0.0 <= s.q < 2 * math.pi


def test_area_preservation_everywhere():
    rng = np.random.default_rng(11)
    for _ in range(200):
        q = rng.uniform(0, 2 * np.pi)
        p = rng.uniform(-20, 20)
        K = rng.uniform(0, 25)
        nxt = step(MapState(q, p), K)
        J = tangent_matrix(nxt.q, K)
        assert abs(np.linalg.det(J) - 1.0) < 1e-12


def test_tangent_matrix_form():
    J = tangent_matrix(0.7, 3.0)
    c = 3.0 * math.cos(0.7)
    assert np.allclose(J, [[1.0, 1.0], [c, 1.0 + c]])


@pytest.mark.parametrize("K", [10.0, 20.0])
def test_lyapunov_matches_large_K_asymptote(K):
    lam = lyapunov(K, n_steps=30_000, seed=3)
    target = math.log(K / 2)
    assert abs(lam - target) / target < 0.05


def test_lyapunov_positive_in_chaotic_regime():
    assert lyapunov(3.5, n_steps=20_000, seed=5) > 0.0


def test_lyapunov_relative_error_shrinks_with_K():
    errors = []
    for K in (8.0, 10.0, 15.0, 20.0):
        lam = lyapunov(K, n_steps=30_000, seed=9)
        target = math.log(K / 2)
        errors.append(abs(lam - target) / target)
    for prev, nxt in zip(errors, errors[1:]):
        assert nxt <= prev or nxt < 0.05
    assert max(errors) < 0.05


def test_lyapunov_deterministic_for_fixed_seed():
    a = lyapunov(6.0, n_steps=5_000, seed=42)
    b = lyapunov(6.0, n_steps=5_000, seed=42)
    assert a == b


def test_diffusion_below_critical_K_is_bounded():
    D = diffusion_coefficient(0.5, ensemble=1500, n_steps=200, seed=1)
    assert abs(D) < 0.05


def test_diffusion_K10_matches_ensemble_oracle():
    # Correlation corrections suppress D(10) well below the quasilinear
    # K^2/2 = 50; the ensemble value sits near 32.5 (frozen from a
    # 20000-orbit, 400-step reference run).
    D = diffusion_coefficient(10.0, ensemble=3000, n_steps=300, seed=7)
    assert 0.85 * 32.5 < D < 1.15 * 32.5


def test_diffusion_K20_matches_ensemble_oracle():
    # At K = 20 the same corrections enhance D above quasilinear: ~274.
    D = diffusion_coefficient(20.0, ensemble=3000, n_steps=300, seed=7)
    assert 0.85 * 274.0 < D < 1.15 * 274.0


def test_diffusion_deterministic_for_fixed_seed():
    a = diffusion_coefficient(8.0, ensemble=500, n_steps=100, seed=2)
    b = diffusion_coefficient(8.0, ensemble=500, n_steps=100, seed=2)
    assert a == b
