"""Matrix algebra: symmetric parts, polar factors, distance to the rotation group."""
import numpy as np
import pytest

from helpers import random_rotation, random_rotations, random_spd_factors, svd_polar_rotation
from prestrain_plate import (PolarFactors, SingularMatrixError, dist2_SO3, frobenius2,
                             minor2, nearest_rotation, polar_decompose, singular_values,
                             skew, star, sym)


def test_sym_skew_decomposition(rng):
    F = rng.normal(size=(4, 3, 3))
    assert np.allclose(sym(F) + skew(F), F)
    assert np.allclose(sym(F), np.swapaxes(sym(F), -1, -2))
    assert np.allclose(skew(F), -np.swapaxes(skew(F), -1, -2))


def test_star_minor2_round_trip(rng):
    G = rng.normal(size=(5, 2, 2))
    S = star(G)
    assert S.shape == (5, 3, 3)
    assert np.all(S[..., 2, :] == 0.0)
    assert np.all(S[..., :, 2] == 0.0)
    assert np.allclose(minor2(S), G)
    with pytest.raises(ValueError):
        star(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        minor2(np.zeros((2, 2)))


def test_frobenius2(rng):
    F = rng.normal(size=(3, 3))
    assert np.isclose(frobenius2(F), np.sum(F * F))


def test_singular_values_match_svd(rng):
    F = rng.normal(size=(6, 3, 3))
    s = singular_values(F)
    ref = np.linalg.svd(F, compute_uv=False)[..., ::-1]   # svd sorts descending
    assert np.all(np.diff(s, axis=-1) >= -1e-12)
    assert np.allclose(s, ref, atol=1e-10)


def test_polar_decompose_recovers_known_factors(rng):
    for _ in range(50):
        F, Q, U = random_spd_factors(rng)
        pf = polar_decompose(F)
        assert isinstance(pf, PolarFactors)
        assert np.allclose(pf.rotation, Q, atol=1e-9)
        assert np.allclose(pf.stretch, U, atol=1e-9)
        assert np.allclose(pf.rotation @ pf.stretch, F, atol=1e-10)
        assert np.allclose(pf.rotation.T @ pf.rotation, np.eye(3), atol=1e-10)
        assert np.isclose(np.linalg.det(pf.rotation), 1.0)


def test_polar_matches_svd_reference(rng):
    for _ in range(50):
        F, _, _ = random_spd_factors(rng)
        assert np.allclose(nearest_rotation(F), svd_polar_rotation(F), atol=1e-9)


def test_polar_broadcasts(rng):
    F = np.stack([random_spd_factors(rng)[0] for _ in range(12)]).reshape(3, 4, 3, 3)
    pf = polar_decompose(F)
    assert pf.rotation.shape == (3, 4, 3, 3)
    assert np.allclose(pf.rotation @ pf.stretch, F, atol=1e-10)


def test_polar_rejects_bad_input():
    with pytest.raises(SingularMatrixError):
        polar_decompose(np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(SingularMatrixError):
        polar_decompose(np.diag([1.0, 1.0, 0.0]))
    with pytest.raises(ValueError):
        polar_decompose(np.eye(2))


def test_nearest_rotation_fixes_rotations(rng):
    Q = random_rotation(rng)
    assert np.allclose(nearest_rotation(Q), Q, atol=1e-12)


def test_dist2_zero_on_rotations(rng):
    for _ in range(20):
        assert dist2_SO3(random_rotation(rng)) < 1e-28


def test_dist2_agrees_with_polar_distance(rng):
    for _ in range(20):
        F, _, _ = random_spd_factors(rng)
        R = nearest_rotation(F)
        assert np.isclose(dist2_SO3(F), frobenius2(F - R), atol=1e-10)


def test_dist2_monte_carlo_oracle(rng):
    # dist2 lower-bounds |F - Q|^2 over sampled rotations and nearly attains it
    Qs = random_rotations(rng, 200_000)
    for _ in range(10):
        F, _, _ = random_spd_factors(rng, 0.4, 2.5)
        d2 = float(dist2_SO3(F))
        traces = np.einsum("ij,qij->q", F, Qs)
        mc = float(frobenius2(F)) + 3.0 - 2.0 * float(traces.max())
        assert d2 <= mc + 1e-9
        assert mc - d2 <= 0.05 * (1.0 + d2)


def test_dist2_reflection_branch(rng):
    # nearest rotation to diag(1, 1, -1) sits at squared distance 4
    assert np.isclose(dist2_SO3(np.diag([1.0, 1.0, -1.0])), 4.0)
    F = np.diag([1.2, 0.9, -0.8])
    assert np.isclose(dist2_SO3(F), (0.8 + 1.0) ** 2 + 0.1**2 + 0.2**2)
    Qs = random_rotations(rng, 200_000)
    traces = np.einsum("ij,qij->q", F, Qs)
    mc = float(frobenius2(F)) + 3.0 - 2.0 * float(traces.max())
    d2 = float(dist2_SO3(F))
    assert d2 <= mc + 1e-9
    assert mc - d2 <= 0.05 * (1.0 + d2)
    with pytest.raises(ValueError):
        dist2_SO3(np.zeros((2, 2)))
