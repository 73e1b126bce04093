"""Discrete 3D slab energy: quadrature, gradients, diagnostics, minimization."""
import numpy as np
import pytest

from prestrain_plate import (ConstantMatrixField, Deformation3D,
                             DegenerateDeformationError, EnergyWorkspace,
                             OptimOptions, PlateGrid, PolynomialMatrixField,
                             PrestrainSpec, Rectangle, RecoveryInput,
                             SingularMatrixError, TrigProductField2D,
                             deformation_from_displacement, evaluate_energy,
                             identity_lift, make_density, minimize_energy,
                             recovery_deformation, rotation_misfit_diagnostic,
                             sample_scalar_field, scaled_displacement,
                             warping_field, zero_matrix_field, zero_scalar_field)
from helpers import random_rotation

FLAT_SPEC = PrestrainSpec(S=zero_matrix_field(), B=zero_matrix_field(), gamma=3.0)


def _bent_spec():
    S = ConstantMatrixField([[0.3, 0.1, 0.0], [0.1, -0.2, 0.05], [0.0, 0.05, 0.1]])
    B = ConstantMatrixField([[1.0, 0.4, 0.2], [0.4, -0.6, 0.1], [0.2, 0.1, 0.3]])
    return PrestrainSpec(S=S, B=B, gamma=3.0)


def _incompatible_spec():
    coeffs = np.zeros((3, 3, 3, 3))
    coeffs[0, 2, 0, 0] = 1.0
    coeffs[2, 0, 1, 1] = 1.0
    return PrestrainSpec(S=zero_matrix_field(), B=PolynomialMatrixField(coeffs),
                         gamma=3.0)


def _sine_bump(amplitude=0.1):
    return TrigProductField2D([(amplitude, ("sin", np.pi, 0.0), ("sin", np.pi, 0.0))])


def test_plate_grid_geometry():
    grid = PlateGrid(9, 7, 4)
    assert grid.shape == (9, 7, 4, 3)
    assert np.isclose(np.sum(grid.weights), grid.rect.area, rtol=0, atol=1e-14)
    assert np.isclose(np.sum(grid.t_weights), 1.0, rtol=0, atol=1e-15)
    assert np.max(np.abs(grid.t)) < 0.5
    with pytest.raises(ValueError):
        PlateGrid(2, 7, 4)
    with pytest.raises(ValueError):
        PlateGrid(9, 7, 1)


def test_identity_lift_is_exactly_flat():
    grid = PlateGrid(10, 11, 3)
    h = 0.125
    u = identity_lift(grid, h)
    assert np.all(u.values[..., 0] == grid.x1[:, None, None])
    assert np.all(u.values[..., 2] == h * grid.t[None, None, :])
    for kind in ("svk", "dist2"):
        out = evaluate_energy(u, FLAT_SPEC, make_density(kind), h)
        assert out.total <= 1e-20
        assert out.degenerate_points == 0
        assert out.max_dist2 <= 1e-20
        assert np.isclose(out.min_det, 1.0, rtol=0, atol=1e-12)


def test_deformation_validation():
    grid = PlateGrid(5, 5, 2)
    with pytest.raises(ValueError):
        Deformation3D(np.zeros((5, 5, 2)), grid)
    bad = np.zeros(grid.shape)
    bad[0, 0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        Deformation3D(bad, grid)


def test_workspace_rejects_singular_growth_tensor():
    spec = PrestrainSpec(S=ConstantMatrixField(-8.0 * np.eye(3)),
                         B=zero_matrix_field(), gamma=3.0)
    grid = PlateGrid(5, 5, 2)
    with pytest.raises(SingularMatrixError):
        EnergyWorkspace(spec, make_density("svk"), 0.5, grid)


def _perturbed_identity(grid, h):
    u = identity_lift(grid, h)
    X1 = grid.x1[:, None, None]
    X2 = grid.x2[None, :, None]
    T = grid.t[None, None, :]
    u.values[..., 2] += 0.05 * np.sin(np.pi * X1) * np.sin(np.pi * X2)
    u.values[..., 0] += 0.02 * np.sin(np.pi * X2) * T
    return u


def test_energy_gradient_matches_directional_differences(rng):
    spec = _bent_spec()
    grid = PlateGrid(12, 12, 3)
    h = 0.25
    u = _perturbed_identity(grid, h)
    step = 1e-5
    for kind in ("svk", "dist2"):
        ws = EnergyWorkspace(spec, make_density(kind), h, grid)
        _, g = ws.energy_and_gradient(u.values)
        for _ in range(3):
            d = rng.normal(size=grid.shape)
            d /= np.linalg.norm(d)
            fd = (ws.energy(u.values + step * d)
                  - ws.energy(u.values - step * d)) / (2.0 * step)
            exact = float(np.sum(g * d))
            assert abs(fd - exact) / abs(exact) <= 1e-7


def test_energy_is_frame_indifferent(rng):
    spec = _incompatible_spec()
    h = 0.125
    grid = PlateGrid(16, 16, 3)
    inp = RecoveryInput(v3=_sine_bump(), spec=spec, density=make_density("svk"))
    u = recovery_deformation(inp, h, grid)
    Q = random_rotation(rng)
    c = rng.normal(size=3)
    moved = Deformation3D(u.values @ Q.T + c, grid)
    for kind in ("svk", "dist2"):
        density = make_density(kind)
        e0 = evaluate_energy(u, spec, density, h).total
        e1 = evaluate_energy(moved, spec, density, h).total
        assert e0 > 0.0
        assert abs(e1 - e0) / e0 <= 1e-11


def test_orientation_loss_is_flagged():
    grid = PlateGrid(6, 6, 2)
    h = 0.25
    u = identity_lift(grid, h)
    u.values[..., 2] *= -1.0   # reflects the slab, det grad u = -1
    with pytest.raises(DegenerateDeformationError):
        evaluate_energy(u, FLAT_SPEC, make_density("dist2"), h)
    with pytest.warns(RuntimeWarning):
        out = evaluate_energy(u, FLAT_SPEC, make_density("svk"), h)
    assert out.degenerate_points == grid.n1 * grid.n2 * grid.m
    assert out.min_det < 0.0


def test_minimize_energy_descends():
    spec = _incompatible_spec()
    grid = PlateGrid(12, 12, 3)
    h = 0.125
    density = make_density("svk")
    u0 = deformation_from_displacement(zero_scalar_field(), spec, density, h, grid)
    e0 = evaluate_energy(u0, spec, density, h).total
    res = minimize_energy(u0, spec, density, h, OptimOptions(max_iter=40))
    assert res.breakdown.total <= e0
    assert res.breakdown.total == res.optim.f
    energies = [rec.energy for rec in res.optim.log]
    assert all(b <= a + 1e-18 for a, b in zip(energies, energies[1:]))
    assert res.deformation.values.shape == grid.shape


def test_scaled_displacement_recovers_ansatz_averages():
    # through-thickness averaging leaves exactly the quadratic warping moment:
    # V1 = h^2 d1 / 24,  V3 - v = h^2 d3 / 24
    spec = _bent_spec()
    density = make_density("svk")
    v = _sine_bump()
    inp = RecoveryInput(v3=v, spec=spec, density=density)
    grid = PlateGrid(24, 24, 3)
    X1, X2 = grid.x1[:, None], grid.x2[None, :]
    d = warping_field(inp, X1, X2)
    errs = []
    for h in (0.125, 0.0625):
        u = recovery_deformation(inp, h, grid)
        V = scaled_displacement(u, spec, h)
        # absolute floor: the subtraction of x' leaves O(eps / h^(gamma/2)) noise
        assert np.allclose(V.v1.values, h**2 * d[..., 0] / 24.0, rtol=1e-9, atol=1e-13)
        assert np.allclose(V.v2.values, h**2 * d[..., 1] / 24.0, rtol=1e-9, atol=1e-13)
        dev = V.v3.values - v.value(X1, X2)
        assert np.allclose(dev, h**2 * d[..., 2] / 24.0, rtol=1e-9, atol=1e-13)
        errs.append(np.max(np.abs(dev)))
    # the out-of-plane average converges to v at second order in h
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_rotation_misfit_vanishes_for_rigid_motions(rng):
    grid = PlateGrid(16, 16, 3)
    h = 0.125
    u = identity_lift(grid, h)
    diag = rotation_misfit_diagnostic(u, FLAT_SPEC, h)
    assert diag.misfit <= 1e-25
    assert diag.rotations.shape == (15, 15, 3, 3)
    Q = random_rotation(rng)
    moved = Deformation3D(u.values @ Q.T + rng.normal(size=3), grid)
    diag_moved = rotation_misfit_diagnostic(moved, FLAT_SPEC, h)
    assert diag_moved.misfit <= 1e-25
    assert np.allclose(diag_moved.rotations, Q, atol=1e-12)


def test_rotation_misfit_decays_along_recovery_sequence():
    inp = RecoveryInput(v3=_sine_bump(1.0), spec=FLAT_SPEC, density=make_density("svk"))
    grid = PlateGrid(64, 64, 4)
    misfits = []
    for h in (0.125, 0.0625):
        u = recovery_deformation(inp, h, grid)
        misfits.append(rotation_misfit_diagnostic(u, FLAT_SPEC, h).misfit)
    # the misfit integral scales like h^(gamma + 2) = h^5, so halving h
    # shrinks it about 32x; discretization noise keeps a safety margin
    assert misfits[0] / misfits[1] >= 20.0


def test_displacement_lift_grid_matches_analytic():
    spec = _incompatible_spec()
    density = make_density("svk")
    grid = PlateGrid(64, 64, 3)
    h = 0.125
    v = _sine_bump()
    ua = deformation_from_displacement(v, spec, density, h, grid)
    vg = sample_scalar_field(v, grid.rect, grid.n1, grid.n2)
    ug = deformation_from_displacement(vg, spec, density, h, grid)
    assert np.max(np.abs(ua.values - ug.values)) <= 1e-4


def test_displacement_lift_validation():
    spec = _incompatible_spec()
    density = make_density("svk")
    grid = PlateGrid(12, 12, 3)
    wrong_size = sample_scalar_field(_sine_bump(), grid.rect, 10, 12)
    with pytest.raises(ValueError):
        deformation_from_displacement(wrong_size, spec, density, 0.125, grid)
    wrong_rect = sample_scalar_field(_sine_bump(), Rectangle(0.0, 2.0, 0.0, 1.0), 12, 12)
    with pytest.raises(ValueError):
        deformation_from_displacement(wrong_rect, spec, density, 0.125, grid)
    with pytest.raises(TypeError):
        deformation_from_displacement(np.zeros((12, 12)), spec, density, 0.125, grid)


def test_displacement_lift_equals_recovery_sequence():
    spec = _bent_spec()
    density = make_density("svk")
    grid = PlateGrid(20, 20, 3)
    h = 0.0625
    v = _sine_bump()
    lifted = deformation_from_displacement(v, spec, density, h, grid)
    recovered = recovery_deformation(RecoveryInput(v3=v, spec=spec, density=density),
                                     h, grid)
    assert np.array_equal(lifted.values, recovered.values)
