import math

import numpy as np
import pytest

from linboltz import bracket, build_grid, double_bracket, maxwellian, sphere_quadrature
from linboltz.reference import naive_double_bracket


def test_maxwellian_at_origin():
    assert maxwellian(np.zeros(3)) == pytest.approx((2 * np.pi) ** -1.5, rel=1e-15)


def test_maxwellian_rotational_symmetry():
    assert maxwellian(np.array([1.0, 0, 0])) == maxwellian(np.array([0, 1.0, 0]))


def test_maxwellian_tail_ratio():
    v = np.array([6.0, 0.0, 0.0])
    assert maxwellian(v) / maxwellian(np.zeros(3)) == pytest.approx(np.exp(-18.0), rel=1e-12)


def test_build_grid_rejects_bad_inputs():
    with pytest.raises(ValueError):
        build_grid(3, 6.0)
    with pytest.raises(ValueError):
        build_grid(7, 6.0)
    with pytest.raises(ValueError):
        build_grid(16, -1.0)


def test_grid_symmetry_and_positive_weights():
    grid = build_grid(8, 5.0, renormalize=False)
    # lattice closed under v -> -v: sorting both sets must coincide exactly
    neg = -grid.nodes
    a = np.sort(grid.nodes.view([("x", float), ("y", float), ("z", float)]).ravel())
    b = np.sort(neg.view([("x", float), ("y", float), ("z", float)]).ravel())
    assert np.array_equal(a, b)
    assert np.all(grid.maxwellian_weights > 0)


def test_weight_sum_renormalized_exact():
    grid = build_grid(16, 6.0, renormalize=True)
    assert grid.maxwellian_weights.sum() == pytest.approx(1.0, abs=1e-15)


def test_weight_sum_unrenormalized_tail_bound():
    # Oracle: the 3D midpoint sum factorizes into the cube of the 1D sum, and
    # the deficit is bounded by the erf tail mass outside the box.
    grid = build_grid(16, 6.0, renormalize=False)
    total = grid.maxwellian_weights.sum()
    coords = grid.axis_coords
    s1 = np.sum(np.exp(-0.5 * coords**2) / np.sqrt(2 * np.pi)) * grid.dv
    assert total == pytest.approx(s1**3, rel=1e-13)
    tail_1d = math.erfc(grid.v_max / math.sqrt(2.0))  # two-sided Gaussian tail
    assert 1.0 - 1e-6 <= total <= 1.0
    assert (1.0 - total) <= 4.0 * tail_1d + 1e-12


def test_bracket_constant_and_odd_moment():
    grid = build_grid(8, 5.0)
    assert bracket(grid, lambda v: np.ones(len(v))) == pytest.approx(1.0, abs=1e-15)
    assert bracket(grid, grid.nodes[:, 0]) == pytest.approx(0.0, abs=1e-15)
    assert bracket(grid, grid.nodes[:, 0] * grid.nodes[:, 1]) == pytest.approx(0.0, abs=1e-15)


def test_bracket_mixed_second_moments_vanish_every_grid():
    # sign-pairing on the lattice cancels <v_i v_j> for i != j exactly,
    # independent of resolution or truncation
    for n, vmax in ((4, 3.0), (6, 5.0), (10, 7.0)):
        grid = build_grid(n, vmax)
        for i in range(3):
            assert bracket(grid, grid.nodes[:, i]) == pytest.approx(0.0, abs=1e-16)
            for j in range(i + 1, 3):
                mixed = bracket(grid, grid.nodes[:, i] * grid.nodes[:, j])
                assert mixed == pytest.approx(0.0, abs=1e-16)


def test_bracket_second_moment_matches_gauss_hermite():
    # Oracle: probabilists' Gauss-Hermite quadrature for the 1D second moment.
    nodes, weights = np.polynomial.hermite_e.hermegauss(40)
    onedim = float(np.sum(weights * nodes**2) / np.sum(weights))
    expected = 3.0 * onedim
    grid = build_grid(16, 6.0)
    value = bracket(grid, np.sum(grid.nodes**2, axis=1))
    assert expected == pytest.approx(3.0, rel=1e-12)
    assert value == pytest.approx(expected, abs=1e-6)


def test_bracket_rejects_length_mismatch():
    grid = build_grid(8, 5.0)
    with pytest.raises(ValueError):
        bracket(grid, np.ones(7))


@pytest.mark.parametrize("n_nodes", [6, 12, 20, 32])
def test_sphere_quadrature_structure(n_nodes):
    sph = sphere_quadrature(n_nodes)
    assert np.allclose(np.linalg.norm(sph.nodes, axis=1), 1.0, atol=1e-15)
    assert sph.weights.sum() == pytest.approx(1.0, abs=1e-15)
    # antipodal pairing: node k + K/2 is exactly -node k
    half = n_nodes // 2
    assert np.allclose(sph.nodes[half:], -sph.nodes[:half], atol=0)


def test_sphere_quadrature_low_moments():
    sph = sphere_quadrature(32)
    assert np.allclose(sph.weights @ sph.nodes, 0.0, atol=1e-15)
    second = np.einsum("k,ki,kj->ij", sph.weights, sph.nodes, sph.nodes)
    assert np.allclose(second, np.eye(3) / 3.0, atol=1e-14)
    fourth = np.einsum("k,ki->", sph.weights, sph.nodes**4)
    assert fourth == pytest.approx(3.0 / 5.0, abs=1e-14)  # sum_i int s_i^4 = 3/5


def test_sphere_quadrature_rejects_unknown_size():
    with pytest.raises(ValueError):
        sphere_quadrature(14)


def test_double_bracket_unit_measure(grid6, sphere12, kernel_unit):
    value = double_bracket(grid6, sphere12, kernel_unit,
                           lambda v, vs, s: np.ones(vs.shape[:2]))
    assert value == pytest.approx(1.0, abs=1e-13)


def test_double_bracket_collision_invariant(grid6, sphere12, kernel_unit):
    # phi + phi* - phi' - phi'* vanishes pointwise for phi = v2 at the exact
    # post-collision points, so the integral is zero to roundoff.
    def integrand(v, vs, s):
        mid = 0.5 * (v + vs)
        radius = 0.5 * np.linalg.norm(v - vs, axis=-1, keepdims=True)
        vp = mid + radius * s
        vq = mid - radius * s
        return v[..., 1] + vs[..., 1] - vp[..., 1] - vq[..., 1]

    value = double_bracket(grid6, sphere12, kernel_unit, integrand)
    assert abs(value) <= 1e-12


def test_double_bracket_energy_invariant(grid6, sphere12, kernel_unit):
    def integrand(v, vs, s):
        mid = 0.5 * (v + vs)
        radius = 0.5 * np.linalg.norm(v - vs, axis=-1, keepdims=True)
        vp = mid + radius * s
        vq = mid - radius * s
        return (np.sum(v**2, -1) + np.sum(vs**2, -1)
                - np.sum(vp**2, -1) - np.sum(vq**2, -1))

    assert abs(double_bracket(grid6, sphere12, kernel_unit, integrand)) <= 1e-12


def test_double_bracket_relative_speed_moment():
    # E|v - v*|^2 = 2 E|v|^2 = 6 for independent standard Gaussians.
    grid = build_grid(16, 6.0)
    sph = sphere_quadrature(12)
    from linboltz import maxwell_molecule
    value = double_bracket(grid, sph, maxwell_molecule(1.0),
                           lambda v, vs, s: np.sum((v - vs) ** 2, axis=-1))
    assert value == pytest.approx(6.0, abs=1e-5)


def test_double_bracket_matches_naive(grid6, sphere12, kernel_unit):
    def phi(v, vs, s):
        return np.sum(v * vs, axis=-1) + np.sum(s * vs, axis=-1) ** 2

    fast = double_bracket(grid6, sphere12, kernel_unit, phi)
    slow = naive_double_bracket(grid6, sphere12, kernel_unit, phi)
    assert fast == pytest.approx(slow, rel=1e-12)
