import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import grid_points, random_field, synthesize
from splf.basis import SpectralField, build_basis
from splf.errors import ResolutionError
from splf.fields import (
    Grid,
    TensorGridField,
    dissipation,
    dissipation_I_p,
    from_grid,
    grad_lp_norm,
    lp_norm,
    rate_of_strain,
    sobolev_norm,
    stress,
    to_grid,
)


def test_zero_field_to_grid():
    b = build_basis(2, 2)
    assert not np.any(to_grid(b.zeros(2), Grid(2, 8)))


def test_single_cos_mode_values():
    b = build_basis(2, 1)
    psi = b.single_mode((1, 0), 1)
    g = Grid(2, 8)
    x, _ = g.coordinates()
    expected = np.sqrt(2) * b.frames[b.index((1, 0), 1) // 2, 0][:, None, None] * np.cos(2 * np.pi * x)
    np.testing.assert_allclose(to_grid(psi, g), expected, atol=1e-15)


def test_resolution_error():
    b = build_basis(2, 4)
    with pytest.raises(ResolutionError):
        to_grid(b.zeros(4), Grid(2, 8))


@settings(max_examples=25, deadline=None)
@given(d=st.sampled_from([2, 3]), level=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
def test_roundtrip_identity(d, level, seed):
    b = build_basis(d, 3)
    v = random_field(b, level, np.random.default_rng(seed))
    g = Grid.for_level(d, level, 2)
    back = from_grid(to_grid(v, g), b, level)
    np.testing.assert_allclose(back.coeffs, v.coeffs, atol=1e-12 * max(1.0, np.abs(v.coeffs).max()))


def test_to_grid_matches_direct_synthesis(rng):
    b = build_basis(3, 2)
    v = random_field(b, 2, rng)
    g = Grid(3, 7)
    u, _ = synthesize(b, v.coeffs, 2, grid_points(3, 7))
    np.testing.assert_allclose(to_grid(v, g), u, atol=1e-12)


def test_from_grid_drops_mean_and_gradients():
    b = build_basis(2, 3)
    g = Grid(2, 16)
    x, y = g.coordinates()
    const = np.stack([np.full_like(x, 3.0), np.full_like(x, -1.0)])
    assert np.abs(from_grid(const, b, 3).coeffs).max() < 1e-14
    # grad of phi = sin(2 pi x) cos(4 pi y)
    phi_x = 2 * np.pi * np.cos(2 * np.pi * x) * np.cos(4 * np.pi * y)
    phi_y = -4 * np.pi * np.sin(2 * np.pi * x) * np.sin(4 * np.pi * y)
    assert np.abs(from_grid(np.stack([phi_x, phi_y]), b, 3).coeffs).max() < 1e-12


@pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.0, 2.3])
def test_single_mode_sobolev(alpha):
    b = build_basis(2, 3)
    v = b.single_mode((2, -1), 1, 3)
    assert sobolev_norm(v, 2, alpha) == pytest.approx((1 + 4 * np.pi**2 * 5) ** (alpha / 2), rel=1e-14)


def test_l2_norm_is_coefficient_norm(rng):
    b = build_basis(2, 3)
    v = random_field(b, 3, rng)
    assert sobolev_norm(v, 2, 0) == pytest.approx(np.linalg.norm(v.coeffs), rel=1e-15)


def test_l4_single_mode_closed_form():
    # integral of 4 cos^4 over the torus is 3/2
    b = build_basis(2, 1)
    v = b.single_mode((1, 0), 1)
    assert sobolev_norm(v, 4, 0, Grid(2, 8)) == pytest.approx(1.5**0.25, rel=1e-14)


@pytest.mark.parametrize("alpha", [0.0, 0.7, 1.5])
def test_parseval_grid_route(alpha, rng):
    b = build_basis(3, 3)
    v = random_field(b, 3, rng)
    g = Grid.for_level(3, 3, 2)
    from splf.fields import bessel_potential

    grid_route = lp_norm(to_grid(bessel_potential(v, alpha), g), 2.0 + 1e-300, g)
    assert grid_route == pytest.approx(sobolev_norm(v, 2, alpha), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(-1, 2), beta=st.floats(0.01, 2))
def test_norm_monotone_in_alpha(seed, alpha, beta):
    b = build_basis(2, 4)
    v = random_field(b, 4, np.random.default_rng(seed))
    assert sobolev_norm(v, 2, alpha) <= sobolev_norm(v, 2, alpha + beta)


def test_strain_trace_free_and_symmetric(rng):
    b = build_basis(3, 3)
    v = random_field(b, 3, rng)
    e = rate_of_strain(v, Grid.for_level(3, 3, 2))
    assert np.abs(e.trace()).max() <= 1e-12 * np.abs(e.upper).max()
    full = e.full()
    np.testing.assert_array_equal(full, np.swapaxes(full, 0, 1))


def test_strain_single_mode_by_hand():
    b = build_basis(2, 2)
    k = b.index((1, 2), 2) // 2
    v = b.single_mode((1, 2), 2, 2)  # sqrt(2) e sin(2 pi z.x)
    g = Grid(2, 12)
    x = np.stack(g.coordinates())
    z = np.array([1.0, 2.0])
    e = b.frames[k, 0]
    ph = 2 * np.pi * np.tensordot(z, x, axes=1)
    # d_l v_i = sqrt(2) 2 pi e_i z_l cos
    grad = np.sqrt(2) * 2 * np.pi * np.einsum("i,l->il", e, z)[:, :, None, None] * np.cos(ph)
    expected = 0.5 * (grad + np.swapaxes(grad, 0, 1))
    np.testing.assert_allclose(rate_of_strain(v, g).full(), expected, atol=1e-12)


def test_stress_examples():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((2, 2, 5))
    e = TensorGridField.from_full(a)
    np.testing.assert_allclose(stress(e, 2, 0.3).upper, 0.6 * e.upper)
    zero = TensorGridField.from_full(np.zeros((2, 2, 3)))
    assert not np.any(stress(zero, 3.5, 1.0).upper)
    # |e|^2 = 1 with p = 4, nu = 1 gives tau = 4 e
    unit = TensorGridField.from_full(np.array([[1.0, 0.0], [0.0, 0.0]])[:, :, None])
    assert unit.frobenius2()[0] == 1.0
    np.testing.assert_allclose(stress(unit, 4, 1.0).upper, 4 * unit.upper)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.floats(2.0, 5.0), d=st.sampled_from([2, 3]))
def test_stress_monotone(seed, p, d):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2, d, d, 1)) * rng.uniform(0.1, 5)
    a, b = a + np.swapaxes(a, 0, 1), b + np.swapaxes(b, 0, 1)
    ta, tb = (stress(TensorGridField.from_full(m), p, 1.0) for m in (a, b))
    diff = TensorGridField(d, ta.upper - tb.upper)
    delta = TensorGridField.from_full(a - b)
    assert diff.contract(delta)[0] >= -1e-12 * np.abs(a - b).max() ** 2


def test_dissipation_examples(rng):
    b = build_basis(2, 4)
    g = Grid.for_level(2, 4)
    assert dissipation(b.zeros(4), 3, 0.1, g) == 0
    v = random_field(b, 4, rng)
    # p = 2: 2 nu ||e||^2 = nu ||grad v||^2 for divergence-free v
    assert dissipation(v, 2, 0.1, g) == pytest.approx(0.1 * v.grad_norm2(), rel=1e-12)
    assert dissipation(v, 3, 0.2, g) == pytest.approx(2 * dissipation(v, 3, 0.1, g), rel=1e-14)
    assert dissipation(v, 2.5, 0.1, g) > 0


def test_dissipation_I_p(rng):
    b = build_basis(2, 4)
    g = Grid.for_level(2, 4)
    assert dissipation_I_p(b.zeros(4), 3, g) == 0
    v = random_field(b, 4, rng)
    # p = 2 and div v = 0: ||grad e||^2 = ||grad grad v||^2 / 2 = ||Lap v||^2 / 2
    assert dissipation_I_p(v, 2, g) == pytest.approx(0.5 * v.laplacian_norm2(), rel=1e-11)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.floats(2.0, 4.0), d=st.sampled_from([2, 3]))
def test_laplacian_bounded_by_I_p(seed, p, d):
    b = build_basis(d, 2)
    v = random_field(b, 2, np.random.default_rng(seed), slope=0.5)
    g = Grid.for_level(d, 2, 2)
    assert v.laplacian_norm2() <= 2 * dissipation_I_p(v, p, g) * (1 + 1e-12)


@pytest.mark.xfail(strict=True, reason="holds only up to a factor 2 under the Frobenius norm")
def test_laplacian_bounded_by_I_p_unit_constant(rng):
    b = build_basis(2, 2)
    v = random_field(b, 2, rng)
    assert v.laplacian_norm2() <= dissipation_I_p(v, 2, Grid.for_level(2, 2, 2))


def test_grad_lp_norm_p2(rng):
    b = build_basis(2, 3)
    v = random_field(b, 3, rng)
    g = Grid.for_level(2, 3, 2)
    assert grad_lp_norm(v, 2, g) ** 2 == pytest.approx(v.grad_norm2(), rel=1e-12)


def test_from_grid_shape_check():
    b = build_basis(2, 2)
    with pytest.raises(ValueError):
        from_grid(np.zeros((3, 8, 8)), b, 2)
    with pytest.raises(ResolutionError):
        from_grid(np.zeros((2, 4, 4)), b, 2)
    assert isinstance(from_grid(np.zeros((2, 8, 8)), b, 2), SpectralField)
