import numpy as np
import pytest

from splf.basis import build_basis
from splf.errors import ConfigurationError
from splf.noise import (
    CovarianceSpec,
    InitialCondition,
    NoisePath,
    derive_seed,
    sample_increment,
    standard_normals,
    taylor_green,
    trace,
)

N_DRAWS = 10_000


@pytest.fixture(scope="module")
def draws():
    """10^4 level-2 increments in d=2 with default covariance, dt = 0.01."""
    b = build_basis(2, 2)
    path = NoisePath(5, CovarianceSpec(2, scale=3.0, decay=1.5))
    inc = np.array([sample_increment(path, b, k, 0.01, 2).coeffs for k in range(N_DRAWS)])
    return b, path, inc


def test_trace_hand_sum():
    # decay 0 makes every eigenvalue equal the scale
    b = build_basis(2, 1)
    assert trace(CovarianceSpec(2, scale=0.5, decay=0.0), b, 1) == pytest.approx(4.0, abs=1e-15)


def test_trace_weights():
    b = build_basis(2, 4)
    spec = CovarianceSpec(2)
    gam = spec.eigenvalues(b, 4)
    w = b.wavenumber2[: gam.size]
    for alpha in (0, 1, 2):
        assert trace(spec, b, 4, alpha) == pytest.approx(float(np.sum(gam * w**alpha)), rel=1e-14)


def test_trace_monotone_in_n():
    b = build_basis(3, 4)
    tr = [trace(CovarianceSpec(3), b, n) for n in range(1, 5)]
    assert all(x <= y for x, y in zip(tr, tr[1:]))


def test_eigenvalues_radial_and_nonnegative():
    b = build_basis(2, 5)
    gam = CovarianceSpec(2, scale=2.0).eigenvalues(b, 5)
    assert np.all(gam >= 0)
    per = gam.reshape(-1, 2)
    np.testing.assert_array_equal(per[:, 0], per[:, 1])
    # (1,2) and (2,-1) share |z|^2 = 5
    i, j = b.index((1, 2), 1), b.index((2, -1), 1)
    assert gam[i] == gam[j]


def test_default_decay_and_trace_class_flags():
    spec = CovarianceSpec(2)
    assert spec.decay == 3.5
    assert spec.trace_finite(2)
    weak = CovarianceSpec(3, decay=1.5)
    assert not weak.trace_finite(0)
    with pytest.raises(ConfigurationError):
        weak.require_trace_class(0)
    assert CovarianceSpec(3, decay=2.6).trace_finite(1)
    assert not CovarianceSpec(3, decay=2.5).trace_finite(1)


def test_zero_covariance_gives_zero_field():
    b = build_basis(2, 3)
    dW = sample_increment(NoisePath(1, CovarianceSpec(2, scale=0.0)), b, 0, 0.1, 3)
    assert dW.level == 3
    assert not np.any(dW.coeffs)


def test_rejects_bad_dt():
    b = build_basis(2, 1)
    with pytest.raises(ValueError):
        sample_increment(NoisePath(1, CovarianceSpec(2)), b, 0, 0.0, 1)


def test_mean_square_matches_trace(draws):
    b, path, inc = draws
    x = np.sum(inc**2, axis=1) / 0.01
    tr = trace(path.covariance, b, 2)
    assert abs(x.mean() - tr) <= 3 * x.std(ddof=1) / np.sqrt(x.size)


def test_per_mode_variance(draws):
    b, path, inc = draws
    target = path.covariance.eigenvalues(b, 2) * 0.01
    var = np.mean(inc**2, axis=0)
    # var of a chi^2_1 sample mean is 2 sigma^4 / N
    se = target * np.sqrt(2.0 / N_DRAWS)
    assert np.all(np.abs(var - target) <= 5 * se)


def test_cross_mode_correlation(draws):
    _, _, inc = draws
    corr = np.corrcoef(inc.T)
    off = corr[~np.eye(corr.shape[0], dtype=bool)]
    assert np.abs(off).max() <= 4 / np.sqrt(N_DRAWS)


def test_restriction_across_levels():
    b = build_basis(3, 4)
    path = NoisePath(123, CovarianceSpec(3))
    for k in (0, 1, 77):
        hi = sample_increment(path, b, k, 1e-3, 4).coeffs
        lo = sample_increment(path, b, k, 1e-3, 2).coeffs
        np.testing.assert_array_equal(lo, hi[: b.dim(2)])


def test_determinism_and_step_independence():
    b = build_basis(2, 3)
    path = NoisePath(9, CovarianceSpec(2))
    a = sample_increment(path, b, 4, 1e-3, 3).coeffs
    np.testing.assert_array_equal(a, sample_increment(NoisePath(9, CovarianceSpec(2)), b, 4, 1e-3, 3).coeffs)
    assert not np.array_equal(a, sample_increment(path, b, 5, 1e-3, 3).coeffs)
    assert not np.array_equal(a, sample_increment(NoisePath(10, CovarianceSpec(2)), b, 4, 1e-3, 3).coeffs)


def test_standard_normals_prefix():
    np.testing.assert_array_equal(standard_normals(1, 2, 5), standard_normals(1, 2, 50)[:5])


def test_derive_seed():
    assert derive_seed(0, 1) == derive_seed(0, 1)
    assert len({derive_seed(0, i) for i in range(100)}) == 100


def test_taylor_green_2d():
    b = build_basis(2, 4)
    v = taylor_green(b, 4, 0.3)
    assert v.norm2() == pytest.approx(0.5 * 0.3**2, rel=1e-12)
    nz = np.flatnonzero(np.abs(v.coeffs) > 1e-14)
    assert set(tuple(b.z[i // 2]) for i in nz) == {(1, 1), (1, -1)}


def test_taylor_green_3d_is_admissible():
    b = build_basis(3, 2)
    v = taylor_green(b, 2, 0.1)
    assert v.level == 2
    assert v.norm2() > 0


def test_initial_conditions():
    b = build_basis(2, 6)
    assert not np.any(InitialCondition("zero").sample(b, 6).coeffs)
    g1 = InitialCondition("gaussian", 1.0, 2.0).sample(b, 6, seed=3)
    g2 = InitialCondition("gaussian", 1.0, 2.0).sample(b, 4, seed=3)
    np.testing.assert_array_equal(g2.coeffs, g1.coeffs[: b.dim(4)])
    with pytest.raises(ConfigurationError):
        InitialCondition("vortex")
