"""Grid transforms, Sobolev norms and the strain/stress tensors.

Grid values use axis order ``(component, x_0, ..., x_{d-1})`` with
``x_i = k / m_pts``.  Transforms go through ``scipy.fft`` real FFTs with
``norm="forward"`` so that grid values are plain Fourier sums.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .basis import TWO_PI, SpectralField
from .errors import ResolutionError

DEFAULT_DEALIAS_FACTOR = 4


@dataclass(frozen=True)
class Grid:
    d: int
    m_pts: int

    @classmethod
    def for_level(cls, d, level, factor=DEFAULT_DEALIAS_FACTOR):
        """Smallest FFT-friendly grid with at least ``factor*(2*level+1)`` points per axis."""
        return cls(d, sfft.next_fast_len(int(np.ceil(factor * (2 * level + 1))), real=True))

    @property
    def shape(self):
        return (self.m_pts,) * self.d

    @property
    def spectral_shape(self):
        return (self.m_pts,) * (self.d - 1) + (self.m_pts // 2 + 1,)

    @property
    def axes(self):
        return tuple(range(-self.d, 0))

    @property
    def cell_volume(self):
        return float(self.m_pts) ** (-self.d)

    def coordinates(self):
        x = np.arange(self.m_pts) / self.m_pts
        return np.meshgrid(*([x] * self.d), indexing="ij")

    def require(self, level, order=2):
        """Check that products of ``order`` level-``level`` factors are resolved exactly."""
        need = order * level + 1
        if self.m_pts < need:
            raise ResolutionError(
                f"grid of {self.m_pts} points per axis cannot resolve degree-{order} "
                f"products at level {level} (need >= {need})"
            )

    def mean(self, values):
        """Rectangle-rule integral over the unit torus (fixed-order summation)."""
        return float(np.sum(values, dtype=float) * self.cell_volume)

    @cached_property
    def _layout_cache(self):
        return {}

    def layout(self, basis, level):
        """Flat indices of canonical wave vectors in the rfft array layout."""
        key = (id(basis), basis.d, basis.n_max, level)
        hit = self._layout_cache.get(key)
        if hit is not None:
            return hit
        nz = basis.n_wavevectors(level)
        z = basis.z[:nz]
        m = self.m_pts
        flip = z[:, -1] < 0
        zp = np.where(flip[:, None], -z, z)
        primary = np.ravel_multi_index(tuple((zp % m).T), self.spectral_shape)
        on_plane = np.flatnonzero(z[:, -1] == 0)
        mirror = np.ravel_multi_index(tuple(((-z[on_plane]) % m).T), self.spectral_shape)
        hit = (primary, flip, on_plane, mirror)
        self._layout_cache[key] = hit
        return hit


def _scatter(grid, basis, level, amps):
    """Place canonical amplitudes (shape ``(C, Nz)``) into rfft arrays ``(C, *spectral_shape)``."""
    primary, flip, on_plane, mirror = grid.layout(basis, level)
    ncomp = amps.shape[0]
    spec = np.zeros((ncomp, int(np.prod(grid.spectral_shape))), dtype=complex)
    spec[:, primary] = np.where(flip, np.conj(amps), amps)
    spec[:, mirror] = np.conj(amps[:, on_plane])
    return spec.reshape((ncomp,) + grid.spectral_shape)


def _gather(grid, basis, level, spec):
    primary, flip, _, _ = grid.layout(basis, level)
    flat = spec.reshape(spec.shape[0], -1)[:, primary]
    return np.where(flip, np.conj(flat), flat)


def _synthesize(grid, basis, level, amps):
    """Grid values of the real fields whose canonical amplitudes are ``amps`` (``(C, Nz)``)."""
    spec = _scatter(grid, basis, level, amps)
    return sfft.irfftn(spec, s=grid.shape, axes=grid.axes, norm="forward")


def _analyze(grid, basis, level, values):
    """Canonical Fourier amplitudes (``(C, Nz)``) of real grid data ``(C, *shape)``."""
    spec = sfft.rfftn(values, axes=grid.axes, norm="forward")
    return _gather(grid, basis, level, spec)


def _check_grid(v, g, order=2):
    if g.d != v.d:
        raise ResolutionError(f"grid dimension {g.d} does not match field dimension {v.d}")
    g.require(v.level, order)


def to_grid(v, g):
    """Pointwise values of ``v`` on ``g``, shape ``(d, *g.shape)``."""
    _check_grid(v, g, order=2)
    amps = v.amplitudes().T
    return _synthesize(g, v.basis, v.level, amps)


def from_grid(values, basis, level):
    """Forward transform, Leray projection and truncation to ``level``.

    The mean and every gradient component are dropped; for band-limited
    divergence-free input this inverts :func:`to_grid`.
    """
    values = np.asarray(values, dtype=float)
    d = basis.d
    if values.ndim != d + 1 or values.shape[0] != d or len(set(values.shape[1:])) != 1:
        raise ValueError(f"expected grid values of shape (d, m, ..., m), got {values.shape}")
    g = Grid(d, values.shape[1])
    g.require(level, 2)
    amps = _analyze(g, basis, level, values).T
    return SpectralField(basis, basis.coefficients(amps, level), level)


def velocity_gradient(v, g):
    """Grid values of ``u`` and ``grad u`` with ``G[i, l] = d_l u_i``."""
    _check_grid(v, g, order=2)
    d = v.d
    amps = v.amplitudes()  # (Nz, d)
    z = v.basis.z[: amps.shape[0]]
    stack = np.empty((d + d * d, amps.shape[0]), dtype=complex)
    stack[:d] = amps.T
    stack[d:] = (TWO_PI * 1j * amps[:, :, None] * z[:, None, :]).reshape(amps.shape[0], -1).T
    vals = _synthesize(g, v.basis, v.level, stack)
    return vals[:d], vals[d:].reshape((d, d) + g.shape)


class TensorGridField:
    """Symmetric d x d tensor field on a grid, upper triangle stored."""

    def __init__(self, d, upper):
        self.d = d
        self.upper = upper  # (d(d+1)/2, *grid)
        self._iu = np.triu_indices(d)

    @classmethod
    def from_full(cls, full):
        d = full.shape[0]
        iu = np.triu_indices(d)
        return cls(d, 0.5 * (full[iu] + full[(iu[1], iu[0])]))

    def full(self):
        d = self.d
        out = np.empty((d, d) + self.upper.shape[1:])
        for k, (i, j) in enumerate(zip(*self._iu)):
            out[i, j] = self.upper[k]
            out[j, i] = self.upper[k]
        return out

    @property
    def _weights(self):
        # off-diagonal entries appear twice in the full contraction
        w = np.where(self._iu[0] == self._iu[1], 1.0, 2.0)
        return w.reshape((-1,) + (1,) * (self.upper.ndim - 1))

    def frobenius2(self):
        """Pointwise sum_{ij} e_ij^2 (full Frobenius norm, not halved)."""
        return np.sum(self._weights * self.upper * self.upper, axis=0)

    def contract(self, other):
        """Pointwise sum_{ij} a_ij b_ij."""
        return np.sum(self._weights * self.upper * other.upper, axis=0)

    def trace(self):
        return sum(self.upper[k] for k, (i, j) in enumerate(zip(*self._iu)) if i == j)

    def scaled(self, factor):
        return TensorGridField(self.d, self.upper * factor)


def rate_of_strain(v, g):
    _, grad = velocity_gradient(v, g)
    return TensorGridField.from_full(grad)


def stress_factor(e2, p, nu):
    """Pointwise 2 nu (1 + |e|^2)^((p-2)/2)."""
    if p == 2:
        return np.full_like(e2, 2.0 * nu)
    return 2.0 * nu * (1.0 + e2) ** (0.5 * (p - 2.0))


def stress(e, p, nu):
    """Extra stress 2 nu (1 + |e|^2)^((p-2)/2) e."""
    return e.scaled(stress_factor(e.frobenius2(), p, nu))


def dissipation(v, p, nu, g):
    """Grid quadrature of <e(v), tau(v)>."""
    e = rate_of_strain(v, g)
    e2 = e.frobenius2()
    return g.mean(stress_factor(e2, p, nu) * e2)


def dissipation_I_p(v, p, g):
    """Grid quadrature of (1 + |e|^2)^((p-2)/2) |grad e|^2."""
    _check_grid(v, g, order=2)
    d = v.d
    amps = v.amplitudes()
    nz = amps.shape[0]
    z = v.basis.z[:nz].astype(float)
    # amplitudes of e_ij = pi i (z_i a_j + z_j a_i), then of d_l e_ij
    e_amp = np.pi * 1j * (z[:, :, None] * amps[:, None, :] + z[:, None, :] * amps[:, :, None])
    de_amp = TWO_PI * 1j * e_amp[:, :, :, None] * z[:, None, None, :]
    stack = np.concatenate([e_amp.reshape(nz, -1), de_amp.reshape(nz, -1)], axis=1).T
    vals = _synthesize(g, v.basis, v.level, stack)
    e = vals[: d * d]
    de = vals[d * d :]
    e2 = np.sum(e * e, axis=0)
    de2 = np.sum(de * de, axis=0)
    if p == 2:
        return g.mean(de2)
    return g.mean((1.0 + e2) ** (0.5 * (p - 2.0)) * de2)


def bessel_potential(v, alpha):
    """(1 - Laplacian)^(alpha/2) v as a field."""
    return SpectralField(v.basis, v.basis.bessel(alpha, v.level) * v.coeffs, v.level)


def lp_norm(values, p, g):
    """(integral |u|^p)^(1/p) for vector grid data of shape ``(d, *shape)``."""
    mag2 = np.sum(values * values, axis=0)
    if p == 2:
        return np.sqrt(g.mean(mag2))
    return g.mean(mag2 ** (0.5 * p)) ** (1.0 / p)


def sobolev_norm(v, p, alpha, g=None):
    """||(1 - Laplacian)^(alpha/2) v||_{L_p}; grid-free when ``p == 2``."""
    if p < 1:
        raise ValueError(f"exponent p must be >= 1, got {p}")
    w = bessel_potential(v, alpha)
    if p == 2:
        return float(np.linalg.norm(w.coeffs))
    if g is None:
        g = Grid.for_level(v.d, v.level)
    return lp_norm(to_grid(w, g), p, g)


def grad_lp_norm(v, q, g):
    """||grad v||_{L_q} with |grad v|^2 = sum_{il} (d_l v_i)^2."""
    _, grad = velocity_gradient(v, g)
    return lp_norm(grad.reshape((-1,) + g.shape), q, g)


def divergence(v, g):
    _, grad = velocity_gradient(v, g)
    return sum(grad[i, i] for i in range(v.d))
