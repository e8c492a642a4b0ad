"""Divergence-free real Fourier basis on the unit torus.

A field is stored as real coefficients against

    psi_{z,j}(x) = sqrt(2) e_{z,j} cos(2 pi z.x),          j = 1..d-1
    psi_{z,j}(x) = sqrt(2) e_{z,j-d+1} sin(2 pi z.x),      j = d..2d-2

where ``z`` runs over a half lattice (first nonzero component positive) and
``e_{z,1..d-1}`` is an orthonormal frame of the plane orthogonal to ``z``.
Modes are ordered by ``(|z|_inf, z, j)`` so the coefficients of the level-n
subspace are always a prefix of those of any larger level.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError

TWO_PI = 2.0 * np.pi
SUPPORTED_DIMENSIONS = (2, 3)


@dataclass(frozen=True)
class Mode:
    z: tuple
    j: int
    frame: np.ndarray

    @property
    def kind(self):
        d = len(self.z)
        return "cos" if self.j <= d - 1 else "sin"


def _is_canonical(z):
    for c in z:
        if c != 0:
            return c > 0
    return False


def _frame(z):
    z = np.asarray(z, dtype=float)
    d = z.size
    zhat = z / np.linalg.norm(z)
    if d == 2:
        return np.array([[-zhat[1], zhat[0]]])
    # canonical axis least aligned with z; argmin picks the smallest index on ties
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(z)))] = 1.0
    e1 = axis - np.dot(axis, zhat) * zhat
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(zhat, e1)
    return np.array([e1, e2])


class BasisTable:
    """Immutable table of half-lattice wave vectors and their frames.

    Per-wave-vector arrays (``z``, ``frames``, ``zinf``) have one row per
    canonical ``z``; per-mode arrays (``wavenumber2``, ``bessel``) have one
    entry per coefficient, i.e. ``2d-2`` entries per wave vector.
    """

    def __init__(self, d, n_max):
        if d not in SUPPORTED_DIMENSIONS:
            raise ConfigurationError(f"dimension {d} not supported (use 2 or 3)", "d")
        if int(n_max) != n_max or n_max < 1:
            raise ConfigurationError(f"truncation must be an integer >= 1, got {n_max}", "n_max")
        self.d = int(d)
        self.n_max = int(n_max)

        rng = range(-self.n_max, self.n_max + 1)
        zs = [z for z in itertools.product(rng, repeat=self.d) if _is_canonical(z)]
        zs.sort(key=lambda z: (max(abs(c) for c in z), z))
        z = np.array(zs, dtype=np.int64).reshape(-1, self.d)
        frames = np.array([_frame(zz) for zz in zs])

        self.z = z
        self.frames = frames
        self.zinf = np.abs(z).max(axis=1)
        self.z2 = (z * z).sum(axis=1)
        # number of wave vectors with |z|_inf <= n, for n = 0..n_max
        self._nz_upto = np.searchsorted(self.zinf, np.arange(self.n_max + 1), side="right")
        for arr in (self.z, self.frames, self.zinf, self.z2, self._nz_upto):
            arr.setflags(write=False)

    @property
    def per_z(self):
        """Coefficients per wave vector (``2d - 2``)."""
        return 2 * self.d - 2

    def n_wavevectors(self, n):
        self._check_level(n)
        return int(self._nz_upto[n])

    def dim(self, n):
        """Dimension N(n) of the level-n Galerkin space."""
        return self.n_wavevectors(n) * self.per_z

    def _check_level(self, n):
        if int(n) != n or n < 1 or n > self.n_max:
            raise ConfigurationError(f"level must be in [1, {self.n_max}], got {n}", "n")

    @cached_property
    def wavenumber2(self):
        """4 pi^2 |z|^2 for every mode, in coefficient order."""
        out = np.repeat(TWO_PI**2 * self.z2.astype(float), self.per_z)
        out.setflags(write=False)
        return out

    def bessel(self, alpha, n=None):
        """Multiplier (1 + 4 pi^2 |z|^2)^(alpha/2) for every mode up to level n."""
        w = self.wavenumber2 if n is None else self.wavenumber2[: self.dim(n)]
        return (1.0 + w) ** (0.5 * alpha)

    def modes(self, n=None):
        """Materialize :class:`Mode` records (slow; meant for tests and inspection)."""
        nz = len(self.z) if n is None else self.n_wavevectors(n)
        out = []
        for k in range(nz):
            zt = tuple(int(c) for c in self.z[k])
            for j in range(1, self.per_z + 1):
                out.append(Mode(zt, j, self.frames[k, (j - 1) % (self.d - 1)]))
        return out

    def index(self, z, j):
        """Flat coefficient index of mode (z, j)."""
        z = tuple(z)
        if not _is_canonical(z):
            raise KeyError(f"{z} is not a half-lattice representative")
        hits = np.flatnonzero((self.z == np.asarray(z)).all(axis=1))
        if hits.size == 0 or not 1 <= j <= self.per_z:
            raise KeyError((z, j))
        return int(hits[0]) * self.per_z + (j - 1)

    def zeros(self, n):
        return SpectralField(self, np.zeros(self.dim(n)), n)

    def single_mode(self, z, j, n=None, value=1.0):
        """The basis function psi_{z,j} (times ``value``) as a field."""
        n = max(abs(c) for c in z) if n is None else n
        out = np.zeros(self.dim(n))
        out[self.index(z, j)] = value
        return SpectralField(self, out, n)

    # complex amplitude conversions -------------------------------------

    def amplitudes(self, coeffs, n):
        """Complex Fourier amplitudes v_hat_z (shape ``(Nz, d)``) for canonical z.

        v = sum_z v_hat_z exp(2 pi i z.x) + c.c., so that
        v_hat_z = sum_j (c_j - i s_j) e_j / sqrt(2).
        """
        nz = self.n_wavevectors(n)
        c = np.asarray(coeffs, dtype=float).reshape(nz, 2, self.d - 1)
        w = (c[:, 0, :] - 1j * c[:, 1, :]) / np.sqrt(2.0)
        return np.einsum("kj,kji->ki", w, self.frames[:nz])

    def coefficients(self, amps, n):
        """Inverse of :meth:`amplitudes`; drops any component parallel to z."""
        nz = self.n_wavevectors(n)
        amps = np.asarray(amps)[:nz]
        proj = np.einsum("kji,ki->kj", self.frames[:nz], amps) * np.sqrt(2.0)
        out = np.empty((nz, 2, self.d - 1))
        out[:, 0, :] = proj.real
        out[:, 1, :] = -proj.imag
        return out.reshape(-1)


def build_basis(d, n_max):
    return BasisTable(d, n_max)


@dataclass
class SpectralField:
    """Real divergence-free field given by its coefficients up to ``level``."""

    basis: BasisTable
    coeffs: np.ndarray
    level: int

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        expected = self.basis.dim(self.level)
        if self.coeffs.shape != (expected,):
            raise ValueError(
                f"level {self.level} field needs {expected} coefficients, got {self.coeffs.shape}"
            )

    @property
    def d(self):
        return self.basis.d

    def copy(self):
        return SpectralField(self.basis, self.coeffs.copy(), self.level)

    def at_level(self, n):
        """Zero-pad or truncate to level ``n``."""
        size = self.basis.dim(n)
        if n >= self.level:
            out = np.zeros(size)
            out[: self.coeffs.size] = self.coeffs
            return SpectralField(self.basis, out, n)
        return SpectralField(self.basis, self.coeffs[:size].copy(), n)

    def amplitudes(self):
        return self.basis.amplitudes(self.coeffs, self.level)

    def dot(self, other):
        n = min(self.level, other.level)
        size = self.basis.dim(n)
        return float(np.dot(self.coeffs[:size], other.coeffs[:size]))

    def norm2(self, alpha=0.0):
        """Squared V_{2,alpha} norm (Parseval)."""
        if alpha == 0:
            return float(np.dot(self.coeffs, self.coeffs))
        w = self.basis.bessel(2 * alpha, self.level)
        return float(np.dot(w * self.coeffs, self.coeffs))

    def grad_norm2(self):
        """||grad v||_2^2 = sum 4 pi^2 |z|^2 c^2."""
        w = self.basis.wavenumber2[: self.coeffs.size]
        return float(np.dot(w * self.coeffs, self.coeffs))

    def laplacian_norm2(self):
        w = self.basis.wavenumber2[: self.coeffs.size]
        return float(np.dot((w * w) * self.coeffs, self.coeffs))

    def laplacian(self):
        w = self.basis.wavenumber2[: self.coeffs.size]
        return SpectralField(self.basis, -w * self.coeffs, self.level)

    def _binary(self, other, op):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.basis is not self.basis and other.basis.d != self.basis.d:
            raise ValueError("fields live on different bases")
        n = max(self.level, other.level)
        a, b = self.at_level(n).coeffs, other.at_level(n).coeffs
        return SpectralField(self.basis, op(a, b), n)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return SpectralField(self.basis, -self.coeffs, self.level)

    def __mul__(self, scalar):
        return SpectralField(self.basis, self.coeffs * float(scalar), self.level)

    __rmul__ = __mul__


def leray_amplitudes(raw, z):
    """Remove the component of each amplitude parallel to its wave vector.

    ``raw`` has shape ``(..., d)`` and ``z`` broadcasts against it; rows with
    ``z = 0`` are zeroed (the mean is not part of the space).
    """
    raw = np.asarray(raw)
    z = np.asarray(z, dtype=float)
    z2 = (z * z).sum(axis=-1, keepdims=True)
    safe = np.where(z2 == 0, 1.0, z2)
    par = (raw * z).sum(axis=-1, keepdims=True) / safe
    out = raw - par * z
    return np.where(z2 == 0, 0.0, out)


def leray_project(raw, basis, n):
    """Leray projection of per-mode complex amplitudes onto the level-n space.

    ``raw`` has shape ``(Nz(n), d)`` and lists v_hat_z for the canonical wave
    vectors of ``basis`` in table order.
    """
    nz = basis.n_wavevectors(n)
    cleaned = leray_amplitudes(np.asarray(raw)[:nz], basis.z[:nz])
    return SpectralField(basis, basis.coefficients(cleaned, n), n)


def galerkin_project(v, n):
    if n < 1:
        raise ConfigurationError("truncation level must be >= 1", "n")
    if n > v.basis.n_max:
        raise ConfigurationError(f"level {n} exceeds basis n_max={v.basis.n_max}", "n")
    if n >= v.level:
        return v.copy()
    return v.at_level(n)
