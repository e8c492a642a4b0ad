"""Delta-commuting covariance, Brownian increments and initial data.

Randomness is counter based: the standard normal feeding coefficient ``i``
(canonical mode order) at step ``k`` is the ``i``-th draw of a Philox
stream whose key is ``(seed, k)``.  Because the mode order puts every
lower level first, the level-n increment is exactly the coordinate
restriction of the level-m increment for the same ``(seed, k)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import SpectralField
from .errors import ConfigurationError

INITIAL_STREAM = np.iinfo(np.uint64).max


def _key(seed, stream):
    return np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)


def standard_normals(seed, stream, count):
    """First ``count`` N(0,1) draws of the stream keyed by ``(seed, stream)``."""
    gen = np.random.Generator(np.random.Philox(key=_key(seed, stream)))
    return gen.standard_normal(count)


def derive_seed(master, index):
    """Per-path seed for member ``index`` of an ensemble."""
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1, np.uint64)[0])


def default_decay(d):
    return d / 2 + 2.5


@dataclass(frozen=True)
class CovarianceSpec:
    """gamma(z) = scale * (1 + 4 pi^2 |z|^2)^(-decay), identical for every polarization."""

    d: int
    scale: float = 1.0
    decay: float | None = None

    def __post_init__(self):
        if self.scale < 0:
            raise ConfigurationError("noise scale must be >= 0", "scale")
        if self.decay is None:
            object.__setattr__(self, "decay", default_decay(self.d))

    def eigenvalues(self, basis, n):
        if self.scale == 0:
            return np.zeros(basis.dim(n))
        return self.scale * basis.bessel(-2.0 * self.decay, n)

    def trace_finite(self, power):
        """Whether tr(Gamma (-Laplacian)^power) converges as n -> infinity."""
        return self.scale == 0 or self.decay > self.d / 2 + power

    def require_trace_class(self, power):
        if not self.trace_finite(power):
            raise ConfigurationError(
                f"tr(Gamma (-Laplacian)^{power}) diverges: decay {self.decay} must exceed "
                f"{self.d / 2 + power} in dimension {self.d}",
                "decay",
            )


def trace(spec, basis, n, alpha=0):
    """sum over |z|_inf <= n and j of gamma^{z,j} (4 pi^2 |z|^2)^alpha."""
    gam = spec.eigenvalues(basis, n)
    if alpha == 0:
        return float(np.sum(gam))
    w = basis.wavenumber2[: gam.size]
    return float(np.sum(gam * w**alpha))


@dataclass(frozen=True)
class NoisePath:
    seed: int
    covariance: CovarianceSpec

    def std(self, basis, n, dt):
        return np.sqrt(self.covariance.eigenvalues(basis, n) * dt)


def sample_increment(path, basis, step, dt, n):
    """Brownian increment of P_n W over step ``step`` of length ``dt``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    size = basis.dim(n)
    if path.covariance.scale == 0:
        return SpectralField(basis, np.zeros(size), n)
    xi = standard_normals(path.seed, step, size)
    return SpectralField(basis, path.std(basis, n, dt) * xi, n)


@dataclass(frozen=True)
class InitialCondition:
    """Initial data: ``kind`` is ``"taylor_green"``, ``"gaussian"`` or ``"zero"``.

    For ``"gaussian"`` the coefficients are independent with variance
    ``amplitude^2 (1 + 4 pi^2 |z|^2)^(-smoothness)``.
    """

    kind: str = "taylor_green"
    amplitude: float = 0.1
    smoothness: float | None = None

    KINDS = ("taylor_green", "gaussian", "zero")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"unknown initial condition {self.kind!r}", "init")

    def sample(self, basis, n, seed=0, default_smoothness=None):
        if self.kind == "zero":
            return basis.zeros(n)
        if self.kind == "taylor_green":
            return taylor_green(basis, n, self.amplitude)
        s = self.smoothness if self.smoothness is not None else default_smoothness
        if s is None:
            s = default_decay(basis.d)
        xi = standard_normals(seed, INITIAL_STREAM, basis.dim(n))
        return SpectralField(basis, self.amplitude * basis.bessel(-s, n) * xi, n)


def taylor_green(basis, n, amplitude):
    """Taylor-Green vortex projected onto level ``n``.

    d=2: A (sin 2pi x cos 2pi y, -cos 2pi x sin 2pi y), supported on
    z = (1, 1), (1, -1) with ||v||_2^2 = A^2 / 2.
    d=3: A (sin x cos y cos z, -cos x sin y cos z, 0) in units of 2pi,
    supported on z = (1, +-1, +-1) with ||v||_2^2 = A^2 / 4.
    """
    from .fields import from_grid  # local import avoids a cycle at module load

    d = basis.d
    m = 8
    x = np.meshgrid(*([np.arange(m) / m] * d), indexing="ij")
    s = [np.sin(2 * np.pi * xi) for xi in x]
    c = [np.cos(2 * np.pi * xi) for xi in x]
    if d == 2:
        vals = np.array([s[0] * c[1], -c[0] * s[1]])
    else:
        vals = np.array([s[0] * c[1] * c[2], -c[0] * s[1] * c[2], np.zeros_like(s[0])])
    field = from_grid(amplitude * vals, basis, min(n, 1))
    return field.at_level(n)
