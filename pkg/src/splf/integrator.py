"""Euler-Maruyama and semi-implicit stepping of the Galerkin SDE.

    X_{k+1} = X_k + P_n b(X_k) dt + dW_k                          (explicit)
    (1 - dt kappa nu Lap) X_{k+1} = X_k + (P_n b(X_k) - kappa nu Lap X_k) dt + dW_k
                                                                  (semi_implicit)

``kappa`` is 1 for p <= 2.  For shear-thickening runs it is raised to the
largest tangent stiffness of the stress map at the initial state, which
keeps the explicitly treated remainder inside the stability region.
"""
from __future__ import annotations

import hashlib
import json
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .basis import SpectralField, build_basis
from .errors import BlowUpError, ConfigurationError
from .fields import Grid
from .noise import CovarianceSpec, InitialCondition, NoisePath, sample_increment
from .nonlinearity import evaluate_drift

SCHEMES = ("explicit", "semi_implicit")
BLOWUP_NORM2 = 1e12


@dataclass(frozen=True)
class SimConfig:
    d: int = 2
    p: float = 2.0
    nu: float = 0.1
    n: int = 8
    dt: float = 1e-3
    T: float = 0.25
    scheme: str = "semi_implicit"
    dealias_factor: float = 4.0
    noise_scale: float = 1.0
    noise_decay: float | None = None
    init: str = "taylor_green"
    init_amplitude: float = 0.1
    init_smoothness: float | None = None
    seed: int = 0
    advection: bool = True
    viscous: bool = True
    stabilization: float | None = None
    check_regime: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.d not in (2, 3):
            raise ConfigurationError(f"dimension {self.d} not supported (use 2 or 3)", "d")
        if not self.p > 1:
            raise ConfigurationError(f"p must exceed 1, got {self.p}", "p")
        if self.viscous and not self.nu > 0:
            raise ConfigurationError(f"viscosity must be positive, got {self.nu}", "nu")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError(f"truncation must be an integer >= 1, got {self.n}", "n")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}", "dt")
        if not self.T >= self.dt * (1 - 1e-12):
            raise ConfigurationError(f"horizon T={self.T} shorter than dt={self.dt}", "T")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-8 * max(1.0, steps):
            raise ConfigurationError(f"T={self.T} is not a whole number of steps dt={self.dt}", "T")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}", "scheme")
        if self.dealias_factor < 2:
            raise ConfigurationError("dealias factor must be >= 2", "dealias_factor")
        if self.noise_scale < 0:
            raise ConfigurationError("noise scale must be >= 0", "noise_scale")
        if self.stabilization is not None and self.stabilization < 1:
            raise ConfigurationError("stabilization factor must be >= 1", "stabilization")
        InitialCondition(self.init, self.init_amplitude, self.init_smoothness)
        if self.check_regime:
            lo = 1 + 2 * self.d / (self.d + 2)
            if self.p < lo:
                raise ConfigurationError(
                    f"p={self.p} below the Galerkin convergence range p >= 1 + 2d/(d+2) = {lo:.6g}", "p"
                )
            if self.d >= 3 and self.p >= 2 * self.d / (self.d - 2):
                raise ConfigurationError(
                    f"p={self.p} not below 2d/(d-2) = {2 * self.d / (self.d - 2):.6g}", "p"
                )

    def regime_notes(self):
        """Warnings about the convergence regime that do not make the config invalid."""
        notes = []
        lo_strict = 1 + self.d / 2
        if 1 + 2 * self.d / (self.d + 2) <= self.p < lo_strict:
            notes.append(
                f"p={self.p} satisfies p >= 1+2d/(d+2) but not p >= 1+d/2={lo_strict:g}; "
                "the strong-convergence statement is only claimed for the latter"
            )
        return notes

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))

    @property
    def covariance(self):
        return CovarianceSpec(self.d, self.noise_scale, self.noise_decay)

    @property
    def initial_condition(self):
        return InitialCondition(self.init, self.init_amplitude, self.init_smoothness)

    @property
    def noise_path(self):
        return NoisePath(self.seed, self.covariance)

    def grid(self, level=None):
        return Grid.for_level(self.d, self.n if level is None else level, self.dealias_factor)

    def resolved(self):
        """Config with every default made explicit, as a plain dict."""
        out = asdict(self)
        out["noise_decay"] = self.covariance.decay
        return out

    def config_hash(self):
        blob = json.dumps(self.resolved(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).digest()

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass
class Trajectory:
    """States X_0..X_K and per-step scalars of one run.

    State arrays have length K+1; increment arrays (``martingale_increments``
    etc.) have length K, entry k belonging to the step t_k -> t_{k+1}.
    """

    config: SimConfig
    level: int
    basis: object
    coeffs: np.ndarray
    energy: np.ndarray
    enstrophy: np.ndarray
    palinstrophy: np.ndarray
    dissipation: np.ndarray
    martingale_increments: np.ndarray
    enstrophy_martingale_increments: np.ndarray
    noise_energy: np.ndarray
    stabilization: float = 1.0
    blowup_step: int | None = None

    @property
    def seed(self):
        return self.config.seed

    @property
    def n_steps(self):
        return self.coeffs.shape[0] - 1

    @property
    def times(self):
        return np.arange(self.coeffs.shape[0]) * self.config.dt

    def state(self, k):
        return SpectralField(self.basis, self.coeffs[k].copy(), self.level)

    @property
    def states(self):
        return [self.state(k) for k in range(self.coeffs.shape[0])]

    def martingale(self):
        """M at t_0..t_K, left-endpoint (Ito) sums of <X_k, dW_k>."""
        return np.concatenate([[0.0], np.cumsum(self.martingale_increments)])


def stabilization_for(cfg, x0, grid=None):
    if cfg.stabilization is not None:
        return float(cfg.stabilization)
    if cfg.scheme != "semi_implicit" or cfg.p <= 2 or not cfg.viscous:
        return 1.0
    grid = grid or cfg.grid(x0.level)
    return max(1.0, evaluate_drift(x0, x0.level, cfg.p, cfg.nu, grid, cfg.advection, cfg.viscous).max_stiffness)


def _advance(x, cfg, dW, grid, kappa):
    ev = evaluate_drift(x, x.level, cfg.p, cfg.nu, grid, cfg.advection, cfg.viscous)
    c = x.coeffs + cfg.dt * ev.drift.coeffs + dW.coeffs
    if cfg.scheme == "semi_implicit" and cfg.viscous:
        w = cfg.dt * kappa * cfg.nu * x.basis.wavenumber2[: c.size]
        c = (c + w * x.coeffs) / (1.0 + w)
    return SpectralField(x.basis, c, x.level), ev


def step(x, cfg, dW, grid=None, stabilization=None):
    """One time step from ``x`` with Brownian increment ``dW``."""
    if dW.level != x.level:
        raise ValueError(f"increment level {dW.level} differs from state level {x.level}")
    grid = grid or cfg.grid(x.level)
    kappa = stabilization if stabilization is not None else stabilization_for(cfg, x, grid)
    out, _ = _advance(x, cfg, dW, grid, kappa)
    return out


def _blown(c):
    if not np.all(np.isfinite(c)):
        return True
    return float(np.dot(c, c)) > BLOWUP_NORM2


def simulate(cfg, level=None, basis=None, x0=None, stabilization=None):
    """Run one path of the level-``level`` (default ``cfg.n``) Galerkin SDE."""
    n = cfg.n if level is None else level
    basis = basis or build_basis(cfg.d, n)
    grid = cfg.grid(n)
    path = cfg.noise_path
    if x0 is None:
        x0 = cfg.initial_condition.sample(basis, n, cfg.seed, cfg.covariance.decay)
    x = x0.at_level(n)
    kappa = stabilization if stabilization is not None else stabilization_for(cfg, x, grid)

    K = cfg.n_steps
    size = basis.dim(n)
    coeffs = np.zeros((K + 1, size))
    diss = np.zeros(K + 1)
    mart = np.zeros(K)
    mart_ens = np.zeros(K)
    noise_e = np.zeros(K)
    w = basis.wavenumber2[:size]
    coeffs[0] = x.coeffs

    def finish(last):
        c = coeffs[: last + 1]
        return Trajectory(
            config=cfg,
            level=n,
            basis=basis,
            coeffs=c,
            energy=0.5 * np.einsum("ki,ki->k", c, c),
            enstrophy=0.5 * np.einsum("ki,ki->k", c * w, c),
            palinstrophy=np.einsum("ki,ki->k", c * w * w, c),
            dissipation=diss[: last + 1],
            martingale_increments=mart[:last],
            enstrophy_martingale_increments=mart_ens[:last],
            noise_energy=noise_e[:last],
            stabilization=kappa,
        )

    for k in range(K):
        dW = sample_increment(path, basis, k, cfg.dt, n)
        x_new, ev = _advance(x, cfg, dW, grid, kappa)
        diss[k] = ev.dissipation
        mart[k] = np.dot(x.coeffs, dW.coeffs)
        mart_ens[k] = np.dot(w * x.coeffs, dW.coeffs)
        noise_e[k] = np.dot(dW.coeffs, dW.coeffs)
        if _blown(x_new.coeffs):
            traj = finish(k)
            traj.blowup_step = k + 1
            raise BlowUpError(k + 1, traj)
        x = x_new
        coeffs[k + 1] = x.coeffs
    if cfg.viscous:
        diss[K] = evaluate_drift(x, n, cfg.p, cfg.nu, grid, cfg.advection, cfg.viscous).dissipation
    return finish(K)


@dataclass
class ZRecord:
    """Differences Z = X^{large} - X^{small} on the large level, one row per step."""

    basis: object
    level: int
    dt: float
    coeffs: np.ndarray
    sobolev: dict = field(default_factory=dict)

    def field(self, k):
        return SpectralField(self.basis, self.coeffs[k].copy(), self.level)

    def l2_series(self, alpha):
        """||Z_t||_{2,alpha} at every step."""
        w = self.basis.bessel(2 * alpha, self.level)
        return np.sqrt(np.einsum("ki,i,ki->k", self.coeffs, w, self.coeffs))


@dataclass
class CoupledRun:
    small: Trajectory
    large: Trajectory
    z: ZRecord


DEFAULT_SUP_ALPHAS = (0.0, 0.5, 0.9)


def simulate_coupled(cfg, n_small, n_large, alphas=DEFAULT_SUP_ALPHAS):
    """Two Galerkin levels driven by one Brownian path and one initial datum."""
    if not 1 <= n_small <= n_large:
        raise ConfigurationError(f"need 1 <= n_small <= n_large, got {n_small}, {n_large}", "levels")
    return simulate_levels(cfg, [n_small], n_large, alphas)[n_small]


def simulate_levels(cfg, levels, reference, alphas=DEFAULT_SUP_ALPHAS):
    """Coupled runs of several levels against one shared reference run.

    Returns ``{level: CoupledRun}``; the reference trajectory is computed once.
    """
    levels = [int(n) for n in levels]
    if any(n > reference or n < 1 for n in levels):
        raise ConfigurationError(f"levels must lie in [1, {reference}], got {levels}", "levels")
    basis = build_basis(cfg.d, reference)
    xi = cfg.initial_condition.sample(basis, reference, cfg.seed, cfg.covariance.decay)
    kappa = stabilization_for(cfg, xi, cfg.grid(reference))
    large = simulate(cfg, reference, basis, xi, kappa)
    out = {}
    for n in levels:
        small = large if n == reference else simulate(cfg, n, basis, xi.at_level(n), kappa)
        zc = large.coeffs.copy()
        zc[:, : basis.dim(n)] -= small.coeffs
        z = ZRecord(basis, reference, cfg.dt, zc)
        z.sobolev = {a: z.l2_series(a) for a in alphas}
        out[n] = CoupledRun(small, large, z)
    return out


def _simulate_seed(args):
    cfg, level = args
    return simulate(cfg, level)


def run_ensemble(cfgs, workers=1, level=None):
    """Simulate each config (typically differing only by seed), results in input order."""
    jobs = [(c, level) for c in cfgs]
    if workers is None or workers <= 1 or len(jobs) <= 1:
        return [_simulate_seed(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_simulate_seed, jobs))


# checkpoints ---------------------------------------------------------------

_MAGIC = b"SPLFCKP1"
_HEADER = struct.Struct("<8s32sIdIQQ")


def write_checkpoint(path, cfg, x, step_index):
    """Header (magic, config hash, d, p, n, step, count) then little-endian float64 coefficients."""
    data = np.ascontiguousarray(x.coeffs, dtype="<f8")
    header = _HEADER.pack(_MAGIC, cfg.config_hash(), cfg.d, float(cfg.p), x.level, int(step_index), data.size)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_checkpoint(path, basis=None):
    """Return ``(header, field)``; ``field`` is None unless ``basis`` is given."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, chash, d, p, n, step_index, count = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    coeffs = np.frombuffer(raw, dtype="<f8", count=count, offset=_HEADER.size).astype(float)
    header = {"config_hash": chash, "d": d, "p": p, "n": n, "step": step_index, "coeffs": coeffs}
    fld = None
    if basis is not None:
        fld = SpectralField(basis, coeffs, n)
    return header, fld


def config_fields():
    return [f.name for f in fields(SimConfig)]
