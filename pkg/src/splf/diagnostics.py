"""Energy/enstrophy balance residuals and Galerkin convergence metrics.

Each residual is its balance identity moved to one side, discretized with
left-endpoint (Ito) sums on the step grid, so it vanishes up to O(dt) for a
consistent scheme and exactly in the degenerate cases (no noise, no drift).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IntegrityError
from .fields import Grid, dissipation, grad_lp_norm, lp_norm, to_grid
from .fields import bessel_potential
from .noise import sample_increment, trace


@dataclass(frozen=True)
class ConvergenceParams:
    d: int
    p: float
    lam: float
    alpha: float
    p_tilde: float
    p_dual: float


def convergence_params(d, p, p_tilde=None):
    """Exponent lambda, alpha = (p - 2 lambda)/p, p~ (default (1+p)/2) and p' = p/(p-1)."""
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")
    if p <= 1:
        raise DomainError(f"p must exceed 1, got {p}")
    if d == 2:
        lam = 0.0
    else:
        if not p > (3 * d - 4) / d:
            raise DomainError(f"lambda needs p > (3d-4)/d = {(3 * d - 4) / d:.6g} for d={d}, got p={p}")
        lam = 2.0 * max(3.0 - p, 0.0) / (d * p - 3 * d + 4)
    alpha = (p - 2 * lam) / p
    if p_tilde is None:
        p_tilde = 0.5 * (1.0 + p)
    if not 1 <= p_tilde < p:
        raise DomainError(f"p~ must lie in [1, p), got {p_tilde}")
    return ConvergenceParams(d, p, lam, alpha, p_tilde, p / (p - 1))


@dataclass
class BalanceReport:
    """Residuals of a balance identity, one per path, plus ensemble summary."""

    residuals: np.ndarray
    trace_term: float  # tr(Gamma P_n), or its (-Laplacian)-weighted version
    martingale: np.ndarray | None = None
    series: np.ndarray | None = None
    initial: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_paths(self):
        return self.residuals.size

    @property
    def mean(self):
        return float(np.mean(self.residuals))

    @property
    def stderr(self):
        if self.residuals.size < 2:
            return 0.0
        return float(np.std(self.residuals, ddof=1) / np.sqrt(self.residuals.size))

    def tolerance(self, dt, horizon, factor=5.0):
        """max(3 stderr, factor dt (mean initial size + trace input))."""
        scale = float(np.mean(self.initial)) + self.trace_term * horizon
        return max(3.0 * self.stderr, factor * dt * scale)

    def passes(self, dt, horizon, factor=5.0):
        return abs(self.mean) <= self.tolerance(dt, horizon, factor)


def _check_provenance(traj, path):
    if path.seed != traj.config.seed or path.covariance != traj.config.covariance:
        raise IntegrityError(
            f"noise path (seed {path.seed}) does not match trajectory (seed {traj.config.seed})"
        )


def _increments(traj, path):
    cfg = traj.config
    return np.array(
        [sample_increment(path, traj.basis, k, cfg.dt, traj.level).coeffs for k in range(traj.n_steps)]
    ).reshape(traj.n_steps, -1)


def _dissipation_series(traj, grid=None):
    cfg = traj.config
    if not cfg.viscous:
        return np.zeros(traj.n_steps + 1)
    grid = grid or cfg.grid(traj.level)
    return np.array([dissipation(traj.state(k), cfg.p, cfg.nu, grid) for k in range(traj.n_steps + 1)])


def energy_residual_pathwise(traj, path=None, grid=None):
    """Discrete pathwise energy equality residual.

    r(t_k) = 1/2 |X_k|^2 - 1/2 |X_0|^2 + sum_{i<k} <e,tau>(X_i) dt
             - 1/2 tr(Gamma P_n) t_k - M_k,     M_k = sum_{i<k} <X_i, dW_i>

    Dissipation and increments are recomputed from the states and the noise
    path rather than read from the integrator's bookkeeping.
    """
    cfg = traj.config
    path = path or cfg.noise_path
    _check_provenance(traj, path)
    dW = _increments(traj, path)
    X = traj.coeffs
    mart = np.concatenate([[0.0], np.cumsum(np.einsum("ki,ki->k", X[:-1], dW))])
    diss = _dissipation_series(traj, grid)
    energy = 0.5 * np.einsum("ki,ki->k", X, X)
    tr = trace(cfg.covariance, traj.basis, traj.level)
    t = traj.times
    work = np.concatenate([[0.0], np.cumsum(diss[:-1]) * cfg.dt])
    series = energy - energy[0] + work - 0.5 * tr * t - mart
    return BalanceReport(
        residuals=np.array([series[-1]]),
        trace_term=tr,
        martingale=mart,
        series=series,
        initial=np.array([2 * energy[0]]),
    )


def energy_residual_mean(trajectories):
    """Per-path 1/2|X_T|^2 + sum <e,tau> dt - 1/2|X_0|^2 - 1/2 tr(Gamma P_n) T, no martingale."""
    if len(trajectories) < 2:
        raise ValueError("need at least two paths")
    res, init = [], []
    tr = None
    for traj in trajectories:
        cfg = traj.config
        tr = trace(cfg.covariance, traj.basis, traj.level)
        work = cfg.dt * float(np.sum(traj.dissipation[:-1])) if cfg.viscous else 0.0
        res.append(traj.energy[-1] - traj.energy[0] + work - 0.5 * tr * cfg.T)
        init.append(2 * traj.energy[0])
    return BalanceReport(np.array(res), trace_term=tr, initial=np.array(init))


def _require_enstrophy_regime(cfg):
    if cfg.d != 2 or cfg.p != 2:
        raise DomainError(
            "enstrophy balance holds only for the 2D Navier-Stokes regime (d = 2, p = 2); "
            f"got d={cfg.d}, p={cfg.p}"
        )
    cfg.covariance.require_trace_class(2)


def enstrophy_residual(traj, path=None):
    """Discrete pathwise enstrophy balance residual (d = p = 2).

    r(t_k) = 1/2 |grad X_k|^2 - 1/2 |grad X_0|^2 + nu sum_{i<k} |Lap X_i|^2 dt
             - 1/2 tr(-Gamma Lap P_n) t_k - M_k,   M_k = sum_{i<k} <-Lap X_i, dW_i>
    """
    cfg = traj.config
    _require_enstrophy_regime(cfg)
    path = path or cfg.noise_path
    _check_provenance(traj, path)
    dW = _increments(traj, path)
    X = traj.coeffs
    w = traj.basis.wavenumber2[: X.shape[1]]
    mart = np.concatenate([[0.0], np.cumsum(np.einsum("ki,ki->k", X[:-1] * w, dW))])
    ens = 0.5 * np.einsum("ki,ki->k", X * w, X)
    pal = np.einsum("ki,ki->k", X * w * w, X)
    nu = cfg.nu if cfg.viscous else 0.0
    tr = trace(cfg.covariance, traj.basis, traj.level, alpha=1)
    work = np.concatenate([[0.0], np.cumsum(pal[:-1]) * nu * cfg.dt])
    series = ens - ens[0] + work - 0.5 * tr * traj.times - mart
    return BalanceReport(
        residuals=np.array([series[-1]]),
        trace_term=tr,
        martingale=mart,
        series=series,
        initial=np.array([2 * ens[0]]),
    )


def enstrophy_residual_mean(trajectories):
    """Ensemble version of :func:`enstrophy_residual` without the martingale term."""
    if len(trajectories) < 2:
        raise ValueError("need at least two paths")
    res, init = [], []
    tr = None
    for traj in trajectories:
        cfg = traj.config
        _require_enstrophy_regime(cfg)
        tr = trace(cfg.covariance, traj.basis, traj.level, alpha=1)
        nu = cfg.nu if cfg.viscous else 0.0
        work = nu * cfg.dt * float(np.sum(traj.palinstrophy[:-1]))
        res.append(traj.enstrophy[-1] - traj.enstrophy[0] + work - 0.5 * tr * cfg.T)
        init.append(2 * traj.enstrophy[0])
    return BalanceReport(np.array(res), trace_term=tr, initial=np.array(init))


def pooled(reports):
    """Concatenate single-path reports into one ensemble report."""
    return BalanceReport(
        residuals=np.concatenate([r.residuals for r in reports]),
        trace_term=reports[0].trace_term,
        initial=np.concatenate([r.initial for r in reports]),
    )


@dataclass
class ConvergenceMetrics:
    sup: dict  # a -> sup_t ||Z_t||_{2,a}
    int_l2: float  # int ||Z_t||_{2,1+alpha}^2 dt
    int_lp: float  # int ||Z_t||_{p~,1}^{p~} dt
    alpha: float
    p_tilde: float

    def as_row(self):
        row = {f"sup_2_{a:g}": v for a, v in self.sup.items()}
        row["int_2_1plus_alpha"] = self.int_l2
        row["int_ptilde_1"] = self.int_lp
        return row


def convergence_metrics(z, params, p_tilde=None, sup_alphas=(0.0, 0.5, 0.9), grid=None):
    """Sup and time-integrated norms of a coupled difference record.

    Time integrals use the left-endpoint rectangle rule on the step grid.
    """
    p_tilde = params.p_tilde if p_tilde is None else p_tilde
    sup = {}
    for a in sup_alphas:
        series = z.sobolev.get(a)
        if series is None:
            series = z.l2_series(a)
        sup[a] = float(np.max(series))
    l2 = z.l2_series(1.0 + params.alpha)
    int_l2 = float(np.sum(l2[:-1] ** 2) * z.dt)
    if not np.any(z.coeffs):
        return ConvergenceMetrics(sup, int_l2, 0.0, params.alpha, p_tilde)
    grid = grid or Grid.for_level(z.basis.d, z.level)
    vals = np.empty(z.coeffs.shape[0] - 1)
    for k in range(vals.size):
        w = bessel_potential(z.field(k), 1.0)
        vals[k] = lp_norm(to_grid(w, grid), p_tilde, grid) ** p_tilde
    return ConvergenceMetrics(sup, int_l2, float(np.sum(vals) * z.dt), params.alpha, p_tilde)


def interpolation_ratio(v, q, g):
    """||v||_q / (||v||_2^theta ||grad v||_2^(1-theta)), theta = (2d - q(d-2)) / (2q)."""
    d = v.d
    theta = (2 * d - q * (d - 2)) / (2 * q)
    vq = lp_norm(to_grid(v, g), q, g)
    l2 = np.sqrt(v.norm2())
    gl2 = np.sqrt(v.grad_norm2())
    return vq / (l2**theta * gl2 ** (1 - theta))


__all__ = [
    "BalanceReport",
    "ConvergenceMetrics",
    "ConvergenceParams",
    "convergence_metrics",
    "convergence_params",
    "energy_residual_mean",
    "energy_residual_pathwise",
    "enstrophy_residual",
    "enstrophy_residual_mean",
    "grad_lp_norm",
    "interpolation_ratio",
    "pooled",
]
