"""Galerkin drift P_n b(v) with b(v) = -(v.grad)v + div tau(v).

Everything is evaluated in strong form on one oversampled grid: the
advection product is exact once the grid has more than ``3*level`` points
per axis, and the stress is sampled pointwise and truncated afterwards.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import TWO_PI, SpectralField
from .fields import Grid, _analyze, stress_factor, velocity_gradient


@dataclass
class DriftEvaluation:
    """Drift plus the by-products of the same grid pass."""

    drift: SpectralField
    dissipation: float
    max_stiffness: float  # max over the grid of the stress map's largest tangent eigenvalue / (2 nu)


def convective(v, g):
    """Grid values of (v . grad) v."""
    g.require(v.level, 3)
    u, grad = velocity_gradient(v, g)
    return np.einsum("l...,il...->i...", u, grad)


def _stress_tangent_max(e2, p):
    # largest eigenvalue of D[(1+|e|^2)^q e] is (1+s)^(q-1) (1 + (p-1) s) for p >= 2
    if p <= 2:
        return 1.0
    return float(np.max((1.0 + e2) ** (0.5 * (p - 2.0) - 1.0) * (1.0 + (p - 1.0) * e2)))


def evaluate_drift(v, n, p, nu, g, advection=True, viscous=True):
    """One grid pass returning P_n b(v), the dissipation and the stress stiffness."""
    basis = v.basis
    if v.level > n:
        raise ValueError(f"field level {v.level} exceeds truncation {n}")
    g.require(n, 3)
    d = v.d
    if not (advection or viscous):
        return DriftEvaluation(basis.zeros(n), 0.0, 1.0)
    if viscous and not advection and p == 2:
        # linear Stokes case: diagonal, no grid needed
        x = v.at_level(n)
        return DriftEvaluation(stokes_drift(x, nu), nu * x.grad_norm2(), 1.0)

    u, grad = velocity_gradient(v.at_level(n), g)
    parts = []
    if advection:
        parts.append(np.einsum("l...,il...->i...", u, grad))
    dissipated = 0.0
    stiff = 1.0
    if viscous:
        e = 0.5 * (grad + np.swapaxes(grad, 0, 1))
        e2 = np.sum(e * e, axis=(0, 1))
        factor = stress_factor(e2, p, nu)
        dissipated = g.mean(factor * e2)
        stiff = _stress_tangent_max(e2, p)
        iu = np.triu_indices(d)
        parts.append(factor * e[iu])
    stack = np.concatenate([np.atleast_1d(part).reshape((-1,) + g.shape) for part in parts])
    amps = _analyze(g, basis, n, stack)  # (C, Nz)

    nz = basis.n_wavevectors(n)
    w = np.zeros((nz, d), dtype=complex)
    offset = 0
    if advection:
        w -= amps[:d].T
        offset = d
    if viscous:
        tau = np.empty((d, d, nz), dtype=complex)
        for k, (i, j) in enumerate(zip(*np.triu_indices(d))):
            tau[i, j] = tau[j, i] = amps[offset + k]
        z = basis.z[:nz]
        # (div tau)_i = sum_j d_j tau_ij -> 2 pi i z_j tau_ij
        w += TWO_PI * 1j * np.einsum("kj,ijk->ki", z, tau)
    drift = SpectralField(basis, basis.coefficients(w, n), n)
    return DriftEvaluation(drift, dissipated, stiff)


def galerkin_drift(v, n, p, nu, g, advection=True, viscous=True):
    """P_n b(v) as a level-``n`` field."""
    return evaluate_drift(v, n, p, nu, g, advection, viscous).drift


def stokes_drift(v, nu):
    """nu Laplacian v, the linear part of the drift at p = 2."""
    w = v.basis.wavenumber2[: v.coeffs.size]
    return SpectralField(v.basis, -nu * w * v.coeffs, v.level)


def drift_energy_identity(v, p, nu, g):
    """Both sides of <v, b(v)> = -<tau(v), e(v)>."""
    ev = evaluate_drift(v, v.level, p, nu, g)
    return v.dot(ev.drift), -ev.dissipation


def default_grid(d, level, factor=None):
    return Grid.for_level(d, level) if factor is None else Grid.for_level(d, level, factor)
