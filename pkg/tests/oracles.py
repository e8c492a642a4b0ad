"""Reference computations that avoid the package's FFT pipeline.

Fields are synthesized term by term from the sin/cos frame basis, and
derivatives come from differentiating that formula by hand.
"""
import itertools

import numpy as np


def half_lattice(d, n):
    """Wave vectors with |z|_inf <= n whose first nonzero entry is positive."""
    out = []
    for z in itertools.product(range(-n, n + 1), repeat=d):
        nz = [c for c in z if c != 0]
        if nz and nz[0] > 0:
            out.append(z)
    return out


def grid_points(d, m):
    x = np.arange(m) / m
    return np.stack(np.meshgrid(*([x] * d), indexing="ij"))


def synthesize(basis, coeffs, level, x):
    """u(x) and grad u(x) (``G[i, l] = d_l u_i``) summed mode by mode."""
    d = basis.d
    shape = x.shape[1:]
    u = np.zeros((d,) + shape)
    grad = np.zeros((d, d) + shape)
    c = np.asarray(coeffs).reshape(-1, 2, d - 1)
    for k in range(c.shape[0]):
        z = basis.z[k]
        phase = 2 * np.pi * np.tensordot(z, x, axes=1)
        cos, sin = np.cos(phase), np.sin(phase)
        for j in range(d - 1):
            e = basis.frames[k, j]
            a, b = c[k, 0, j], c[k, 1, j]
            if a == 0 and b == 0:
                continue
            s2 = np.sqrt(2.0)
            u += s2 * e.reshape((d,) + (1,) * len(shape)) * (a * cos + b * sin)
            # d_l [a cos + b sin] = 2 pi z_l (-a sin + b cos)
            dphase = 2 * np.pi * (-a * sin + b * cos)
            grad += s2 * np.einsum("i,l->il", e, z).reshape((d, d) + (1,) * len(shape)) * dphase
    return u, grad


def psi_and_strain(basis, k, j, x):
    """psi_{z,j} and e(psi_{z,j}) at points ``x`` for table row ``k``."""
    d = basis.d
    z = basis.z[k].astype(float)
    e = basis.frames[k, (j - 1) % (d - 1)]
    phase = 2 * np.pi * np.tensordot(z, x, axes=1)
    if j <= d - 1:
        f, df = np.cos(phase), -np.sin(phase)
    else:
        f, df = np.sin(phase), np.cos(phase)
    ex = (1,) * phase.ndim
    psi = np.sqrt(2.0) * e.reshape((d,) + ex) * f
    grad = np.sqrt(2.0) * 2 * np.pi * np.einsum("i,l->il", e, z).reshape((d, d) + ex) * df
    return psi, grad


def weak_drift(basis, coeffs, level, p, nu, m):
    """b^{z,j}(v) = <v, (v.grad) psi> - <tau(v), e(psi)> for every mode, by quadrature."""
    d = basis.d
    x = grid_points(d, m)
    u, G = synthesize(basis, coeffs, level, x)
    e = 0.5 * (G + np.swapaxes(G, 0, 1))
    e2 = np.sum(e * e, axis=(0, 1))
    tau = 2 * nu * (1 + e2) ** ((p - 2) / 2) * e
    vol = float(m) ** (-d)
    out = []
    for k in range(basis.n_wavevectors(level)):
        for j in range(1, 2 * d - 1):
            psi, gpsi = psi_and_strain(basis, k, j, x)
            adv = np.einsum("i...,l...,il...->...", u, u, gpsi)
            epsi = 0.5 * (gpsi + np.swapaxes(gpsi, 0, 1))
            visc = np.einsum("ij...,ij...->...", tau, epsi)
            out.append((adv.sum() - visc.sum()) * vol)
    return np.array(out)


def random_field(basis, level, rng, slope=0.0):
    from splf.basis import SpectralField

    w = basis.bessel(-slope, level)
    return SpectralField(basis, w * rng.standard_normal(basis.dim(level)), level)
