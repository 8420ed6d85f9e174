"""Pure numpy fallback for the compiled kernels.

Same signatures and the same operation order as ``_kernels.pyx``; the batch
axis is vectorized and the time loop runs in Python.  Results agree with the
compiled backend to rounding, not bitwise (libm and numpy ``sin`` differ in
the last ulp).
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def _wrap(x):
    np.subtract(x, TWO_PI * np.floor(x / TWO_PI), out=x)
    x[x >= TWO_PI] = 0.0
    return x


def reduced_steps(x, p, v_grid, dt):
    nsteps = len(v_grid) - 1
    if nsteps <= 0:
        return
    n = x.shape[1]
    sn = np.sin(x)
    th = np.cos(x).sum(axis=1) / n
    c = -v_grid[0] * th * dt
    for k in range(nsteps):
        p += c[:, None] * sn
        x += 2.0 * p * dt
        _wrap(x)
        sn = np.sin(x)
        th = np.cos(x).sum(axis=1) / n
        if k + 1 < nsteps:
            c = -2.0 * v_grid[k + 1] * th * dt
    c = -v_grid[nsteps] * th * dt
    p += c[:, None] * sn


def _propagator(dt, kappa, delta_c):
    mu = complex(-kappa, delta_c)
    lam = np.exp(mu * dt)
    phi1 = (lam - 1.0) / mu
    phi2 = (lam - 1.0 - mu * dt) / (mu * mu * dt)
    sig = np.sqrt(0.25 * (1.0 - np.exp(-2.0 * kappa * dt)))
    return lam, phi1, phi2, sig


def full_steps(x, p, field, s_grid, noise, dt, kappa, delta_c):
    nsteps = len(s_grid) - 1
    if nsteps <= 0:
        return
    n = x.shape[1]
    lam, phi1, phi2, sig = _propagator(dt, kappa, delta_c)
    er = field[:, 0].copy()
    ei = field[:, 1].copy()
    sn = np.sin(x)
    th0 = np.cos(x).sum(axis=1) / n
    c = s_grid[0] * er * dt
    for k in range(nsteps):
        p += c[:, None] * sn
        x += 2.0 * p * dt
        _wrap(x)
        sn = np.sin(x)
        th1 = np.cos(x).sum(axis=1) / n
        f0 = -n * s_grid[k] * th0
        df = -n * s_grid[k + 1] * th1 - f0
        er2 = (lam.real * er - lam.imag * ei) + (-phi1.imag * f0) + (-phi2.imag * df) \
            + sig * noise[:, k, 0]
        ei2 = (lam.real * ei + lam.imag * er) + (phi1.real * f0) + (phi2.real * df) \
            + sig * noise[:, k, 1]
        er, ei = er2, ei2
        th0 = th1
        if k + 1 < nsteps:
            c = 2.0 * s_grid[k + 1] * er * dt
    c = s_grid[nsteps] * er * dt
    p += c[:, None] * sn
    field[:, 0] = er
    field[:, 1] = ei


def em_steps(x, p, field, s_grid, noise, dt, kappa, delta_c):
    nsteps = len(s_grid) - 1
    if nsteps <= 0:
        return
    n = x.shape[1]
    sq = np.sqrt(0.5 * kappa * dt)
    er = field[:, 0].copy()
    ei = field[:, 1].copy()
    sn = np.sin(x)
    th = np.cos(x).sum(axis=1) / n
    for k in range(nsteps):
        s = s_grid[k]
        c = 2.0 * s * er * dt
        er2 = er + (-delta_c * ei - kappa * er) * dt + sq * noise[:, k, 0]
        ei2 = ei + (delta_c * er - kappa * ei - n * s * th) * dt + sq * noise[:, k, 1]
        x += 2.0 * p * dt
        _wrap(x)
        p += c[:, None] * sn
        sn = np.sin(x)
        th = np.cos(x).sum(axis=1) / n
        er, ei = er2, ei2
    field[:, 0] = er
    field[:, 1] = ei
