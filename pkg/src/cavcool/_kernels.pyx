# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stepping kernels.

Every kernel advances a batch of independent trajectories in place.  Arrays
are C-contiguous float64: positions and momenta ``(B, N)``, field quadratures
``(B, 2)``, unit normal noise ``(B, nsteps, 2)``.  Drive values are sampled on
the step boundaries, ``grid[n]`` at ``t0 + n*dt`` for ``n = 0..nsteps``.

The loop bodies mirror :mod:`cavcool._pykernels` operation by operation.
"""

import numpy as np

from libc.math cimport sin, cos, exp, sqrt


cdef extern from "_kernels_impl.h" nogil:
    double cavcool_sincos_sum(const double *x, double *sn, long n)
    double cavcool_kick_drift(double *x, double *p, double *sn, long n, double c, double dt)
    double cavcool_drift_kick(double *x, double *p, double *sn, long n, double c, double dt)
    void cavcool_kick(double *p, const double *sn, long n, double c)


def reduced_steps(double[:, ::1] x, double[:, ::1] p, const double[::1] v_grid,
                  double dt):
    """Velocity-Verlet steps of the conservative model, ``len(v_grid) - 1`` of them."""
    cdef Py_ssize_t B = x.shape[0]
    cdef long N = x.shape[1]
    cdef Py_ssize_t nsteps = v_grid.shape[0] - 1
    cdef Py_ssize_t b, n
    cdef double th, c, invn = 1.0 / N
    cdef double[::1] sn = np.empty(N)
    if nsteps <= 0:
        return
    with nogil:
        for b in range(B):
            th = cavcool_sincos_sum(&x[b, 0], &sn[0], N) * invn
            c = -v_grid[0] * th * dt
            for n in range(nsteps):
                th = cavcool_kick_drift(&x[b, 0], &p[b, 0], &sn[0], N, c, dt) * invn
                if n + 1 < nsteps:
                    c = -2.0 * v_grid[n + 1] * th * dt
            cavcool_kick(&p[b, 0], &sn[0], N, -v_grid[nsteps] * th * dt)


def full_steps(double[:, ::1] x, double[:, ::1] p, double[:, ::1] field,
               const double[::1] s_grid, const double[:, :, ::1] noise,
               double dt, double kappa, double delta_c):
    """Hybrid steps of the dissipative model.

    Kick-drift-kick for the particles; the field is advanced with the exact
    Ornstein-Uhlenbeck propagator whose forcing ``-i N S Theta`` is taken
    linear in time between the step endpoints.
    """
    cdef Py_ssize_t B = x.shape[0]
    cdef long N = x.shape[1]
    cdef Py_ssize_t nsteps = s_grid.shape[0] - 1
    cdef Py_ssize_t b, n
    cdef double invn = 1.0 / N, dn = <double> N
    cdef double th0, th1, c, er, ei, er2, ei2, f0, df
    # lam = exp(mu dt), mu = -kappa + i delta_c
    cdef double decay = exp(-kappa * dt)
    cdef double lr = decay * cos(delta_c * dt), li = decay * sin(delta_c * dt)
    cdef double mr = -kappa, mi = delta_c
    cdef double m2 = mr * mr + mi * mi
    # phi1 = (lam - 1) / mu
    cdef double ar = lr - 1.0, ai = li
    cdef double p1r = (ar * mr + ai * mi) / m2, p1i = (ai * mr - ar * mi) / m2
    # phi2 = (lam - 1 - mu dt) / (mu^2 dt)
    cdef double br = lr - 1.0 - mr * dt, bi = li - mi * dt
    cdef double qr = mr * mr - mi * mi, qi = 2.0 * mr * mi
    cdef double q2 = (qr * qr + qi * qi) * dt
    cdef double p2r = (br * qr + bi * qi) / q2, p2i = (bi * qr - br * qi) / q2
    cdef double sig = sqrt(0.25 * (1.0 - exp(-2.0 * kappa * dt)))
    cdef double[::1] sn = np.empty(N)
    if nsteps <= 0:
        return
    with nogil:
        for b in range(B):
            er = field[b, 0]
            ei = field[b, 1]
            th0 = cavcool_sincos_sum(&x[b, 0], &sn[0], N) * invn
            c = s_grid[0] * er * dt
            for n in range(nsteps):
                th1 = cavcool_kick_drift(&x[b, 0], &p[b, 0], &sn[0], N, c, dt) * invn
                # forcing is purely imaginary: F = -i N S Theta
                f0 = -dn * s_grid[n] * th0
                df = -dn * s_grid[n + 1] * th1 - f0
                er2 = (lr * er - li * ei) + (-p1i * f0) + (-p2i * df) \
                    + sig * noise[b, n, 0]
                ei2 = (lr * ei + li * er) + (p1r * f0) + (p2r * df) \
                    + sig * noise[b, n, 1]
                er = er2
                ei = ei2
                th0 = th1
                if n + 1 < nsteps:
                    c = 2.0 * s_grid[n + 1] * er * dt
            cavcool_kick(&p[b, 0], &sn[0], N, s_grid[nsteps] * er * dt)
            field[b, 0] = er
            field[b, 1] = ei


def em_steps(double[:, ::1] x, double[:, ::1] p, double[:, ::1] field,
             const double[::1] s_grid, const double[:, :, ::1] noise,
             double dt, double kappa, double delta_c):
    """Explicit Euler-Maruyama steps of the dissipative model."""
    cdef Py_ssize_t B = x.shape[0]
    cdef long N = x.shape[1]
    cdef Py_ssize_t nsteps = s_grid.shape[0] - 1
    cdef Py_ssize_t b, n
    cdef double invn = 1.0 / N, dn = <double> N
    cdef double th, c, er, ei, er2, ei2, s
    cdef double sq = sqrt(0.5 * kappa * dt)
    cdef double[::1] sn = np.empty(N)
    if nsteps <= 0:
        return
    with nogil:
        for b in range(B):
            er = field[b, 0]
            ei = field[b, 1]
            th = cavcool_sincos_sum(&x[b, 0], &sn[0], N) * invn
            for n in range(nsteps):
                s = s_grid[n]
                c = 2.0 * s * er * dt
                er2 = er + (-delta_c * ei - kappa * er) * dt + sq * noise[b, n, 0]
                ei2 = ei + (delta_c * er - kappa * ei - dn * s * th) * dt \
                    + sq * noise[b, n, 1]
                th = cavcool_drift_kick(&x[b, 0], &p[b, 0], &sn[0], N, c, dt) * invn
                er = er2
                ei = ei2
            field[b, 0] = er
            field[b, 1] = ei
