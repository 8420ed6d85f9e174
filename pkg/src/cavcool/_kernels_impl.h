/* Vectorizable particle loops shared by the Cython kernels.
 *
 * Each loop runs over the N particles of one trajectory.  Built with
 * -ffast-math -fopenmp-simd so that sin/cos map onto the libmvec variants.
 */
#ifndef CAVCOOL_KERNELS_IMPL_H
#define CAVCOOL_KERNELS_IMPL_H

#include <math.h>

#define CAVCOOL_TWO_PI 6.283185307179586

static inline double cavcool_wrap(double x)
{
    x = x - CAVCOOL_TWO_PI * floor(x / CAVCOOL_TWO_PI);
    return x >= CAVCOOL_TWO_PI ? 0.0 : x;
}

/* sn <- sin(x); returns sum cos(x).  Two loops: a fused sin/cos is folded
 * into scalar sincos, which has no SIMD variant. */
static double cavcool_sincos_sum(const double *restrict x, double *restrict sn, long n)
{
    double csum = 0.0;
#pragma omp simd
    for (long j = 0; j < n; j++)
        sn[j] = sin(x[j]);
#pragma omp simd reduction(+:csum)
    for (long j = 0; j < n; j++)
        csum += cos(x[j]);
    return csum;
}

/* p <- p + c*sn; x <- wrap(x + 2 p dt); sn <- sin(x); returns sum cos(x) */
static double cavcool_kick_drift(double *restrict x, double *restrict p,
                                 double *restrict sn, long n, double c, double dt)
{
#pragma omp simd
    for (long j = 0; j < n; j++) {
        double pj = p[j] + c * sn[j];
        p[j] = pj;
        x[j] = cavcool_wrap(x[j] + 2.0 * pj * dt);
    }
    return cavcool_sincos_sum(x, sn, n);
}

/* Euler-Maruyama ordering: x uses the old p, p uses the old sn. */
static double cavcool_drift_kick(double *restrict x, double *restrict p,
                                 double *restrict sn, long n, double c, double dt)
{
#pragma omp simd
    for (long j = 0; j < n; j++) {
        double pj = p[j];
        x[j] = cavcool_wrap(x[j] + 2.0 * pj * dt);
        p[j] = pj + c * sn[j];
    }
    return cavcool_sincos_sum(x, sn, n);
}

static void cavcool_kick(double *restrict p, const double *restrict sn, long n, double c)
{
#pragma omp simd
    for (long j = 0; j < n; j++)
        p[j] += c * sn[j];
}

#endif
