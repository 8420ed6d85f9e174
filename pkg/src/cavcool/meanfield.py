"""Closed-form mean-field theory of cavity self-organization.

Energies are in units of ``hbar omega_R`` and rates in units of ``omega_R``.
The dimensionless coupling is ``alpha = V / (2 E_kin)`` and ``theta(alpha)`` the
stable mean magnetization, the nonnegative minimizer of the single-particle
free energy ``F(theta) = alpha theta^2 - ln I0(2 alpha theta)``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import ParameterError, SystemParams

SERIES_CUTOFF = 15.0
_EXP_OVERFLOW = 700.0


class ConvergenceError(RuntimeError):
    pass


class NoDemagnetizationWarning(UserWarning):
    """An adiabatic ramp from ``alpha0 <= 1`` gives no kinetic-energy reduction."""


# --------------------------------------------------------------------------
# modified Bessel functions of the first kind, orders 0 and 1


def _series_i(n: int, z: float) -> float:
    h = 0.5 * z
    term = h ** n / math.factorial(n)
    total = term
    q = h * h
    m = 0
    while True:
        m += 1
        term *= q / (m * (m + n))
        total += term
        if term < 1e-17 * total or m > 200:
            return total


def _asymptotic_ie(n: int, z: float) -> float:
    # e^{-z} I_n(z) ~ (2 pi z)^{-1/2} sum_k (-1)^k a_k(n) / z^k
    mu = 4.0 * n * n
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total / math.sqrt(2.0 * math.pi * z)


def _bessel_ie_scalar(n: int, z: float) -> float:
    if not math.isfinite(z):
        if z == math.inf:
            return 0.0
        raise ValueError(f"non-finite argument {z!r}")
    sign = 1.0
    if z < 0:
        z = -z
        sign = -1.0 if n == 1 else 1.0
    if z < SERIES_CUTOFF:
        return sign * _series_i(n, z) * math.exp(-z)
    return sign * _asymptotic_ie(n, z)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _apply(fn, z):
    if np.ndim(z) == 0:
        return fn(float(z))
    z = np.asarray(z, dtype=float)
    return np.vectorize(fn, otypes=[float])(z)


def bessel_ie(order: int, z):
    """Exponentially scaled ``exp(-|z|) I_n(z)`` for ``n`` in {0, 1}."""
    if order not in (0, 1):
        raise ValueError("only orders 0 and 1 are supported")
    return _apply(lambda s: _bessel_ie_scalar(order, s), z)


def bessel_i(order: int, z):
    """Modified Bessel function ``I_n(z)`` for ``n`` in {0, 1}.

    Raises
    ------
    OverflowError
        When ``|z|`` is too large for a double; use :func:`bessel_ie` or
        :func:`log_i0` instead.
    """
    if np.any(np.abs(z) > _EXP_OVERFLOW):
        raise OverflowError("I_n(z) overflows for |z| > 700; use the scaled bessel_ie")

    def one(s):
        if abs(s) < SERIES_CUTOFF:
            v = _series_i(order, abs(s))
            return -v if (order == 1 and s < 0) else v
        return _bessel_ie_scalar(order, s) * math.exp(abs(s))

    if order not in (0, 1):
        raise ValueError("only orders 0 and 1 are supported")
    return _apply(one, z)


def log_i0(z):
    """``ln I0(z)`` evaluated as ``ln(exp(-|z|) I0(z)) + |z|``."""
    return _apply(lambda s: math.log(_bessel_ie_scalar(0, s)) + abs(s), z)


def bessel_ratio(z):
    """``I1(z) / I0(z)``."""
    return _apply(lambda s: _bessel_ie_scalar(1, s) / _bessel_ie_scalar(0, s), z)


def _ratio_derivative(z: float) -> float:
    # d/dz I1/I0 = 1 - r/z - r^2
    if abs(z) < 1e-6:
        return 0.5 - 3.0 * z * z / 16.0
    r = _bessel_ie_scalar(1, z) / _bessel_ie_scalar(0, z)
    return 1.0 - r / z - r * r


# --------------------------------------------------------------------------
# fixpoint and free energy


@dataclass(frozen=True)
class FixpointSolution:
    alpha: float
    theta: float
    residual: float
    curvature: float  # d^2 F / d theta^2 at theta

    @property
    def branch(self) -> str:
        return "stable" if self.curvature >= 0 else "unstable"


def free_energy(theta, alpha):
    """Single-particle free energy ``alpha theta^2 - ln I0(2 alpha theta)``."""
    theta = np.asarray(theta, dtype=float)
    out = alpha * theta ** 2 - log_i0(2.0 * alpha * theta)
    return float(out) if np.ndim(out) == 0 else out


def free_energy_curvature(theta: float, alpha: float) -> float:
    """``d^2 F / d theta^2 = 2 alpha - 4 alpha^2 r'(2 alpha theta)``."""
    return 2.0 * alpha - 4.0 * alpha * alpha * _ratio_derivative(2.0 * alpha * theta)


def _fixpoint_residual(theta: float, alpha: float) -> float:
    return theta - _bessel_ie_scalar(1, 2 * alpha * theta) / _bessel_ie_scalar(0, 2 * alpha * theta)


def magnetization_fixpoint(alpha: float) -> FixpointSolution:
    """Stable nonnegative solution of ``theta = I1(2 alpha theta) / I0(2 alpha theta)``.

    ``theta = 0`` for ``alpha <= 1``.  Above threshold the unique root in
    ``(0, 1)`` is bracketed by bisection to 1e-8 and polished by Newton.
    """
    alpha = float(alpha)
    if not math.isfinite(alpha):
        raise ParameterError(f"alpha must be finite, got {alpha!r}")
    if alpha < 0:
        raise ParameterError(f"alpha must be nonnegative, got {alpha!r}")
    if alpha <= 1.0:
        return FixpointSolution(alpha, 0.0, 0.0, free_energy_curvature(0.0, alpha))

    lo, hi = 0.0, 1.0
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if _fixpoint_residual(mid, alpha) < 0:
            lo = mid
        else:
            hi = mid
    theta = 0.5 * (lo + hi)
    for _ in range(50):
        g = _fixpoint_residual(theta, alpha)
        dg = 1.0 - 2.0 * alpha * _ratio_derivative(2.0 * alpha * theta)
        step = g / dg
        nxt = theta - step
        if not lo <= nxt <= hi:
            break
        theta = nxt
        if abs(step) < 1e-15 * max(theta, 1e-300):
            break
    res = abs(_fixpoint_residual(theta, alpha))
    return FixpointSolution(alpha, theta, res, free_energy_curvature(theta, alpha))


def theta_of_alpha(alpha):
    """Vectorized ``theta(alpha)``."""
    return _apply(lambda a: magnetization_fixpoint(a).theta, alpha)


# --------------------------------------------------------------------------
# adiabatic energy ratios


def _log_weight(alpha: float) -> float:
    # ln[I0(2 a th) exp(-2 a th^2)]
    th = magnetization_fixpoint(alpha).theta
    return float(log_i0(2.0 * alpha * th)) - 2.0 * alpha * th * th


def energy_ratio(alpha0: float, alpha1: float) -> float:
    """Kinetic-energy ratio ``E1/E0`` after an adiabatic change ``alpha0 -> alpha1``."""
    if alpha0 < 0 or alpha1 < 0:
        raise ParameterError("alpha must be nonnegative")
    return math.exp(2.0 * (_log_weight(alpha0) - _log_weight(alpha1)))


def demag_ratio(alpha0: float) -> float:
    """``E1/E0 = [I0(2 a0 th0) exp(-2 a0 th0^2)]^2`` for a ramp into the homogeneous phase.

    For ``alpha0 <= 1`` there is nothing to demagnetize: returns 1 and emits
    :class:`NoDemagnetizationWarning`.
    """
    if alpha0 <= 1.0:
        warnings.warn(f"alpha0={alpha0} <= 1: no demagnetization gain",
                      NoDemagnetizationWarning, stacklevel=2)
        return 1.0
    return math.exp(2.0 * _log_weight(alpha0))


def asymptotic_ratio(alpha0):
    """Large-``alpha0`` limit ``e / (4 pi alpha0)`` of :func:`demag_ratio`."""
    a = np.asarray(alpha0, dtype=float)
    if np.any(a <= 0):
        raise ParameterError("alpha0 must be positive")
    return _out(math.e / (4.0 * math.pi * a))


# --------------------------------------------------------------------------
# two-stage protocol


def _require_red(delta_c):
    if delta_c >= 0:
        raise ParameterError("delta_c must be negative")


def ferro_kinetic_energy(v_fer, delta_c: float, kappa: float):
    """Stationary kinetic energy of the organized phase under cavity cooling.

    ``(delta_c^2 + kappa^2 + 4 omega0^2) / (-8 delta_c)`` with trap frequency
    ``omega0^2 = 4 V``.
    """
    _require_red(delta_c)
    v = np.asarray(v_fer, dtype=float)
    if np.any(v < 0):
        raise ParameterError("v_fer must be nonnegative")
    return _out((delta_c ** 2 + kappa ** 2 + 16.0 * v) / (-8.0 * delta_c))


def paramagnetic_energy(e_fer, v_fer):
    """Final energy after an ideal ramp from the organized state: ``(e/2pi) E_fer^2 / V_fer``."""
    v = np.asarray(v_fer, dtype=float)
    if np.any(v <= 0):
        raise ParameterError("v_fer must be positive")
    return _out(math.e / (2.0 * math.pi) * np.asarray(e_fer, dtype=float) ** 2 / v)


def optimal_coupling(delta_c: float, kappa: float) -> float:
    """Coupling that minimizes :func:`paramagnetic_energy`: ``(delta_c^2 + kappa^2) / 16``."""
    _require_red(delta_c)
    return (delta_c ** 2 + kappa ** 2) / 16.0


def min_kinetic_energy(delta_c: float, kappa: float) -> float:
    """``(e / 2 pi) (delta_c^2 + kappa^2) / delta_c^2``."""
    _require_red(delta_c)
    return math.e / (2.0 * math.pi) * (delta_c ** 2 + kappa ** 2) / delta_c ** 2


@dataclass(frozen=True)
class ProtocolOptimum:
    v_fer_opt: float
    e_kin_fer: float
    e_kin_min: float
    omega_0: float

    @property
    def alpha(self) -> float:
        return self.v_fer_opt / (2.0 * self.e_kin_fer)


def protocol_optimum(delta_c: float, kappa: float) -> ProtocolOptimum:
    v = optimal_coupling(delta_c, kappa)
    return ProtocolOptimum(
        v_fer_opt=v,
        e_kin_fer=ferro_kinetic_energy(v, delta_c, kappa),
        e_kin_min=min_kinetic_energy(delta_c, kappa),
        omega_0=math.sqrt(4.0 * v),
    )


# --------------------------------------------------------------------------
# cavity field


def adiabatic_field(theta_total, params: SystemParams):
    """Instantaneous stationary field ``(E_r, E_i)`` for magnetization ``Theta``."""
    amp = params.n_particles * params.scatter_rate * np.asarray(theta_total) / params.cavity_denominator
    return params.delta_c * amp, -params.kappa * amp


def intensity_formula(theta_sq_mean, params: SystemParams):
    """Photon number ``N^2 S^2 <Theta^2> / (delta_c^2 + kappa^2)``."""
    n, s = params.n_particles, params.scatter_rate
    return n * n * s * s * np.asarray(theta_sq_mean) / params.cavity_denominator


# --------------------------------------------------------------------------
# finite-N oracle


def _grid_theta2(n: int, alpha: float, m: int) -> float:
    # Periodic trapezoid rule on an m^n grid.  The integrand depends on the
    # positions only through the multiset of cos values, so sum over multisets
    # of the m//2+1 distinct values with multinomial weights.
    k = np.arange(m // 2 + 1)
    cos_vals = np.cos(2.0 * np.pi * k / m)
    mult = np.full(len(k), 2.0)
    mult[0] = 1.0
    if m % 2 == 0:
        mult[-1] = 1.0
    combos = np.fromiter(itertools.combinations_with_replacement(range(len(k)), n),
                         dtype=np.dtype((np.int16, n)))
    combos = combos.reshape(-1, n)
    # log multinomial: ln n! - sum ln(count!) via run positions in sorted rows
    run = np.ones(len(combos))
    log_fact = np.zeros(len(combos))
    for j in range(1, n):
        same = combos[:, j] == combos[:, j - 1]
        run = np.where(same, run + 1.0, 1.0)
        log_fact += np.log(run)
    logw = math.lgamma(n + 1) - log_fact + np.log(mult)[combos].sum(axis=1)
    theta = cos_vals[combos].sum(axis=1) / n
    expo = logw + n * alpha * theta ** 2
    w = np.exp(expo - expo.max())
    return float(np.dot(w, theta ** 2) / w.sum())


def brute_force_partition_check(n_small: int, alpha: float, tol: float = 1e-10,
                                grid: int | None = None) -> float:
    """Exact finite-N ``<Theta^2>`` under the weight ``exp(N alpha Theta^2)``.

    Direct quadrature over ``[0, 2 pi)^N``; compare against ``theta(alpha)^2``,
    which it approaches as ``N`` grows.

    Raises
    ------
    ConvergenceError
        If refining the grid changes the result by more than ``tol``.
    """
    if not 1 <= n_small <= 8:
        raise ParameterError("n_small must be in 1..8")
    if alpha < 0:
        raise ParameterError("alpha must be nonnegative")
    m = grid or (32 + 4 * math.ceil(alpha))
    a = _grid_theta2(n_small, alpha, m)
    b = _grid_theta2(n_small, alpha, m + 8)
    if abs(a - b) > tol:
        raise ConvergenceError(f"quadrature not converged: {a} vs {b} (grid {m})")
    return b
