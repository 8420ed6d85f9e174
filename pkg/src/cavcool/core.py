"""System parameters, unit conventions and regime checks.

All quantities are dimensionless.  The recoil frequency ``omega_R = hbar k^2 / 2m``
is the unit of rate, ``hbar omega_R`` the unit of energy, ``hbar k`` the unit of
momentum and ``k x`` (a phase in ``[0, 2 pi)``) the position.  In these units

    dx = 2 p dt,    dp = -2 V sin(x) Theta dt,

and the single-particle kinetic energy is ``<p^2>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

HBAR = 1.054571817e-34  # J s


class ParameterError(ValueError):
    """Raised for parameter sets outside the supported regime."""


def derive_scatter_rate(g: float, omega_rabi: float, delta_a: float) -> float:
    """Coherent scattering rate ``S = g * Omega / Delta_a``."""
    if delta_a == 0:
        raise ParameterError("atomic detuning delta_a must be nonzero")
    return g * omega_rabi / delta_a


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters in recoil units.

    Parameters
    ----------
    n_particles : int
        Number of particles ``N``.
    kappa : float
        Cavity field decay rate.
    delta_c : float
        Pump-cavity detuning; must be negative.
    scatter_rate : float, optional
        Coherent scattering rate ``S``; its sign follows the atomic detuning
        and only ``S**2`` enters the coupling.  Derived from ``g``, ``omega_rabi`` and
        ``delta_a`` when all three are given.
    g, omega_rabi, delta_a : float, optional
        Vacuum Rabi frequency, pump Rabi frequency, atomic detuning.
    """

    n_particles: int
    kappa: float
    delta_c: float
    scatter_rate: float | None = None
    g: float | None = None
    omega_rabi: float | None = None
    delta_a: float | None = None

    def __post_init__(self):
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise ParameterError(f"n_particles must be a positive integer, got {self.n_particles!r}")
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ParameterError(f"kappa must be positive, got {self.kappa!r}")
        if not (math.isfinite(self.delta_c) and self.delta_c < 0):
            raise ParameterError(f"delta_c must be negative (cooling regime), got {self.delta_c!r}")
        drive = (self.g, self.omega_rabi, self.delta_a)
        if all(v is not None for v in drive):
            s = derive_scatter_rate(*drive)
            if self.scatter_rate is not None and not math.isclose(s, self.scatter_rate, rel_tol=1e-12):
                raise ParameterError(
                    f"scatter_rate={self.scatter_rate} inconsistent with g*Omega/Delta_a={s}")
            object.__setattr__(self, "scatter_rate", s)
        if self.scatter_rate is None:
            object.__setattr__(self, "scatter_rate", 0.0)
        if not math.isfinite(self.scatter_rate):
            raise ParameterError(f"scatter_rate must be finite, got {self.scatter_rate!r}")

    @property
    def cavity_denominator(self) -> float:
        """``delta_c**2 + kappa**2``."""
        return self.delta_c ** 2 + self.kappa ** 2

    def with_scatter_rate(self, s: float) -> "SystemParams":
        return replace(self, scatter_rate=s, g=None, omega_rabi=None, delta_a=None)

    def with_coupling(self, v: float) -> "SystemParams":
        """Copy with ``S`` chosen such that ``coupling_strength`` equals ``v``."""
        return self.with_scatter_rate(scatter_rate_for_coupling(v, self))


def coupling_strength(params: SystemParams) -> float:
    """Cavity-mediated coupling ``V = -delta_c N S^2 / (delta_c^2 + kappa^2)``."""
    if params.delta_c >= 0:
        raise ParameterError("delta_c must be negative")
    s = params.scatter_rate
    return -params.delta_c * params.n_particles * s * s / params.cavity_denominator


def scatter_rate_for_coupling(v, params: SystemParams):
    """Invert :func:`coupling_strength`: the ``S >= 0`` that produces coupling ``v``.

    Accepts scalars or arrays.
    """
    import numpy as np

    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ParameterError("coupling must be nonnegative")
    s = np.sqrt(v * params.cavity_denominator / (-params.delta_c * params.n_particles))
    return float(s) if s.ndim == 0 else s


@dataclass(frozen=True)
class RegimeReport:
    doppler_ratio: float
    elimination_ratio: float
    stark_ratio: float | None
    threshold: float

    @property
    def ok(self) -> bool:
        ratios = [self.doppler_ratio, self.elimination_ratio]
        if self.stark_ratio is not None:
            ratios.append(self.stark_ratio)
        return all(r <= self.threshold for r in ratios)


def regime_check(params: SystemParams, momentum_width: float, threshold: float = 0.1) -> RegimeReport:
    """Margins of the adiabatic-elimination regime.

    ``doppler_ratio`` is ``(k dp / m) / min(kappa, |delta_c|)``, which in recoil
    units is ``2 dp / min(kappa, |delta_c|)``; ``elimination_ratio`` is
    ``sqrt(N) S / kappa^2``.  When the drive fields are known the Stark shift
    ratio ``N U / min(kappa, |delta_c|)`` with ``U = g^2 / delta_a`` is included.
    """
    doppler = 2.0 * abs(momentum_width) / min(params.kappa, abs(params.delta_c))
    elim = math.sqrt(params.n_particles) * abs(params.scatter_rate) / params.kappa ** 2
    stark = None
    if params.g is not None and params.delta_a:
        u = params.g ** 2 / params.delta_a
        stark = abs(params.n_particles * u) / min(params.kappa, abs(params.delta_c))
    return RegimeReport(doppler, elim, stark, threshold)


@dataclass(frozen=True)
class UnitSystem:
    """Conversion between recoil units and SI for a given wavenumber and mass."""

    wavenumber: float  # 1/m
    mass: float  # kg

    @property
    def omega_r(self) -> float:
        return HBAR * self.wavenumber ** 2 / (2.0 * self.mass)

    def time_to_si(self, t):
        return t / self.omega_r

    def time_from_si(self, t):
        return t * self.omega_r

    def rate_to_si(self, r):
        return r * self.omega_r

    def rate_from_si(self, r):
        return r / self.omega_r

    def energy_to_si(self, e):
        return e * HBAR * self.omega_r

    def energy_from_si(self, e):
        return e / (HBAR * self.omega_r)

    def momentum_to_si(self, p):
        return p * HBAR * self.wavenumber

    def momentum_from_si(self, p):
        return p / (HBAR * self.wavenumber)

    def position_to_si(self, x):
        return x / self.wavenumber

    def position_from_si(self, x):
        return x * self.wavenumber

    def params_to_si(self, params: SystemParams) -> dict:
        return {
            "n_particles": params.n_particles,
            "kappa": self.rate_to_si(params.kappa),
            "delta_c": self.rate_to_si(params.delta_c),
            "scatter_rate": self.rate_to_si(params.scatter_rate),
        }

    def params_from_si(self, si: dict) -> SystemParams:
        return SystemParams(
            n_particles=si["n_particles"],
            kappa=self.rate_from_si(si["kappa"]),
            delta_c=self.rate_from_si(si["delta_c"]),
            scatter_rate=self.rate_from_si(si["scatter_rate"]),
        )
