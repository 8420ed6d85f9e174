"""Estimators over particles, trajectories and field samples.

Moments are pooled over all particles of all trajectories.  Standard errors
are computed at the trajectory level, since particles in one trajectory are
correlated through the common cavity field.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .core import SystemParams

DEFAULT_BOOTSTRAP = 200
CSV_COLUMNS = ("t", "v", "e_kin_mean", "e_kin_stderr", "kurtosis", "theta2_mean", "intensity")


def _as_2d(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        raise ValueError("empty input")
    return a.reshape(1, -1) if a.ndim == 1 else a.reshape(a.shape[0], -1)


def bootstrap_stderr(per_traj, n_boot: int = DEFAULT_BOOTSTRAP, seed: int = 0) -> np.ndarray:
    """Bootstrap standard error of the trajectory mean.

    ``per_traj`` has shape ``(T,)`` or ``(T, F)``; trajectories are resampled
    with replacement ``n_boot`` times.  Returns zeros for a single trajectory.
    """
    a = np.asarray(per_traj, dtype=float)
    T = a.shape[0]
    if T < 2:
        return np.zeros(a.shape[1:]) if a.ndim > 1 else np.float64(0.0)
    rng = np.random.Generator(np.random.Philox(seed))
    counts = rng.multinomial(T, np.full(T, 1.0 / T), size=n_boot).astype(float)
    means = counts @ a.reshape(T, -1) / T
    se = means.std(axis=0, ddof=1)
    return se.reshape(a.shape[1:]) if a.ndim > 1 else se[0]


def kinetic_energy(momenta, n_boot: int = DEFAULT_BOOTSTRAP, seed: int = 0):
    """Mean ``p^2`` (kinetic energy in ``hbar omega_R``) and its trajectory-level error.

    ``momenta`` is ``(N,)`` for one trajectory or ``(T, N)``.
    """
    p = _as_2d(momenta)
    per_traj = (p * p).mean(axis=1)
    return float(per_traj.mean()), float(bootstrap_stderr(per_traj, n_boot, seed))


def kurtosis(momenta) -> float:
    """Pooled ``<p^4> / <p^2>^2``."""
    p = np.asarray(momenta, dtype=float)
    if p.size == 0:
        raise ValueError("empty input")
    p2 = p * p
    m2 = p2.mean()
    if m2 <= 0:
        raise ValueError("kurtosis undefined for all-zero momenta")
    return float((p2 * p2).mean() / (m2 * m2))


def magnetization_sq(positions) -> float:
    """Mean of ``Theta^2`` over trajectories; ``positions`` is ``(N,)`` or ``(T, N)``."""
    x = _as_2d(positions)
    th = np.cos(x).mean(axis=1)
    return float(np.mean(th * th))


def field_intensity(e_r, e_i) -> float:
    """Average of ``E_r^2 + E_i^2`` over all given samples."""
    e_r = np.asarray(e_r, dtype=float)
    e_i = np.asarray(e_i, dtype=float)
    if e_r.size == 0:
        raise ValueError("empty input")
    return float(np.mean(e_r * e_r + e_i * e_i))


def histogram(values, bins: int = 64, range=None, kind: str = "momentum"):
    """Normalized density estimate; returns ``(edges, density)``.

    For ``kind="position"`` the phases are shifted to ``[-pi, pi)`` and the
    default range is one period.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("empty input")
    if kind == "position":
        v = np.mod(v + np.pi, 2.0 * np.pi) - np.pi
        range = range or (-np.pi, np.pi)
    elif range is None:
        lim = float(np.max(np.abs(v))) or 1.0
        range = (-lim, lim)
    density, edges = np.histogram(v, bins=bins, range=range, density=True)
    return edges, density


@dataclass(frozen=True)
class ObservableFrame:
    t: float
    v: float
    e_kin_mean: float
    e_kin_stderr: float
    kurtosis: float
    theta2_mean: float
    intensity: float

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


@dataclass
class RunRecord:
    """Sampled observables of a set of trajectories on a shared time grid.

    The per-trajectory arrays have shape ``(T, F)``: ``m2`` and ``m4`` are the
    particle means of ``p^2`` and ``p^4``, ``theta`` the order parameter,
    ``intensity`` the field intensity (dissipative model) or its adiabatic
    value (conservative model), ``h_eff`` the effective Hamiltonian.
    """

    t: np.ndarray
    v: np.ndarray
    m2: np.ndarray
    m4: np.ndarray
    theta: np.ndarray
    intensity_traj: np.ndarray
    h_eff: np.ndarray
    meta: dict = dc_field(default_factory=dict)
    n_boot: int = DEFAULT_BOOTSTRAP
    boot_seed: int = 0
    final_state: list | None = None
    final_field: list | None = None

    @classmethod
    def from_series(cls, series, params: SystemParams | None = None, boot_seed: int = 0,
                    n_boot: int = DEFAULT_BOOTSTRAP, meta: dict | None = None) -> "RunRecord":
        m = dict(series.meta)
        m.update(dt=series.dt, nsteps=series.nsteps)
        if params is not None:
            m.update(n_particles=params.n_particles, kappa=params.kappa, delta_c=params.delta_c)
        m.update(meta or {})
        return cls(t=series.t, v=series.v, m2=series.m2, m4=series.m4, theta=series.theta,
                   intensity_traj=series.intensity, h_eff=series.h_eff, meta=m,
                   n_boot=n_boot, boot_seed=boot_seed)

    @property
    def trajectories(self) -> int:
        return self.m2.shape[0]

    @property
    def e_kin_mean(self) -> np.ndarray:
        return self.m2.mean(axis=0)

    @property
    def e_kin_stderr(self) -> np.ndarray:
        if not hasattr(self, "_se_cache"):
            self._se_cache = bootstrap_stderr(self.m2, self.n_boot, self.boot_seed)
        return self._se_cache

    @property
    def kurtosis(self) -> np.ndarray:
        return self.m4.mean(axis=0) / self.m2.mean(axis=0) ** 2

    @property
    def theta2_mean(self) -> np.ndarray:
        return (self.theta ** 2).mean(axis=0)

    @property
    def intensity(self) -> np.ndarray:
        return self.intensity_traj.mean(axis=0)

    def frames(self) -> list[ObservableFrame]:
        cols = [self.t, self.v, self.e_kin_mean, self.e_kin_stderr, self.kurtosis,
                self.theta2_mean, self.intensity]
        return [ObservableFrame(*(float(c[i]) for c in cols)) for i in range(len(self.t))]

    def table(self) -> np.ndarray:
        return np.column_stack([self.t, self.v, self.e_kin_mean, self.e_kin_stderr,
                                self.kurtosis, self.theta2_mean, self.intensity])

    def window_mean(self, name: str, t_min: float, t_max: float | None = None) -> tuple[float, float]:
        """Time average of a per-trajectory quantity over a window, with its
        trajectory-level bootstrap error."""
        arr = {"m2": self.m2, "theta2": self.theta ** 2, "intensity": self.intensity_traj,
               "h_eff": self.h_eff}[name]
        mask = self.t >= t_min
        if t_max is not None:
            mask &= self.t <= t_max
        per_traj = arr[:, mask].mean(axis=1)
        return float(per_traj.mean()), float(bootstrap_stderr(per_traj, self.n_boot, self.boot_seed))
