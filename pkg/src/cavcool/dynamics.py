"""Time integration of the dissipative and the conservative particle models.

Two models share the particle phase space (positions ``x`` as phases in
``[0, 2 pi)``, momenta ``p`` in units of ``hbar k``):

``reduced``
    ``dx = 2 p dt``, ``dp = -2 V(t) sin(x) Theta dt``; integrated with velocity
    Verlet.  Conserves ``H_eff = sum p^2 - N V Theta^2`` at fixed ``V``.
``full``
    Particles coupled to the two noisy cavity quadratures.  Kick-drift-kick for
    the particles and the exact Ornstein-Uhlenbeck propagator for the field,
    so the step size is limited only by the particle motion.  Explicit
    Euler-Maruyama is available as a cross-check (``scheme="euler_maruyama"``).

The engine works on batches: arrays of shape ``(B, N)`` holding ``B``
independent trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from . import kernels
from .core import ParameterError, SystemParams, scatter_rate_for_coupling
from .meanfield import adiabatic_field, magnetization_fixpoint

TWO_PI = 2.0 * np.pi
MOTION_BOUND = 0.05


class IntegratorError(RuntimeError):
    """Non-finite state or an invalid step size."""

    def __init__(self, message, step=None, trajectory=None):
        super().__init__(message)
        self.step = step
        self.trajectory = trajectory


# --------------------------------------------------------------------------
# state


@dataclass
class ParticleEnsemble:
    positions: np.ndarray
    momenta: np.ndarray

    def __post_init__(self):
        self.positions = np.mod(np.asarray(self.positions, dtype=float), TWO_PI)
        self.positions[self.positions >= TWO_PI] = 0.0
        self.momenta = np.asarray(self.momenta, dtype=float)
        if self.positions.shape != self.momenta.shape or self.positions.ndim != 1:
            raise ValueError("positions and momenta must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(self.positions)) and np.all(np.isfinite(self.momenta))):
            raise ValueError("non-finite particle state")

    @property
    def n(self) -> int:
        return len(self.positions)

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(self.positions.copy(), self.momenta.copy())


@dataclass
class CavityField:
    e_r: float = 0.0
    e_i: float = 0.0

    @property
    def intensity(self) -> float:
        return self.e_r ** 2 + self.e_i ** 2


# --------------------------------------------------------------------------
# schedules


SCHEDULE_KINDS = ("quench", "hold", "exp_ramp", "piecewise")


@dataclass(frozen=True)
class Schedule:
    """Coupling ``V(t)`` on a stage-local clock starting at ``t = 0``.

    ``quench`` and ``hold`` are constant at ``v0`` (a quench is a hold entered
    from a different coupling).  ``exp_ramp`` is ``v0 * 10**(-decades t/t_ramp)``
    up to ``t_ramp`` and constant afterwards.  ``piecewise`` chains
    ``segments = ((duration, Schedule), ...)``, each on its own local clock.
    """

    kind: str = "hold"
    v0: float = 0.0
    t_ramp: float | None = None
    decades: float = 5.0
    segments: tuple = ()

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ParameterError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "exp_ramp" and not (self.t_ramp and self.t_ramp > 0):
            raise ParameterError("exp_ramp needs t_ramp > 0")
        if self.kind == "piecewise" and not self.segments:
            raise ParameterError("piecewise schedule needs segments")
        if self.kind != "piecewise" and self.v0 < 0:
            raise ParameterError("coupling must be nonnegative")

    def value(self, t):
        return schedule_value(self, t)

    def max_value(self) -> float:
        if self.kind == "piecewise":
            return max(s.max_value() for _, s in self.segments)
        return self.v0

    @property
    def natural_duration(self) -> float | None:
        if self.kind == "exp_ramp":
            return self.t_ramp
        if self.kind == "piecewise":
            return float(sum(d for d, _ in self.segments))
        return None


def schedule_value(sched: Schedule, t):
    """``V(t)`` for scalar or array ``t >= 0``."""
    t = np.asarray(t, dtype=float)
    if sched.kind in ("quench", "hold"):
        out = np.full(t.shape, float(sched.v0))
    elif sched.kind == "exp_ramp":
        tc = np.minimum(t, sched.t_ramp)
        out = sched.v0 * 10.0 ** (-sched.decades * tc / sched.t_ramp)
    else:
        out = np.empty(t.shape)
        start = 0.0
        rest = np.ones(t.shape, dtype=bool)
        for i, (dur, seg) in enumerate(sched.segments):
            last = i == len(sched.segments) - 1
            mask = rest & ((t < start + dur) | last)
            out[mask] = schedule_value(seg, t[mask] - start)
            rest &= ~mask
            start += dur
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# integrator configuration


@dataclass(frozen=True)
class IntegratorConfig:
    """Step-size and sampling settings.

    ``dt=None`` picks ``courant / max(omega0, 2 p_scale)`` from the run's
    largest coupling and initial momentum scale.  Every run checks
    ``dt <= 0.05 / omega0`` and ``dt <= 0.05 / max|2p|`` at its start.
    """

    dt: float | None = None
    sampler_stride: int | None = None
    sample_dt: float | None = None
    scheme: str = "hybrid"  # or "euler_maruyama" (full model only)
    courant: float = 0.025
    backend: str | None = None

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ParameterError("dt must be positive")
        if self.scheme not in ("hybrid", "euler_maruyama"):
            raise ParameterError(f"unknown scheme {self.scheme!r}")
        if not 0 < self.courant <= MOTION_BOUND:
            raise ParameterError(f"courant must be in (0, {MOTION_BOUND}]")

    def stride(self, dt: float) -> int:
        if self.sampler_stride is not None:
            return max(1, int(self.sampler_stride))
        if self.sample_dt is not None:
            return max(1, int(round(self.sample_dt / dt)))
        return 1


def trap_frequency(v: float) -> float:
    """Harmonic frequency ``sqrt(4 V)`` of a particle at the bottom of a saturated lattice."""
    return 2.0 * math.sqrt(max(v, 0.0))


def auto_dt(v_max: float, p_scale: float, courant: float = 0.025) -> float:
    rate = max(trap_frequency(v_max), 2.0 * p_scale, 1e-12)
    return courant / rate


def check_step(dt: float, v_max: float, momenta) -> None:
    w0 = trap_frequency(v_max)
    if w0 * dt > MOTION_BOUND * (1 + 1e-12):
        raise IntegratorError(f"dt={dt:g} exceeds {MOTION_BOUND}/omega0 (omega0={w0:g})")
    pmax = float(np.max(np.abs(momenta))) if np.size(momenta) else 0.0
    if 2.0 * pmax * dt > MOTION_BOUND * (1 + 1e-12):
        raise IntegratorError(f"dt={dt:g} exceeds {MOTION_BOUND}/max|2p| (max|p|={pmax:g})")


# --------------------------------------------------------------------------
# single-ensemble operations


def order_parameter(positions) -> float | np.ndarray:
    """``Theta = mean_j cos(x_j)``; accepts an ensemble or arrays ``(N,)``/``(B, N)``."""
    if isinstance(positions, ParticleEnsemble):
        positions = positions.positions
    th = np.cos(np.asarray(positions)).mean(axis=-1)
    return float(th) if np.ndim(th) == 0 else th


def effective_hamiltonian(ensemble: ParticleEnsemble, v: float) -> float:
    """``sum_j p_j^2 - N V Theta^2`` (kinetic term in units of ``hbar omega_R``)."""
    th = order_parameter(ensemble)
    return float(np.sum(ensemble.momenta ** 2) - ensemble.n * v * th * th)


def reduced_force(positions, v: float) -> np.ndarray:
    """``dp_j/dt = -2 V sin(x_j) Theta`` of the conservative model."""
    positions = np.asarray(positions, dtype=float)
    return -2.0 * v * np.sin(positions) * order_parameter(positions)


def _batch(ensemble: ParticleEnsemble):
    # fresh copies: the kernels work in place
    return ensemble.positions[None, :].copy(), ensemble.momenta[None, :].copy()


def step_reduced(ensemble: ParticleEnsemble, v_of_t: Schedule, t: float, dt: float,
                 backend: str | None = None) -> ParticleEnsemble:
    """One velocity-Verlet step of the conservative model from ``t`` to ``t + dt``."""
    x, p = _batch(ensemble)
    grid = np.asarray(schedule_value(v_of_t, np.array([t, t + dt])), dtype=float)
    kernels.get_backend(backend).reduced_steps(x, p, grid, dt)
    _check_finite(x, p, None, 0)
    return ParticleEnsemble(x[0], p[0])


def step_full(ensemble: ParticleEnsemble, field: CavityField, s_of_t, t: float, dt: float,
              rng: np.random.Generator, params: SystemParams, scheme: str = "hybrid",
              backend: str | None = None):
    """One step of the dissipative model.

    ``s_of_t`` gives the scattering rate: a callable ``S(t)`` or a
    :class:`Schedule` of the coupling ``V(t)``, converted with ``params``.
    """
    x, p = _batch(ensemble)
    f = np.array([[field.e_r, field.e_i]])
    ts = np.array([t, t + dt])
    if isinstance(s_of_t, Schedule):
        s = np.asarray(scatter_rate_for_coupling(schedule_value(s_of_t, ts), params), dtype=float)
    else:
        s = np.asarray([s_of_t(t), s_of_t(t + dt)], dtype=float)
    noise = rng.standard_normal((1, 1, 2))
    k = kernels.get_backend(backend)
    step = k.full_steps if scheme == "hybrid" else k.em_steps
    step(x, p, f, s, noise, dt, params.kappa, params.delta_c)
    _check_finite(x, p, f, 0)
    return ParticleEnsemble(x[0], p[0]), CavityField(float(f[0, 0]), float(f[0, 1]))


def coupled_ou_noise(fine, ratio: int, dt: float, kappa: float, delta_c: float) -> np.ndarray:
    """Coarse-step noise for the exact field update, built from fine increments.

    ``fine`` holds the standard-normal quadrature increments ``(B, m*ratio, 2)``
    of an Euler-Maruyama run with step ``dt/ratio``.  Each coarse step receives
    the fine increments weighted by the field propagator over the remainder of
    the step, normalized to unit variance per quadrature, so both integrators
    are driven by the same Brownian path.  Returns ``(B, m, 2)``.
    """
    fine = np.asarray(fine, dtype=float)
    B, M, _ = fine.shape
    if M % ratio:
        raise ValueError("fine noise length must be a multiple of ratio")
    h = dt / ratio
    mu = complex(-kappa, delta_c)
    w = np.exp(mu * h * np.arange(ratio - 1, -1, -1))
    z = (fine[..., 0] + 1j * fine[..., 1]).reshape(B, M // ratio, ratio)
    zeta = z @ w / math.sqrt(float(np.sum(np.abs(w) ** 2)))
    return np.ascontiguousarray(np.stack([zeta.real, zeta.imag], axis=-1))


def _check_finite(x, p, f, step):
    bad = ~(np.isfinite(x).all(axis=1) & np.isfinite(p).all(axis=1))
    if f is not None:
        bad |= ~np.isfinite(f).all(axis=1)
    if bad.any():
        b = int(np.flatnonzero(bad)[0])
        raise IntegratorError(f"non-finite state in trajectory {b} at step {step}",
                              step=step, trajectory=b)


# --------------------------------------------------------------------------
# thermal states


def sample_thermal_state(alpha: float, e_kin: float, params: SystemParams | int,
                         rng: np.random.Generator, sign: int = 1) -> ParticleEnsemble:
    """Mean-field thermal state at coupling ``alpha = V/(2 E_kin)``.

    Momenta are Gaussian with ``<p^2> = e_kin``; positions are i.i.d. von Mises
    with concentration ``2 alpha theta(alpha)`` centred at 0 (``sign=+1``) or
    ``pi`` (``sign=-1``).  ``sign=0`` draws the sign from ``rng``.
    """
    if not e_kin > 0:
        raise ParameterError("e_kin must be positive")
    n = params.n_particles if isinstance(params, SystemParams) else int(params)
    theta = magnetization_fixpoint(alpha).theta
    if sign == 0:
        sign = 1 if rng.random() < 0.5 else -1
    mu = 0.0 if sign > 0 else np.pi
    x = rng.vonmises(mu, 2.0 * alpha * theta, size=n)
    p = rng.normal(0.0, math.sqrt(e_kin), size=n)
    return ParticleEnsemble(x, p)


def initial_field(theta: float, params: SystemParams, rng: np.random.Generator | None,
                  mode: str = "adiabatic") -> CavityField:
    """Field at ``t=0``: stationary mean for ``Theta`` (``"adiabatic"``) or zero
    (``"vacuum"``), plus stationary vacuum fluctuations of variance 1/4 each."""
    if mode == "adiabatic":
        er, ei = adiabatic_field(theta, params)
    elif mode == "vacuum":
        er, ei = 0.0, 0.0
    else:
        raise ParameterError(f"unknown field init {mode!r}")
    if rng is not None:
        er, ei = np.asarray([er, ei]) + rng.normal(0.0, 0.5, size=2)
    return CavityField(float(er), float(ei))


# --------------------------------------------------------------------------
# batched engine


@dataclass
class TrajectorySeries:
    """Per-trajectory observables on a common frame grid (shape ``(B, F)``)."""

    t: np.ndarray
    v: np.ndarray
    m2: np.ndarray
    m4: np.ndarray
    theta: np.ndarray
    intensity: np.ndarray
    h_eff: np.ndarray
    dt: float
    nsteps: int
    meta: dict = dc_field(default_factory=dict)

    @classmethod
    def concat(cls, parts: Sequence["TrajectorySeries"]) -> "TrajectorySeries":
        first = parts[0]
        return cls(
            t=first.t, v=first.v,
            m2=np.concatenate([s.m2 for s in parts]),
            m4=np.concatenate([s.m4 for s in parts]),
            theta=np.concatenate([s.theta for s in parts]),
            intensity=np.concatenate([s.intensity for s in parts]),
            h_eff=np.concatenate([s.h_eff for s in parts]),
            dt=first.dt, nsteps=first.nsteps, meta=dict(first.meta),
        )


def _frame(x, p, f, v, s, params, model):
    n = x.shape[1]
    p2 = p * p
    m2 = p2.mean(axis=1)
    m4 = (p2 * p2).mean(axis=1)
    th = np.cos(x).mean(axis=1)
    if model == "full":
        inten = f[:, 0] ** 2 + f[:, 1] ** 2
    else:
        inten = n * n * s * s * th * th / params.cavity_denominator
    h = p2.sum(axis=1) - n * v * th * th
    return m2, m4, th, inten, h


def integrate(x: np.ndarray, p: np.ndarray, field: np.ndarray | None, model: str,
              params: SystemParams, sched: Schedule, duration: float, dt: float,
              stride: int = 1, noise_rngs: Sequence[np.random.Generator] | None = None,
              scheme: str = "hybrid", backend: str | None = None,
              check: bool = True) -> TrajectorySeries:
    """Advance a batch in place over ``[0, duration]`` of the schedule's clock.

    ``x``, ``p`` are ``(B, N)`` C-contiguous arrays; ``field`` is ``(B, 2)``
    (full model only).  Each trajectory draws its field noise from its own
    generator in ``noise_rngs``, in step order, so the realization does not
    depend on how trajectories are batched.
    """
    if model not in ("reduced", "full"):
        raise ParameterError(f"unknown model {model!r}")
    if model == "full" and (field is None or noise_rngs is None):
        raise ParameterError("full model needs a field and per-trajectory noise streams")
    if duration < 0:
        raise ParameterError("duration must be nonnegative")
    B, N = x.shape
    if N != params.n_particles:
        raise ParameterError(f"state has {N} particles, params say {params.n_particles}")
    nsteps = int(math.ceil(duration / dt - 1e-9)) if duration > 0 else 0
    dt = duration / nsteps if nsteps else dt
    if check and nsteps:
        check_step(dt, sched.max_value(), p)
    k = kernels.get_backend(backend)
    step = {"reduced": k.reduced_steps,
            "full": k.full_steps if scheme == "hybrid" else k.em_steps}[model]

    marks = list(range(0, nsteps, max(1, stride))) + [nsteps]
    marks = sorted(set(marks))
    F = len(marks)
    t = np.array(marks, dtype=float) * dt
    v = np.asarray(schedule_value(sched, t), dtype=float).reshape(F)
    s_frames = np.asarray(scatter_rate_for_coupling(v, params), dtype=float).reshape(F)
    out = {key: np.empty((B, F)) for key in ("m2", "m4", "theta", "intensity", "h_eff")}

    def record(i):
        vals = _frame(x, p, field, v[i], s_frames[i], params, model)
        for key, val in zip(("m2", "m4", "theta", "intensity", "h_eff"), vals):
            out[key][:, i] = val

    record(0)
    for i in range(1, F):
        n0, n1 = marks[i - 1], marks[i]
        tg = np.arange(n0, n1 + 1) * dt
        vg = np.asarray(schedule_value(sched, tg), dtype=float)
        if model == "reduced":
            step(x, p, vg, dt)
        else:
            sg = np.asarray(scatter_rate_for_coupling(vg, params), dtype=float)
            noise = np.empty((B, n1 - n0, 2))
            for b, g in enumerate(noise_rngs):
                noise[b] = g.standard_normal((n1 - n0, 2))
            step(x, p, field, sg, noise, dt, params.kappa, params.delta_c)
        _check_finite(x, p, field, n1)
        record(i)
    return TrajectorySeries(t=t, v=v, dt=dt, nsteps=nsteps, **out,
                            meta={"model": model, "scheme": scheme,
                                  "backend": kernels.BACKEND if backend is None else backend})


def run_protocol(initial: ParticleEnsemble | Sequence[ParticleEnsemble], model: str,
                 sched: Schedule, duration: float, cfg: IntegratorConfig,
                 params: SystemParams, rng: np.random.Generator | Sequence | None = None,
                 field: CavityField | Sequence[CavityField] | None = None):
    """Run one stage for one or several trajectories and return a ``RunRecord``.

    ``initial`` is copied; the final states are attached to the record as
    ``record.final_state``.  For the full model ``rng`` supplies the field noise
    (one generator per trajectory) and ``field`` the initial quadratures
    (default: adiabatic value plus vacuum noise drawn from ``rng``).
    """
    from .observables import RunRecord

    ensembles = [initial] if isinstance(initial, ParticleEnsemble) else list(initial)
    x = np.ascontiguousarray(np.stack([e.positions for e in ensembles]))
    p = np.ascontiguousarray(np.stack([e.momenta for e in ensembles]))
    rngs = None
    f = None
    if model == "full":
        if rng is None:
            raise ParameterError("full model needs a random stream")
        rngs = [rng] if isinstance(rng, np.random.Generator) else list(rng)
        if len(rngs) != len(ensembles):
            raise ParameterError("one random stream per trajectory")
        if field is None:
            p0 = params.with_coupling(schedule_value(sched, 0.0))
            fields = [initial_field(order_parameter(e), p0, g) for e, g in zip(ensembles, rngs)]
        else:
            fields = [field] if isinstance(field, CavityField) else list(field)
        f = np.array([[c.e_r, c.e_i] for c in fields], dtype=float)
    dt = cfg.dt
    if dt is None:
        p_scale = 5.0 * math.sqrt(float(np.mean(p * p))) if p.size else 0.0
        dt = auto_dt(sched.max_value(), p_scale, cfg.courant)
    series = integrate(x, p, f, model, params, sched, duration, dt,
                       stride=cfg.stride(dt), noise_rngs=rngs, scheme=cfg.scheme,
                       backend=cfg.backend)
    rec = RunRecord.from_series(series, params=params)
    rec.final_state = [ParticleEnsemble(x[b], p[b]) for b in range(len(ensembles))]
    if f is not None:
        rec.final_field = [CavityField(float(f[b, 0]), float(f[b, 1])) for b in range(len(ensembles))]
    return rec
