"""Many-trajectory runs, deterministic seeding and parameter sweeps.

Every trajectory owns counter-based random streams keyed by
``(base_seed, trajectory_index, substream)``.  Trajectories are processed in
fixed-size blocks, and each block's results land at fixed positions of the
aggregate, so the output is independent of the number of worker processes.
"""

from __future__ import annotations

import copy
import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, ExperimentConfig, config_from_dict, set_path
from .dynamics import (IntegratorError, Schedule, TrajectorySeries, auto_dt, initial_field,
                       integrate, order_parameter, sample_thermal_state, schedule_value)
from .meanfield import (asymptotic_ratio, demag_ratio, ferro_kinetic_energy,
                        magnetization_fixpoint, min_kinetic_energy, optimal_coupling)
from .observables import RunRecord

SUBSTREAM_INITIAL = 0
SUBSTREAM_FIELD = 1
SUBSTREAM_NOISE = 2
SUBSTREAMS = {"initial": SUBSTREAM_INITIAL, "field": SUBSTREAM_FIELD, "noise": SUBSTREAM_NOISE}
SEED_SCHEME = "Philox(SeedSequence(base_seed, spawn_key=(trajectory_index, substream)))"


class BudgetExceeded(RuntimeError):
    """The estimated work exceeds the configured particle-step budget."""

    def __init__(self, estimate: float, budget: float):
        super().__init__(
            f"estimated {estimate:.3g} particle-steps exceeds budget {budget:.3g}; "
            "rerun with --allow-over-budget (or raise 'budget') to proceed")
        self.estimate = estimate
        self.budget = budget


def trajectory_rng(base_seed: int, index: int, substream: int) -> np.random.Generator:
    """Independent generator for one trajectory and purpose."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(index), int(substream)))
    return np.random.Generator(np.random.Philox(ss))


def bootstrap_seed(base_seed: int, stage: int) -> int:
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(2 ** 32 - 1, int(stage)))
    return int(ss.generate_state(1, np.uint64)[0])


def experiment_dt(cfg: ExperimentConfig) -> float:
    """Step size used by every stage of an experiment.

    Fixed by the configuration alone (never by sampled states) so that the
    time grid is identical across trajectories and worker layouts.
    """
    if cfg.integrator.dt is not None:
        return cfg.integrator.dt
    v_max = max(st.schedule.max_value() for st in cfg.stages)
    return auto_dt(v_max, 5.0 * math.sqrt(cfg.initial.e_kin), cfg.integrator.courant)


def stage_steps(cfg: ExperimentConfig) -> list[int]:
    dt = experiment_dt(cfg)
    return [int(math.ceil(st.duration / dt - 1e-9)) if st.duration > 0 else 0 for st in cfg.stages]


def estimate_particle_steps(cfg: ExperimentConfig) -> float:
    """``trajectories * N * total steps``: the dry-run work estimate."""
    return float(cfg.trajectories) * cfg.params.n_particles * sum(stage_steps(cfg))


def check_budget(cfg: ExperimentConfig, allow_over_budget: bool = False) -> float:
    est = estimate_particle_steps(cfg)
    if est > cfg.budget and not allow_over_budget:
        raise BudgetExceeded(est, cfg.budget)
    return est


def _run_block(cfg: ExperimentConfig, start: int, stop: int) -> list[TrajectorySeries]:
    params = cfg.params
    idx = range(start, stop)
    ini = cfg.initial
    ens = [sample_thermal_state(ini.alpha, ini.e_kin, params,
                                trajectory_rng(cfg.base_seed, i, SUBSTREAM_INITIAL), sign=ini.sign)
           for i in idx]
    x = np.ascontiguousarray(np.stack([e.positions for e in ens]))
    p = np.ascontiguousarray(np.stack([e.momenta for e in ens]))
    f = None
    noise = None
    if cfg.model == "full":
        v_start = float(schedule_value(cfg.stages[0].schedule, 0.0))
        p0 = params.with_coupling(v_start)
        fields = [initial_field(order_parameter(e), p0,
                                trajectory_rng(cfg.base_seed, i, SUBSTREAM_FIELD), ini.field)
                  for e, i in zip(ens, idx)]
        f = np.array([[c.e_r, c.e_i] for c in fields])
        noise = [trajectory_rng(cfg.base_seed, i, SUBSTREAM_NOISE) for i in idx]
    dt = experiment_dt(cfg)
    out = []
    for k, st in enumerate(cfg.stages):
        try:
            series = integrate(x, p, f, cfg.model, params, st.schedule, st.duration, dt,
                               stride=_stride(cfg, st, dt), noise_rngs=noise,
                               scheme=cfg.integrator.scheme, backend=cfg.integrator.backend)
        except IntegratorError as exc:
            traj = None if exc.trajectory is None else start + exc.trajectory
            raise IntegratorError(f"stage {k}, trajectory {traj}: {exc}",
                                  step=exc.step, trajectory=traj) from None
        series.meta["stage"] = k
        out.append(series)
    return out


def _stride(cfg: ExperimentConfig, stage, dt: float) -> int:
    if stage.sample_dt is not None:
        return max(1, int(round(stage.sample_dt / dt)))
    return cfg.integrator.stride(dt)


def _blocks(cfg: ExperimentConfig) -> list[tuple[int, int]]:
    T, b = cfg.trajectories, cfg.block_size
    return [(s, min(s + b, T)) for s in range(0, T, b)]


def _block_job(args):
    cfg, start, stop = args
    return _run_block(cfg, start, stop)


def run_ensemble(cfg: ExperimentConfig, workers: int | None = None,
                 allow_over_budget: bool = False) -> list[RunRecord]:
    """Run all trajectories of ``cfg``; returns one aggregated record per stage.

    Raises :class:`BudgetExceeded` before any work when the estimate exceeds
    ``cfg.budget``, and :class:`IntegratorError` (naming the trajectory and
    step) when any trajectory becomes non-finite.
    """
    check_budget(cfg, allow_over_budget)
    workers = cfg.workers if workers is None else workers
    blocks = _blocks(cfg)
    jobs = [(cfg, s, e) for s, e in blocks]
    if workers <= 1 or len(blocks) == 1:
        results = [_block_job(j) for j in jobs]
    else:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=min(workers, len(blocks)), mp_context=ctx) as pool:
            results = list(pool.map(_block_job, jobs))
    records = []
    for k in range(len(cfg.stages)):
        series = TrajectorySeries.concat([r[k] for r in results])
        meta = {"stage": k, "base_seed": cfg.base_seed, "trajectories": cfg.trajectories,
                "name": cfg.name}
        records.append(RunRecord.from_series(series, params=cfg.params,
                                             boot_seed=bootstrap_seed(cfg.base_seed, k), meta=meta))
    return records


def seed_summary(cfg: ExperimentConfig) -> dict:
    """Everything needed to regenerate every random stream of a run."""
    return {
        "base_seed": cfg.base_seed,
        "trajectories": cfg.trajectories,
        "scheme": SEED_SCHEME,
        "substreams": dict(SUBSTREAMS),
        "bootstrap_seeds": [bootstrap_seed(cfg.base_seed, k) for k in range(len(cfg.stages))],
    }


def analytic_predictions(params, v: float | None = None, alpha0: float | None = None) -> dict:
    """Mean-field reference values attached to run summaries."""
    dc, kappa = params.delta_c, params.kappa
    v_opt = optimal_coupling(dc, kappa)
    e_fer_opt = ferro_kinetic_energy(v_opt, dc, kappa)
    out = {
        "v_opt": v_opt,
        "e_fer_opt": e_fer_opt,
        "alpha_opt": v_opt / (2.0 * e_fer_opt),
        "theta2_opt": magnetization_fixpoint(v_opt / (2.0 * e_fer_opt)).theta ** 2,
        "e_min": min_kinetic_energy(dc, kappa),
        "e_cav": ferro_kinetic_energy(0.0, dc, kappa),
    }
    if v is not None:
        e = ferro_kinetic_energy(v, dc, kappa)
        out.update(v=v, e_fer=e, alpha=v / (2.0 * e),
                   theta2=magnetization_fixpoint(v / (2.0 * e)).theta ** 2)
    if alpha0 is not None:
        out.update(alpha0=alpha0, demag_ratio=float(demag_ratio(alpha0)),
                   asymptotic_ratio=float(asymptotic_ratio(alpha0)))
    return out


# --------------------------------------------------------------------------
# sweeps


@dataclass
class SweepConfig:
    """A parameter sweep over a raw configuration document.

    ``parameter`` is a dotted path into the document (``vars.t_ramp``,
    ``params.kappa``) or a bare name resolved against ``vars`` then ``params``.
    """

    base: dict
    parameter: str
    values: list
    stage: int = -1

    def __post_init__(self):
        if not self.values:
            raise ConfigError("sweep value list is empty", "values")
        for v in self.values:
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ConfigError(f"non-finite sweep value {v!r}", "values")

    def configs(self) -> list[ExperimentConfig]:
        return [config_from_dict(set_path(self.base, self.parameter, v)) for v in self.values]


@dataclass(frozen=True)
class SweepRow:
    value: float
    e_kin_final_mean: float
    e_kin_final_stderr: float
    trajectories: int


def sweep(cfg: SweepConfig, workers: int | None = None, allow_over_budget: bool = False,
          progress=None) -> list[SweepRow]:
    """Final kinetic energy (last frame of the chosen stage) for each value."""
    configs = cfg.configs()
    for c in configs:
        check_budget(c, allow_over_budget)
    rows = []
    for value, c in zip(cfg.values, configs):
        rec = run_ensemble(c, workers=workers, allow_over_budget=True)[cfg.stage]
        rows.append(SweepRow(float(value), float(rec.e_kin_mean[-1]),
                             float(rec.e_kin_stderr[-1]), rec.trajectories))
        if progress is not None:
            progress(rows[-1])
    return rows


# --------------------------------------------------------------------------
# two-stage protocol


def two_stage_config(kappa: float, n_particles: int, t_f: float, t_ramp: float,
                     trajectories: int, seed: int = 0, delta_c: float | None = None,
                     decades: float = 5.0, e_init: float | None = None, sample_dt: float = 1.0,
                     ramp_sample_dt: float = 0.05, **extra) -> dict:
    """Raw configuration of the quench-hold then ramp protocol.

    Stage 1 holds ``V = v_opt`` for ``t_f`` starting from a homogeneous gas at
    the cavity-cooling energy; stage 2 ramps ``V`` down exponentially from
    ``v_opt`` over ``t_ramp``.
    """
    raw = {
        "name": "two-stage",
        "params": {"n_particles": n_particles, "kappa": kappa,
                   "delta_c": -kappa if delta_c is None else delta_c},
        "vars": {"t_f": t_f, "t_ramp": t_ramp},
        "model": "full",
        "initial": {"alpha": 0.0, "e_kin": "e_cav" if e_init is None else e_init,
                    "sign": 1, "field": "vacuum"},
        "stages": [
            {"kind": "quench", "v0": "v_opt", "duration": "t_f", "sample_dt": sample_dt},
            {"kind": "exp_ramp", "v0": "v_opt", "t_ramp": "t_ramp", "decades": decades,
             "sample_dt": ramp_sample_dt},
        ],
        "trajectories": trajectories,
        "seed": seed,
    }
    raw.update(extra)
    return raw


@dataclass
class TwoStageResult:
    cooling: RunRecord
    ramp: RunRecord
    predictions: dict
    config: ExperimentConfig
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def records(self) -> list[RunRecord]:
        return [self.cooling, self.ramp]


def two_stage_protocol(cfg: ExperimentConfig | dict, workers: int | None = None,
                       allow_over_budget: bool = False) -> TwoStageResult:
    """Run a two-stage configuration (see :func:`two_stage_config`)."""
    if isinstance(cfg, dict):
        cfg = config_from_dict(cfg)
    if len(cfg.stages) != 2:
        raise ConfigError("the two-stage protocol needs exactly two stages", "stages")
    t0 = time.perf_counter()
    cooling, ramp = run_ensemble(cfg, workers=workers, allow_over_budget=allow_over_budget)
    pred = analytic_predictions(cfg.params, v=cfg.stages[0].schedule.max_value())
    return TwoStageResult(cooling, ramp, pred, cfg, wall_time=time.perf_counter() - t0)


def with_overrides(raw: dict, **changes) -> dict:
    raw = copy.deepcopy(raw)
    for k, v in changes.items():
        raw = set_path(raw, k, v)
    return raw
