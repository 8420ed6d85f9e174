"""Built-in configurations reproducing the reference simulations.

Each preset is a set of named jobs.  A job is either a single experiment
(raw configuration document) or a sweep (raw base document, swept path and
values).  ``scale="ci"`` selects cheaper variants with the same structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import ConfigError
from .ensemble import two_stage_config

SCALES = ("paper", "ci")


@dataclass
class Preset:
    name: str
    kind: str  # "simulate" or "sweep"
    description: str
    experiments: dict = field(default_factory=dict)
    sweeps: dict = field(default_factory=dict)  # name -> {"base", "parameter", "values"}


def _ramp_from_organized(kappa, n, t_ramp, duration, trajectories, model, seed=1,
                         alpha0=50, e0=100, sample_dt=0.05):
    return {
        "name": f"ramp-{model}",
        "params": {"n_particles": n, "kappa": kappa, "delta_c": "-kappa"},
        "vars": {"alpha0": alpha0, "e0": e0, "v0": "2*alpha0*e0", "t_ramp": t_ramp},
        "model": model,
        "initial": {"alpha": "alpha0", "e_kin": "e0", "sign": 1, "field": "adiabatic"},
        "stages": [{"kind": "exp_ramp", "v0": "v0", "t_ramp": "t_ramp", "duration": duration,
                    "sample_dt": sample_dt}],
        "trajectories": trajectories,
        "seed": seed,
    }


def _fig3(t_ramp, scale):
    traj = 200 if scale == "paper" else 100
    exps = {m: _ramp_from_organized(400, 100, t_ramp, 2 * t_ramp, traj, m,
                                    sample_dt=t_ramp / 200) for m in ("full", "reduced")}
    return exps


def _fig4(kappa, scale):
    ns = (50, 100, 200) if scale == "paper" else (50,)
    values = [1, 3, 10, 30, 100, 300, 1000] if scale == "paper" else [3, 10, 30, 100, 300]
    jobs = {}
    for n in ns:
        jobs[f"full-n{n}"] = ("full", n)
    reduced_n = 200 if scale == "paper" else 50
    jobs[f"reduced-n{reduced_n}"] = ("reduced", reduced_n)
    sweeps = {}
    for name, (model, n) in jobs.items():
        base = _ramp_from_organized(kappa, n, 10, "t_ramp", "20000/n", model,
                                    e0="kappa/4", sample_dt="t_ramp/50")
        base["name"] = f"sweep-{name}"
        sweeps[name] = {"base": base, "parameter": "t_ramp", "values": values}
    return sweeps


def _fig5(scale):
    kappa = 400 if scale == "paper" else 40
    raw = two_stage_config(kappa=kappa, n_particles=100, t_f=3000, t_ramp=10, trajectories=200,
                           seed=5, sample_dt=1.0, ramp_sample_dt=0.05)
    raw["name"] = f"two-stage-{scale}"
    return raw


def get_preset(name: str, scale: str = "paper") -> Preset:
    if scale not in SCALES:
        raise ConfigError(f"unknown scale {scale!r}; choose from {SCALES}", "scale")
    if name == "fig3a":
        return Preset(name, "simulate", "ramp from an organized state, t_ramp=10, both models",
                      experiments=_fig3(10, scale))
    if name == "fig3b":
        return Preset(name, "simulate", "ramp from an organized state, t_ramp=100, both models",
                      experiments=_fig3(100, scale))
    if name == "fig4a":
        return Preset(name, "sweep", "final energy versus ramp time, kappa=400",
                      sweeps=_fig4(400, scale))
    if name == "fig4b":
        return Preset(name, "sweep", "final energy versus ramp time, kappa=40",
                      sweeps=_fig4(40, scale))
    if name == "fig5":
        return Preset(name, "simulate", "cool at the optimal coupling, then ramp down",
                      experiments={"two-stage": _fig5(scale)})
    raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}", "preset")


PRESET_NAMES = ("fig3a", "fig3b", "fig4a", "fig4b", "fig5")
