"""Experiment configuration documents.

A configuration is a JSON object::

    {
      "name": "fig3a-full",
      "params": {"n_particles": 100, "kappa": 400, "delta_c": "-kappa"},
      "vars": {"alpha0": 50, "e0": 100, "v0": "2*alpha0*e0", "t_ramp": 10},
      "model": "full",
      "initial": {"alpha": "alpha0", "e_kin": "e0", "sign": 1, "field": "adiabatic"},
      "stages": [{"kind": "exp_ramp", "v0": "v0", "t_ramp": "t_ramp"}],
      "trajectories": 100,
      "seed": 1,
      "integrator": {"sample_dt": 0.05},
      "block_size": 16,
      "budget": 2e11
    }

Numeric fields may be arithmetic expressions over ``kappa``, ``delta_c``,
``n`` (particle number), the derived ``v_opt``, ``e_fer`` (kinetic energy of the
organized phase at ``v_opt``), ``e_cav`` (cavity-cooling energy at zero
coupling), ``pi``, ``e`` and the entries of ``vars`` (evaluated in order).
"""

from __future__ import annotations

import ast
import copy
import json
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path

from .core import ParameterError, SystemParams
from .dynamics import IntegratorConfig, Schedule
from .meanfield import ferro_kinetic_energy, optimal_coupling


class ConfigError(ValueError):
    """Malformed configuration; ``where`` names the offending field."""

    def __init__(self, message, where=None):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sqrt": math.sqrt, "log10": math.log10, "exp": math.exp, "min": min, "max": max}


def evaluate(expr, names: dict, where: str = ""):
    """Evaluate a number or an arithmetic expression string."""
    if isinstance(expr, bool):
        raise ConfigError("expected a number", where)
    if isinstance(expr, (int, float)):
        return expr
    if not isinstance(expr, str):
        raise ConfigError(f"expected a number or expression, got {expr!r}", where)
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse {expr!r}", where) from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ConfigError(f"unknown name {node.id!r} in {expr!r}", where)
            return names[node.id]
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and not node.keywords):
            return _FUNCS[node.func.id](*[ev(a) for a in node.args])
        raise ConfigError(f"unsupported expression {expr!r}", where)

    return ev(tree)


@dataclass(frozen=True)
class InitialState:
    alpha: float = 0.0
    e_kin: float = 1.0
    sign: int = 1
    field: str = "adiabatic"


@dataclass(frozen=True)
class Stage:
    schedule: Schedule
    duration: float
    sample_dt: float | None = None


@dataclass
class ExperimentConfig:
    params: SystemParams
    model: str
    stages: list
    trajectories: int
    base_seed: int
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    initial: InitialState = field(default_factory=InitialState)
    block_size: int = 16
    workers: int = 1
    budget: float = 2e11
    name: str = "experiment"
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in ("reduced", "full"):
            raise ConfigError(f"unknown model {self.model!r}", "model")
        if self.trajectories < 1:
            raise ConfigError("trajectories must be >= 1", "trajectories")
        if not self.stages:
            raise ConfigError("stages must be nonempty", "stages")
        if self.block_size < 1:
            raise ConfigError("block_size must be >= 1", "block_size")


def _names(params: SystemParams) -> dict:
    kappa, dc, n = params.kappa, params.delta_c, params.n_particles
    v_opt = optimal_coupling(dc, kappa)
    return {"kappa": kappa, "delta_c": dc, "n": n, "v_opt": v_opt,
            "e_fer": ferro_kinetic_energy(v_opt, dc, kappa),
            "e_cav": ferro_kinetic_energy(0.0, dc, kappa),
            "pi": math.pi, "e": math.e}


def _schedule(d: dict, names: dict, where: str) -> tuple[Schedule, float | None]:
    kind = d.get("kind", "hold")
    dur = d.get("duration")
    dur = None if dur is None else float(evaluate(dur, names, f"{where}.duration"))
    if kind == "piecewise":
        segs = []
        for i, seg in enumerate(d.get("segments", [])):
            s, sd = _schedule(seg, names, f"{where}.segments.{i}")
            if sd is None:
                sd = s.natural_duration
            if sd is None:
                raise ConfigError("segment needs a duration", f"{where}.segments.{i}")
            segs.append((sd, s))
        sched = Schedule(kind="piecewise", segments=tuple(segs))
    else:
        kw = {"kind": kind, "v0": float(evaluate(d.get("v0", 0.0), names, f"{where}.v0"))}
        if "t_ramp" in d:
            kw["t_ramp"] = float(evaluate(d["t_ramp"], names, f"{where}.t_ramp"))
        if "decades" in d:
            kw["decades"] = float(evaluate(d["decades"], names, f"{where}.decades"))
        sched = Schedule(**kw)
    return sched, dur


_KNOWN_KEYS = {"name", "params", "vars", "model", "initial", "stages", "trajectories", "seed",
               "integrator", "block_size", "workers", "budget"}


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Resolve a configuration document into an :class:`ExperimentConfig`."""
    if "config" in raw and "params" not in raw:  # a run summary
        raw = raw["config"]
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    raw = copy.deepcopy(raw)
    pd = raw.get("params")
    if not isinstance(pd, dict):
        raise ConfigError("missing params section", "params")
    try:
        base = {"pi": math.pi, "e": math.e}
        kappa = float(evaluate(pd["kappa"], base, "params.kappa"))
        n = evaluate(pd["n_particles"], base, "params.n_particles")
        dc = float(evaluate(pd.get("delta_c", "-kappa"), {**base, "kappa": kappa, "n": n},
                            "params.delta_c"))
        if float(n) != int(n):
            raise ConfigError("must be an integer", "params.n_particles")
        params = SystemParams(n_particles=int(n), kappa=kappa, delta_c=dc)
    except KeyError as exc:
        raise ConfigError("missing field", f"params.{exc.args[0]}") from exc
    except ParameterError as exc:
        raise ConfigError(str(exc), "params") from exc

    names = _names(params)
    resolved_vars = {}
    for key, val in (raw.get("vars") or {}).items():
        names[key] = resolved_vars[key] = evaluate(val, names, f"vars.{key}")

    try:
        stages = []
        for i, sd in enumerate(raw.get("stages") or []):
            sched, dur = _schedule(sd, names, f"stages.{i}")
            if dur is None:
                dur = sched.natural_duration
            if dur is None:
                raise ConfigError("stage needs a duration", f"stages.{i}.duration")
            sdt = sd.get("sample_dt")
            sdt = None if sdt is None else float(evaluate(sdt, names, f"stages.{i}.sample_dt"))
            stages.append(Stage(sched, dur, sdt))

        ini = raw.get("initial") or {}
        initial = InitialState(
            alpha=float(evaluate(ini.get("alpha", 0.0), names, "initial.alpha")),
            e_kin=float(evaluate(ini.get("e_kin", "e_cav"), names, "initial.e_kin")),
            sign=int(ini.get("sign", 1)),
            field=str(ini.get("field", "adiabatic")),
        )
        integ = dict(raw.get("integrator") or {})
        for key in ("dt", "sample_dt", "courant"):
            if integ.get(key) is not None:
                integ[key] = float(evaluate(integ[key], names, f"integrator.{key}"))
        integrator = IntegratorConfig(**integ)
        traj = evaluate(raw.get("trajectories", 1), names, "trajectories")
        cfg = ExperimentConfig(
            params=params,
            model=raw.get("model", "reduced"),
            stages=stages,
            trajectories=int(round(traj)),
            base_seed=int(raw.get("seed", 0)),
            integrator=integrator,
            initial=initial,
            block_size=int(raw.get("block_size", 16)),
            workers=int(raw.get("workers", 1)),
            budget=float(raw.get("budget", 2e11)),
            name=str(raw.get("name", "experiment")),
            raw=raw,
        )
    except (ParameterError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    cfg.raw["_resolved_vars"] = resolved_vars
    return cfg


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_path(raw: dict, path: str, value) -> dict:
    """Set a dotted path (``stages.0.t_ramp``, ``params.kappa``) in a raw config.

    A bare name resolves to ``vars.<name>`` or ``params.<name>`` when present there.
    """
    raw = copy.deepcopy(raw)
    parts = path.split(".")
    if len(parts) == 1:
        if parts[0] in (raw.get("vars") or {}):
            parts = ["vars", parts[0]]
        elif parts[0] in (raw.get("params") or {}):
            parts = ["params", parts[0]]
    node = raw
    for i, key in enumerate(parts[:-1]):
        if isinstance(node, list):
            key = int(key)
            node = node[key]
        else:
            node = node.setdefault(key, {})
    last = parts[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value
    return raw


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``key=value`` strings; values are JSON literals or expressions."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, text = item.split("=", 1)
        raw = set_path(raw, key.strip(), _parse_value(text.strip()))
    return raw


def load_config(path) -> dict:
    path = Path(path)
    text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
