"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical abort,
3 refusal because the work estimate exceeds the budget.

Examples
--------
::

    cavcool analytic --kappa 400 --delta-c -400 --alpha 3 50
    cavcool simulate --preset fig3a --out-dir out/fig3a
    cavcool simulate --preset fig5 --scale ci --workers 4 --out-dir out/fig5
    cavcool simulate --config run.json --override seed=7 --override stages.0.duration=50
    cavcool sweep --preset fig4b --scale ci --out-dir out/fig4b
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from pathlib import Path

from . import kernels
from .config import ConfigError, apply_overrides, config_from_dict, load_config
from .core import ParameterError, SystemParams, scatter_rate_for_coupling
from .dynamics import IntegratorError, schedule_value
from .ensemble import (BudgetExceeded, SweepConfig, analytic_predictions,
                       estimate_particle_steps, experiment_dt, run_ensemble, seed_summary,
                       stage_steps, sweep)
from .meanfield import (NoDemagnetizationWarning, asymptotic_ratio, demag_ratio,
                        ferro_kinetic_energy, min_kinetic_energy, optimal_coupling,
                        theta_of_alpha)
from .presets import PRESET_NAMES, SCALES, get_preset
from .records import final_observables, write_record_csv, write_summary, write_sweep_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_BUDGET = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _say(msg=""):
    print(msg, flush=True)


# --------------------------------------------------------------------------
# analytic


def cmd_analytic(args) -> int:
    if args.kappa is None and not args.alpha:
        raise ConfigError("give --kappa/--delta-c and/or --alpha")
    if args.kappa is not None:
        dc = -args.kappa if args.delta_c is None else args.delta_c
        SystemParams(n_particles=1, kappa=args.kappa, delta_c=dc)  # validates
        v_opt = optimal_coupling(dc, args.kappa)
        e_fer = ferro_kinetic_energy(v_opt, dc, args.kappa)
        rows = [("kappa", args.kappa), ("delta_c", dc), ("v_opt", v_opt),
                ("e_fer_at_v_opt", e_fer), ("alpha_at_v_opt", v_opt / (2 * e_fer)),
                ("e_cav", ferro_kinetic_energy(0.0, dc, args.kappa)),
                ("e_min", min_kinetic_energy(dc, args.kappa))]
        for name, val in rows:
            _say(f"{name:16s} {val:.10g}")
    if args.alpha:
        if args.kappa is not None:
            _say()
        _say(f"{'alpha':>12s} {'theta':>14s} {'demag_ratio':>14s} {'asymptotic':>14s}")
        for a in args.alpha:
            if not (math.isfinite(a) and a >= 0):
                raise ConfigError(f"alpha must be finite and >= 0, got {a}", "alpha")
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NoDemagnetizationWarning)
                ratio = float(demag_ratio(a))
            asym = float(asymptotic_ratio(a)) if a > 0 else math.inf
            _say(f"{a:12.6g} {float(theta_of_alpha(a)):14.10f} {ratio:14.10g} {asym:14.10g}")
    return EXIT_OK


# --------------------------------------------------------------------------
# simulate / sweep helpers


def _base_overrides(raw: dict, args) -> dict:
    if args.seed is not None:
        raw = dict(raw, seed=args.seed)
    if args.trajectories is not None:
        raw = dict(raw, trajectories=args.trajectories)
    return apply_overrides(raw, args.override)


def _derived(cfg) -> dict:
    dt = experiment_dt(cfg)
    stages = []
    for st, n in zip(cfg.stages, stage_steps(cfg)):
        v0 = float(schedule_value(st.schedule, 0.0))
        v1 = float(schedule_value(st.schedule, st.duration))
        stages.append({"duration": st.duration, "steps": n, "v_start": v0, "v_end": v1,
                       "s_start": float(scatter_rate_for_coupling(v0, cfg.params)),
                       "s_end": float(scatter_rate_for_coupling(v1, cfg.params))})
    return {"dt": dt, "backend": cfg.integrator.backend or kernels.BACKEND,
            "vars": cfg.raw.get("_resolved_vars", {}), "stages": stages,
            "particle_steps": estimate_particle_steps(cfg), "budget": cfg.budget}


def _echo(title: str, raw: dict, derived: dict):
    _say(f"== {title}")
    clean = {k: v for k, v in raw.items() if not k.startswith("_")}
    _say(json.dumps({"config": clean, "derived": derived}, indent=2, default=str))


def _jobs_from_args(args, kind: str):
    """List of (subdir, payload) where payload is a raw config or a sweep dict."""
    if bool(args.config) == bool(args.preset):
        raise ConfigError("give exactly one of --config or --preset")
    if args.preset:
        preset = get_preset(args.preset, args.scale)
        if preset.kind != kind:
            raise ConfigError(f"preset {args.preset} is a {preset.kind} preset; "
                              f"use 'cavcool {preset.kind}'", "preset")
        _say(f"preset {preset.name} (scale {args.scale}): {preset.description}")
        jobs = preset.experiments if kind == "simulate" else preset.sweeps
        return list(jobs.items())
    doc = load_config(args.config)
    if kind == "sweep" and "base" in doc:
        return [("", doc)]
    if "config" in doc and "params" not in doc:  # a previous run summary
        doc = doc["config"]
    if kind == "sweep":
        # a plain experiment document is the base; the swept axis comes from the flags
        if not (args.parameter and args.values):
            raise ConfigError("a sweep needs a document with 'base', 'parameter' and "
                              "'values', or an experiment config plus --parameter and --values")
        return [("", {"base": doc, "parameter": args.parameter, "values": args.values})]
    return [("", doc)]


def _write_experiment(out: Path, cfg, records, wall: float):
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for k, rec in enumerate(records):
        files.append(write_record_csv(rec, out / f"stage{k}.csv").name)
    v_first = cfg.stages[0].schedule.max_value()
    summary = {
        "config": {k: v for k, v in cfg.raw.items() if not k.startswith("_")},
        "derived": _derived(cfg),
        "seeds": seed_summary(cfg),
        "final": [final_observables(r) for r in records],
        "predictions": analytic_predictions(cfg.params, v=v_first,
                                            alpha0=cfg.initial.alpha or None),
        "files": files,
        "wall_time": wall,
    }
    write_summary(out / "summary.json", summary)


def cmd_simulate(args) -> int:
    jobs = _jobs_from_args(args, "simulate")
    prepared = []
    for sub, raw in jobs:
        raw = _base_overrides(raw, args)
        cfg = config_from_dict(raw)
        _echo(sub or cfg.name, cfg.raw, _derived(cfg))
        prepared.append((sub, cfg))
    refused = False
    for sub, cfg in prepared:
        est = estimate_particle_steps(cfg)
        _say(f"{sub or cfg.name}: estimated {est:.3g} particle-steps (budget {cfg.budget:.3g})")
        if est > cfg.budget and not args.allow_over_budget:
            refused = True
    if refused:
        _say("refusing: work estimate exceeds the budget; pass --allow-over-budget to run")
        return EXIT_BUDGET
    if args.dry_run:
        return EXIT_OK
    out_root = Path(args.out_dir)
    for sub, cfg in prepared:
        t0 = time.perf_counter()
        records = run_ensemble(cfg, workers=args.workers, allow_over_budget=True)
        wall = time.perf_counter() - t0
        dest = out_root / sub if sub else out_root
        _write_experiment(dest, cfg, records, wall)
        fin = records[-1].frames()[-1]
        _say(f"{sub or cfg.name}: final e_kin {fin.e_kin_mean:.6g} +- {fin.e_kin_stderr:.2g}, "
             f"theta2 {fin.theta2_mean:.4g}, wall {wall:.1f}s -> {dest}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    jobs = _jobs_from_args(args, "sweep")
    prepared = []
    for sub, doc in jobs:
        base = _base_overrides(doc["base"], args)
        sc = SweepConfig(base=base, parameter=args.parameter or doc["parameter"],
                         values=args.values or doc["values"], stage=int(doc.get("stage", -1)))
        cfgs = sc.configs()
        _echo(f"{sub or 'sweep'} over {sc.parameter} = {sc.values}", base, _derived(cfgs[0]))
        prepared.append((sub, sc, cfgs))
    refused = False
    for sub, sc, cfgs in prepared:
        for v, c in zip(sc.values, cfgs):
            est = estimate_particle_steps(c)
            _say(f"{sub or 'sweep'} {sc.parameter}={v}: estimated {est:.3g} particle-steps "
                 f"(budget {c.budget:.3g})")
            if est > c.budget and not args.allow_over_budget:
                refused = True
    if refused:
        _say("refusing: work estimate exceeds the budget; pass --allow-over-budget to run")
        return EXIT_BUDGET
    if args.dry_run:
        return EXIT_OK
    out_root = Path(args.out_dir)
    for sub, sc, cfgs in prepared:
        t0 = time.perf_counter()

        def progress(row, sub=sub):
            _say(f"{sub or 'sweep'} {sc.parameter}={row.value:g}: e_kin_final "
                 f"{row.e_kin_final_mean:.6g} +- {row.e_kin_final_stderr:.2g}")

        rows = sweep(sc, workers=args.workers, allow_over_budget=True, progress=progress)
        dest = out_root / sub if sub else out_root
        dest.mkdir(parents=True, exist_ok=True)
        write_sweep_csv(rows, dest / "sweep.csv")
        write_summary(dest / "summary.json", {
            "base": {k: v for k, v in cfgs[0].raw.items() if not k.startswith("_")},
            "parameter": sc.parameter, "values": sc.values, "stage": sc.stage,
            "seeds": seed_summary(cfgs[0]),
            "rows": [r.__dict__ for r in rows],
            "predictions": analytic_predictions(cfgs[0].params,
                                                alpha0=cfgs[0].initial.alpha or None),
            "wall_time": time.perf_counter() - t0,
        })
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _run_options(p):
    src = p.add_argument_group("input")
    src.add_argument("--config", help="JSON configuration file (or a previous summary.json)")
    src.add_argument("--preset", choices=PRESET_NAMES, help="built-in configuration")
    src.add_argument("--scale", choices=SCALES, default="paper", help="preset scale")
    p.add_argument("--out-dir", default="cavcool-out", help="output directory")
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--trajectories", type=int, help="override the trajectory count")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="set a dotted config path, e.g. stages.0.duration=50 (repeatable)")
    p.add_argument("--dry-run", action="store_true", help="print the work estimate and exit")
    p.add_argument("--allow-over-budget", action="store_true",
                   help="run even when the work estimate exceeds the budget")
    p.add_argument("--workers", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cavcool", description="Cavity cooling and demagnetization simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pa = sub.add_parser("analytic", help="mean-field formulas")
    pa.add_argument("--kappa", type=float, help="cavity decay rate")
    pa.add_argument("--delta-c", type=float, help="detuning (default -kappa)")
    pa.add_argument("--alpha", type=float, nargs="*", default=[], help="coupling ratios V/(2E)")
    pa.set_defaults(func=cmd_analytic)

    ps = sub.add_parser("simulate", help="run an experiment")
    _run_options(ps)
    ps.set_defaults(func=cmd_simulate)

    pw = sub.add_parser("sweep", help="sweep one parameter")
    _run_options(pw)
    pw.add_argument("--parameter", help="swept path (overrides the document)")
    pw.add_argument("--values", type=float, nargs="+", help="swept values")
    pw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"refusing: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except IntegratorError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ParameterError, FileNotFoundError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
