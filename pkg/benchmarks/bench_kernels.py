"""Throughput of the compiled and numpy stepping kernels.

Usage::

    python benchmarks/bench_kernels.py [--n 100] [--batch 16] [--steps 2000]

Prints particle-steps per second for each kernel and backend, the speedup of
the compiled backend, and the largest deviation between backends on the same
inputs.
"""

import argparse
import time

import numpy as np

from cavcool import kernels


def _inputs(batch, n, steps, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 2 * np.pi, (batch, n))
    p = rng.normal(0, 3, (batch, n))
    field = rng.normal(0, 0.5, (batch, 2))
    noise = rng.standard_normal((batch, steps, 2))
    return x, p, field, noise


def _run(backend, kernel, batch, n, steps, dt, kappa=40.0, delta_c=-40.0):
    x, p, field, noise = _inputs(batch, n, steps)
    grid = np.full(steps + 1, 60.0 if kernel == "reduced" else 0.5)
    mod = kernels.get_backend(backend)
    t0 = time.perf_counter()
    if kernel == "reduced":
        mod.reduced_steps(x, p, grid, dt)
    else:
        getattr(mod, f"{kernel}_steps")(x, p, field, grid, noise, dt, kappa, delta_c)
    return time.perf_counter() - t0, x, p


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100, help="particles per trajectory")
    ap.add_argument("--batch", type=int, default=16, help="trajectories per call")
    ap.add_argument("--steps", type=int, default=2000, help="time steps per call")
    ap.add_argument("--dt", type=float, default=1e-3)
    args = ap.parse_args(argv)

    work = args.batch * args.n * args.steps
    print(f"batch={args.batch} n={args.n} steps={args.steps} ({work:.2e} particle-steps)")
    print(f"{'kernel':<8} {'backend':<8} {'seconds':>9} {'steps/s':>10} {'speedup':>8} {'max |dp|':>9}")
    for kernel in ("reduced", "full", "em"):
        times, results = {}, {}
        for backend in kernels.available_backends():
            times[backend], _, p = _run(backend, kernel, args.batch, args.n, args.steps, args.dt)
            results[backend] = p
        for backend, t in times.items():
            speed = times["python"] / t
            dev = np.max(np.abs(results[backend] - results["python"]))
            print(f"{kernel:<8} {backend:<8} {t:9.4f} {work / t:10.3e} {speed:8.1f} {dev:9.1e}")


if __name__ == "__main__":
    main()
