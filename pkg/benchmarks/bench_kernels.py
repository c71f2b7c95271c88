#!/usr/bin/env python3
"""Benchmark the compiled residual kernels against the pure-numpy fallback.

Times a single residual evaluation, a batched finite-difference Jacobian
sweep (the hot loop of the Newton solver), and one full implicit time step,
for both flows across several vertex counts. Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeats 7]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from curveflow import kernels
from curveflow.driver import RunConfig, step
from curveflow.geometry import FlowParams, PolygonalCurve
from curveflow.schemes import FrozenExplicitData


def kubire(n: int) -> np.ndarray:
    t = np.arange(1, n + 1) / n
    a1 = 1.8 * np.cos(2 * np.pi * t)
    a2 = 0.2 + np.sin(np.pi * t) * np.sin(6 * np.pi * t) * np.sin(2 * a1)
    a3 = 0.5 * np.sin(2 * np.pi * t) + np.sin(a1) + a2 * np.sin(2 * np.pi * t)
    return np.stack([0.5 * a1, 0.54 * a3], axis=1)


def ring_state(n: int):
    base = np.stack(
        [np.cos(2 * np.pi * np.arange(1, n + 1) / n),
         np.sin(2 * np.pi * np.arange(1, n + 1) / n)],
        axis=1,
    )
    return base + 0.15 * kubire(n)


def best_of(repeats: int, fn, *args) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_flow(flow: str, n: int, repeats: int) -> dict:
    params = FlowParams(c0=2.0, alpha=30.0, dt=1e-4)
    old = ring_state(n)
    frozen = FrozenExplicitData.from_curve(old, params.alpha)
    extra = 3 if flow == "helfrich" else 1
    u = np.concatenate([old.ravel(), np.zeros(extra)])
    dim = 2 * n + extra
    batch = np.repeat(u[None, :], dim, axis=0)
    batch[np.arange(dim), np.arange(dim)] += 1e-7

    rows = {}
    for backend in ("python", "compiled"):
        if backend == "compiled" and not kernels.HAVE_COMPILED:
            continue
        system = kernels.make_system(flow, frozen, params, backend=backend)

        def eval_loop():
            for _ in range(20):
                system.evaluate(u)

        t_eval = best_of(repeats, eval_loop) / 20
        t_jac = best_of(repeats, system.evaluate_many, batch)
        rows[backend] = (t_eval, t_jac)
    return rows


def bench_step(flow: str, n: int, repeats: int, backend: str) -> float:
    curve = PolygonalCurve(ring_state(n))
    config = RunConfig(
        flow=flow,
        params=FlowParams(c0=2.0, alpha=30.0, dt=1e-4),
        max_steps=1,
    )
    import curveflow.kernels as k

    saved = k.BACKEND
    k.BACKEND = backend
    try:
        return best_of(repeats, step, curve, config)
    finally:
        k.BACKEND = saved


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    print(f"compiled extension available: {kernels.HAVE_COMPILED}")
    print(f"selected backend: {kernels.BACKEND}")
    header = (
        f"{'flow':9s} {'N':>4s} {'metric':22s} "
        f"{'python':>12s} {'compiled':>12s} {'speedup':>8s}"
    )
    print()
    print(header)
    print("-" * len(header))
    for flow in ("willmore", "helfrich"):
        for n in (30, 50, 100, 200):
            rows = bench_flow(flow, n, args.repeats)
            py = rows["python"]
            cc = rows.get("compiled")
            for label, idx in (("residual eval", 0), ("fd jacobian sweep", 1)):
                py_t = py[idx]
                cc_t = cc[idx] if cc else float("nan")
                speed = py_t / cc_t if cc else float("nan")
                print(
                    f"{flow:9s} {n:4d} {label:22s} "
                    f"{py_t * 1e6:10.1f}us {cc_t * 1e6:10.1f}us {speed:7.1f}x"
                )
    print()
    for flow in ("willmore", "helfrich"):
        n = 50
        py_t = bench_step(flow, n, args.repeats, "python")
        if kernels.HAVE_COMPILED:
            cc_t = bench_step(flow, n, args.repeats, "compiled")
            print(
                f"full implicit step ({flow}, N={n}): "
                f"python {py_t * 1e3:.2f}ms, compiled {cc_t * 1e3:.2f}ms "
                f"({py_t / cc_t:.1f}x)"
            )
        else:
            print(f"full implicit step ({flow}, N={n}): python {py_t * 1e3:.2f}ms")


if __name__ == "__main__":
    main()
