"""Compare the numba and pure-numpy kernels on solver-shaped workloads.

    python benchmarks/bench_kernels.py [--repeat 5] [--instances 200]

Both backends are imported directly, so the VARINEQ_DISABLE_NUMBA flag does
not matter here. Every row also reports the largest disagreement between the
two backends' outputs.
"""

import argparse
import time

import numpy as np

from varineq import _kernels
from varineq.sets import Ball, Box, Halfspace, _pack


def cut_workload(rng, count, n=4):
    """Box C plus three cut rows and a localization row, as in one variant-S step."""
    jobs = []
    for _ in range(count):
        x_feas = rng.uniform(-1, 1, n)
        prims = [Box(-3 * np.ones(n), 3 * np.ones(n))]
        for _ in range(4):
            a = rng.standard_normal(n)
            prims.append(Halfspace(a, a @ x_feas + rng.uniform(0, 0.5)))
        jobs.append((_pack(prims, n), rng.standard_normal(n) * 4, 1e-12, 100_000))
    return jobs


def ball_workload(rng, count, n=5):
    jobs = []
    for _ in range(count):
        x_feas = rng.uniform(-1, 1, n)
        prims = [Ball(x_feas + 0.2, 1.5)]
        for _ in range(5):
            a = rng.standard_normal(n)
            prims.append(Halfspace(a, a @ x_feas + rng.uniform(0, 0.5)))
        jobs.append((_pack(prims, n), rng.standard_normal(n) * 4, 1e-12, 100_000))
    return jobs


def wedge_workload(rng, count):
    """Two facets meeting at a small angle: the cycle cap is what gets timed."""
    jobs = []
    for _ in range(count):
        width = rng.uniform(1e-3, 1e-2)
        prims = [Halfspace([0.0, 1.0], 0.0), Halfspace([-np.sin(width), -np.cos(width)], 0.0)]
        jobs.append((_pack(prims, 2), np.array([-100.0, rng.uniform(0.5, 2.0)]), 1e-12, 2_000))
    return jobs


def nnls_workload(rng, count, r=6, m=3):
    jobs = []
    for _ in range(count):
        gens = rng.standard_normal((r, m))
        gens /= np.linalg.norm(gens, axis=1, keepdims=True)
        lip = float(np.linalg.eigvalsh(gens @ gens.T)[-1])
        jobs.append((gens, rng.standard_normal(m), lip, 1e-12, 1e-15, 10_000))
    return jobs


def run_dykstra(fn, jobs):
    return [fn(*packed, x.copy(), tol, cap)[0] for packed, x, tol, cap in jobs]


def run_nnls(fn, jobs):
    return [np.array([fn(*job)[1]]) for job in jobs]


def best_time(runner, fn, jobs, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = runner(fn, jobs)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--instances", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if not _kernels.NUMBA_AVAILABLE:
        print("numba is not installed; nothing to compare")
        return 1
    rng = np.random.default_rng(args.seed)
    cases = [
        ("dykstra: box + cuts (n=4)", run_dykstra, _kernels.dykstra_numba, _kernels.dykstra_numpy,
         cut_workload(rng, args.instances)),
        ("dykstra: ball + halfspaces (n=5)", run_dykstra, _kernels.dykstra_numba, _kernels.dykstra_numpy,
         ball_workload(rng, args.instances)),
        ("dykstra: narrow wedge, capped", run_dykstra, _kernels.dykstra_numba, _kernels.dykstra_numpy,
         wedge_workload(rng, max(1, args.instances // 10))),
        ("nnls: 6 normals in R^3", run_nnls, _kernels.nnls_numba, _kernels.nnls_numpy,
         nnls_workload(rng, args.instances)),
    ]

    print("warmup (JIT compilation)...")
    for _, runner, fast, _, jobs in cases:
        runner(fast, jobs[:1])

    header = f"{'workload':36s} {'calls':>6s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s} {'max diff':>9s}"
    print(header)
    print("-" * len(header))
    for name, runner, fast, slow, jobs in cases:
        t_fast, out_fast = best_time(runner, fast, jobs, args.repeat)
        t_slow, out_slow = best_time(runner, slow, jobs, args.repeat)
        diff = max(float(np.max(np.abs(a - b))) for a, b in zip(out_fast, out_slow))
        print(f"{name:36s} {len(jobs):6d} {t_fast:9.4f}s {t_slow:9.4f}s {t_slow / t_fast:7.1f}x {diff:9.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
