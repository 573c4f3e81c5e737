"""Compare the compiled kernels with the numpy/scipy fallback.

Usage: ``python benchmarks/bench_kernels.py [--N 256 1024 4096] [--repeat 5]``

Workloads timed per backend: a tridiagonal solve, the pointwise signed
power at an integer and at a non-integer exponent, and a full inverse
iteration (dominated by the first two).
"""

import argparse
import contextlib
import time

import numpy as np

from hle_eigen import kernels
from hle_eigen.grid import build_grid
from hle_eigen.nonlinear import inverse_iteration
from hle_eigen.problem import Ball, ProblemSpec

NAMES = ("signed_power", "weighted_power_sum", "TridiagonalSolver")


@contextlib.contextmanager
def use_backend(mod):
    saved = {name: getattr(kernels, name) for name in NAMES}
    for name in NAMES:
        setattr(kernels, name, getattr(mod, name))
    try:
        yield
    finally:
        for name, val in saved.items():
            setattr(kernels, name, val)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(N):
    rng = np.random.default_rng(0)
    diag = 2.0 + rng.random(N)
    off = -np.ones(N)
    rhs = rng.standard_normal(N)
    w = rng.random(N)
    spec = ProblemSpec(2, 3.0, 0.5, 0.0, Ball(1.0))
    grid = build_grid(spec.domain, 2, N)

    def tridiag():
        solver = kernels.TridiagonalSolver(off, diag, off)
        for _ in range(200):
            solver.solve(rhs)

    def power(q):
        def run():
            for _ in range(200):
                kernels.signed_power(rhs, q, w)
        return run

    def iteration():
        inverse_iteration(spec, grid)

    return {"tridiagonal x200": tridiag, "signed_power q=3": power(3.0),
            "signed_power q=2.5": power(2.5), "inverse_iteration": iteration}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, nargs="+", default=[256, 1024, 4096])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; timing the fallback only")
    print(f"{'N':>6} {'workload':<20}" + "".join(f"{b:>12}" for b in sorted(backends)) + f"{'speedup':>10}")
    for N in args.N:
        for label, fn in workloads(N).items():
            t = {}
            for name, mod in sorted(backends.items()):
                with use_backend(mod):
                    fn()  # warm-up
                    t[name] = best_of(fn, args.repeat)
            speed = f"{t['python'] / t['cython']:>9.2f}x" if "cython" in t else ""
            print(f"{N:>6} {label:<20}" + "".join(f"{t[b] * 1e3:>10.2f}ms" for b in sorted(t)) + speed)


if __name__ == "__main__":
    main()
