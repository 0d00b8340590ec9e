"""Compare the compiled and numpy kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--grid 2048 4096 ...] [--repeat 20]
"""
import argparse
import time

import numpy as np

from ma_couple import Grid, ProblemSpec, SolveConfig, kernels, solve_system
from ma_couple.operators import apply_T


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, nargs="+", default=[512, 2048, 8192])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)} (default {kernels.backend_name()})")
    print(f"{'task':<28}{'n':>7}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for n in args.grid:
        grid = Grid(n)
        v = grid.evaluate(lambda t: 1 - t * t)
        tasks = {
            "apply_T (N=2, 1, 8)": lambda: apply_T(v, ProblemSpec(2, 1.0, 8.0)),
            "apply_T (N=3, 0.5, 2)": lambda: apply_T(v, ProblemSpec(3, 0.5, 2.0)),
            "solve (N=2, 1, 1)": lambda: solve_system(ProblemSpec(2, 1, 1), SolveConfig(grid=grid)),
        }
        for name, fn in tasks.items():
            row = {}
            for b in backends:
                with kernels.use_backend(b):
                    row[b] = best_of(fn, args.repeat if "solve" not in name else max(1, args.repeat // 5))
            speed = row["python"] / row["cython"] if "cython" in row else float("nan")
            cells = "".join(f"{1e3 * row[b]:>10.3f}ms" for b in backends)
            print(f"{name:<28}{n:>7}{cells}{speed:>9.2f}x")
    if "cython" in backends:
        grid = Grid(args.grid[-1])
        v = grid.evaluate(lambda t: 1 - t * t)
        spec = ProblemSpec(2, 1.0, 8.0)
        with kernels.use_backend("python"):
            a = apply_T(v, spec).values
        with kernels.use_backend("cython"):
            b = apply_T(v, spec).values
        print(f"max |cython - python| on apply_T: {np.max(np.abs(a - b)):.2e}")


if __name__ == "__main__":
    main()
