"""Compare the numba kernels with their numpy twins.

Run ``python benchmarks/bench_kernels.py [--quick]``.  Prints one line per
(kernel, size) with both timings, the speed-up and the largest difference
between the two outputs.
"""

import argparse
import time

import numpy as np

from dampwave import kernels
from dampwave._accel import HAVE_NUMBA, use_backend
from dampwave.data import DataProfile
from dampwave.duhamel import CharacteristicGrid, _first_rows
from dampwave.exponents import ProblemParams


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def case_march(N, t_max=20.0):
    params = ProblemParams(p=2.0, eps=0.3)
    grid = CharacteristicGrid.for_problem(params.k, N, t_max)
    row0, row1 = _first_rows(DataProfile(), params, grid)
    store = np.zeros((0, grid.n_cols))

    def run():
        return kernels.march(row0, row1, grid.h, 2.0, 1.0, grid.c, grid.K, grid.n_rows - 1, 1e8, store, 1)[2]

    return run


def case_duhamel(N, t_max=10.0):
    grid = CharacteristicGrid.for_problem(2.0, N, t_max)
    G = np.random.default_rng(0).random((grid.n_rows, grid.n_cols))
    return lambda: kernels.duhamel(G, grid.h)


def case_leapfrog(N, t_max=10.0):
    dx = 2.0 / N
    dt = 0.5 * dx
    x = np.arange(-(t_max + 3), t_max + 3 + dx / 2, dx)
    v0 = np.where(np.abs(x) < 1, (1 - x * x) ** 3, 0.0) * 0.1
    n = int(round(t_max / dt))
    t = np.arange(n + 1) * dt
    a = dt / (1 + t)
    z = np.zeros(n + 1)
    s = np.ones(n + 1)
    store = np.zeros((0, x.size))
    return lambda: kernels.leapfrog(v0, v0, dx, dt, 2.0, a, z, s, n, 1e8, store, 1)[2]


CASES = {"march": case_march, "duhamel": case_duhamel, "leapfrog": case_leapfrog}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true", help="small sizes only")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 0
    sizes = (16, 32) if args.quick else (32, 64, 128)
    print(f"{'kernel':<10}{'N':>6}{'numba [s]':>12}{'numpy [s]':>12}{'speed-up':>10}{'max diff':>12}")
    for name, make in CASES.items():
        for N in sizes:
            fn = make(N)
            with use_backend("numba"):
                fn()  # compile
                tn, on = _best(fn, args.repeat)
            with use_backend("numpy"):
                tp, op = _best(fn, args.repeat)
            diff = float(np.nanmax(np.abs(on - op)))
            print(f"{name:<10}{N:>6}{tn:>12.4f}{tp:>12.4f}{tp / tn:>10.1f}{diff:>12.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
