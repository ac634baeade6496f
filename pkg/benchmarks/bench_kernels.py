"""Benchmark the numba-compiled loop kernels against their numpy twins.

Times the three batch kernels (plain Plackett-Luce, stratified augmented,
position-dependent augmented) on synthetic datasets of increasing size and
prints a table of per-call times and speedups. Run from the repo root:

    python3 benchmarks/bench_kernels.py [--sizes 1000,10000,100000] [--m 8]

The numba path is skipped automatically when numba is unavailable or when
TOPKORDERS_BACKEND=numpy is set.
"""

import argparse
import time

import numpy as np

from topkorders import Dataset, Universe, backend_name
from topkorders.kernels import (
    _apd_loop_jit,
    _augs_loop_jit,
    _pl_loop_jit,
    apd_nll_grad_numpy,
    augs_nll_grad_numpy,
    pl_nll_grad_numpy,
)
from topkorders.backend import USE_NUMBA


def make_batch(m, n, rng):
    orders = []
    for _ in range(n):
        k = int(rng.integers(1, m + 1))
        orders.append(tuple(int(a) + 1 for a in rng.permutation(m)[:k]))
    from topkorders import PartialOrder

    D = Dataset(Universe(m), tuple(PartialOrder(o) for o in orders))
    items, lengths = D.to_padded()
    weights = np.ones(n)
    return items, lengths, weights


def time_call(fn, *args, repeats=5):
    fn(*args)  # warm-up (and numba compilation)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="1000,10000,100000")
    ap.add_argument("--m", type=int, default=8)
    ap.add_argument("--K", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    m, K = args.m, args.K
    rng = np.random.default_rng(args.seed)
    theta = rng.normal(size=m)
    gamma = rng.normal(size=m)
    banks = rng.normal(size=(K, m + 1))

    print(f"backend: {backend_name()}  (numba loop column "
          f"{'enabled' if USE_NUMBA else 'DISABLED - numpy fallback only'})")
    header = f"{'kernel':<10} {'n':>8} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        items, lengths, weights = make_batch(m, n, rng)
        cases = [
            ("pl", pl_nll_grad_numpy, _pl_loop_jit, (items, lengths, weights, theta)),
            ("aug-s", augs_nll_grad_numpy, _augs_loop_jit,
             (items, lengths, weights, banks)),
            ("a-pd", apd_nll_grad_numpy, _apd_loop_jit,
             (items, lengths, weights, theta, gamma)),
        ]
        for name, np_fn, loop_fn, a in cases:
            t_np = time_call(np_fn, *a)
            if USE_NUMBA:
                t_nb = time_call(loop_fn, *a)
                print(f"{name:<10} {n:>8} {t_np * 1e3:>12.3f} "
                      f"{t_nb * 1e3:>12.3f} {t_np / t_nb:>7.1f}x")
            else:
                print(f"{name:<10} {n:>8} {t_np * 1e3:>12.3f} {'-':>12} {'-':>8}")


if __name__ == "__main__":
    main()
