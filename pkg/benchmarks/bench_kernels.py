"""Time the numba kernels against their numpy twins.

Run: ``python benchmarks/bench_kernels.py [--repeat 5]``. Each kernel is
called once before timing so JIT compilation is excluded.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from birkhoff_mf import _kernels as K


def _time(fn, args, repeat):
    fn(*args)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    n = 10_000
    idx = np.arange(1, n + 1, dtype=float)
    log_r = -np.log(idx * (idx + 1))
    f = -log_r
    yield "weighted_moments N=1e4", K.weighted_moments_numpy, K.weighted_moments_numba, (log_r, f, 0.8, -0.3)

    m = rng.random((60, 60)) * (rng.random((60, 60)) < 0.3)
    np.fill_diagonal(m, 0.0)
    m[np.arange(60), (np.arange(60) + 1) % 60] = 1.0
    yield "perron 60x60", K.perron_numpy, K.perron_numba, (m, 1e-13, 100_000)

    adj = (m > 0).astype(np.float64)
    w = rng.normal(size=60)
    yield "min_mean_cycle 60x60", K.min_mean_cycle_numpy, K.min_mean_cycle_numba, (adj, w)

    a = np.array([[1.0, 1.0], [1.0, 0.0]])
    lw = np.log(np.array([0.5, 0.25]))
    lp = np.log(np.array([0.6, 0.4]))
    lt = np.log(np.array([[0.5, 0.5], [1.0, 1e-300]]))
    yield "gibbs_ratio_bounds len<=16", K.gibbs_ratio_bounds_numpy, K.gibbs_ratio_bounds_numba, (a, lw, lp, lt, 0.0, 16)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not K.HAVE_NUMBA:
        print("numba not installed; nothing to compare")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<28}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, f_np, f_nb, fargs in cases(rng):
        t_np = _time(f_np, fargs, args.repeat)
        t_nb = _time(f_nb, fargs, args.repeat)
        print(f"{name:<28}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
