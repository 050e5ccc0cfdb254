"""Compare the numba kernels with their pure-numpy fallbacks.

Each case is run once to warm up (so JIT compilation is not timed) and then
timed as the best of ``--repeat`` runs on each backend.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]
"""
import argparse
import time

import numpy as np

from critical_hawkes._accel import HAVE_NUMBA
from critical_hawkes.analytics import LaplaceQuery, solve_gT
from critical_hawkes.model import ModelSpec
from critical_hawkes.primitives import (
    Dirac,
    Exponential,
    HawkesMixedPoisson,
    MittagLeffler,
    StableBranching,
)
from critical_hawkes.primitives.special import _contour
from critical_hawkes.resolvent import solve_toeplitz
from critical_hawkes.simulator import sample_counts


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _cases(quick):
    reps = 500 if quick else 4000
    n_toep = 1000 if quick else 4000
    n_ml = 2000 if quick else 20000
    T = 20.0 if quick else 100.0
    hawkes = ModelSpec(1.0, Exponential(1.0), HawkesMixedPoisson(Dirac(1.0)))
    stable = ModelSpec(1.0, MittagLeffler(0.5, 1.0), StableBranching(0.5))
    q = LaplaceQuery((1.0,), (1.0,))
    rng = np.random.default_rng(0)
    w = 0.5 * rng.random(n_toep) / n_toep
    rhs = np.linspace(0.0, 1.0, n_toep)
    x = -np.linspace(0.0, 20.0, n_ml)
    return [
        (f"simulator, {reps} replicas to t=10",
         lambda nb: sample_counts(hawkes, 10.0, [10.0], reps, 1, use_numba=nb)),
        (f"simulator, stable branching, {reps} to t=20",
         lambda nb: sample_counts(stable, 20.0, [20.0], reps, 1, use_numba=nb)),
        (f"g_T backward march, T={T:g}",
         lambda nb: solve_gT(q, T, stable, check_bounds=False, use_numba=nb)),
        (f"Mittag-Leffler contour, {n_ml} points",
         lambda nb: _contour(x, 0.5, 1.0, use_numba=nb)),
        (f"Toeplitz forward solve, n={n_toep}",
         lambda nb: solve_toeplitz(w, rhs, method="direct", use_numba=nb)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy backend is available")
    print(f"{'case':42s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, fn in _cases(args.quick):
        t_np = _best(lambda: fn(False), args.repeat)
        if HAVE_NUMBA:
            t_nb = _best(lambda: fn(True), args.repeat)
            print(f"{name:42s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}x")
        else:
            print(f"{name:42s} {'-':>10s} {t_np:10.4f} {'-':>8s}")


if __name__ == "__main__":
    main()
