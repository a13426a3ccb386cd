"""Timing comparison of the numba and pure-numpy kernel flavors.

Run as:  python benchmarks/bench_kernels.py [--sizes 40,100,200]

Imports both flavors directly (ignoring the RESONET_NO_NUMBA dispatch) so
the two code paths are always timed side by side. Numbers are wall-clock
medians over `repeat` calls after a warmup call (which also absorbs JIT
compilation).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from resonet import _kernels as K


def bench(fn, *args, repeat=5):
    fn(*args)  # warmup / JIT
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def fmt(seconds):
    if seconds < 1e-3:
        return f"{seconds * 1e6:8.1f} us"
    if seconds < 1.0:
        return f"{seconds * 1e3:8.2f} ms"
    return f"{seconds:8.3f} s "


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="40,100,200",
                        help="comma-separated matrix sizes")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if not K.NUMBA_ENABLED:
        print("note: numba flavor unavailable (RESONET_NO_NUMBA set or numba "
              "missing); only the numpy flavor is timed\n")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'n':>6}{'numpy':>14}{'numba':>14}{'speedup':>10}")
    for n in sizes:
        a = rng.standard_normal((n, n))
        a = (a + a.T) / 2
        t_np = bench(K.jacobi_eig_np, a, repeat=args.repeat)
        if K.NUMBA_ENABLED:
            t_nb = bench(K.jacobi_eig_nb, a, repeat=args.repeat)
            print(f"{'jacobi_eig':<28}{n:>6}{fmt(t_np):>14}{fmt(t_nb):>14}"
                  f"{t_np / t_nb:>9.1f}x")
        else:
            print(f"{'jacobi_eig':<28}{n:>6}{fmt(t_np):>14}{'-':>14}{'-':>10}")

    for n in sizes:
        om = np.sort(rng.uniform(1.0, 5.0, n))
        t_np = bench(K.pair_sum_np, om, 0.1, repeat=args.repeat)
        g_np = bench(K.pair_sum_grad_np, om, 0.1, repeat=args.repeat)
        if K.NUMBA_ENABLED:
            t_nb = bench(K.pair_sum, om, 0.1, repeat=args.repeat)
            g_nb = bench(K.pair_sum_grad, om, 0.1, repeat=args.repeat)
            print(f"{'pair_sum':<28}{n:>6}{fmt(t_np):>14}{fmt(t_nb):>14}"
                  f"{t_np / t_nb:>9.1f}x")
            print(f"{'pair_sum_grad':<28}{n:>6}{fmt(g_np):>14}{fmt(g_nb):>14}"
                  f"{g_np / g_nb:>9.1f}x")
        else:
            print(f"{'pair_sum':<28}{n:>6}{fmt(t_np):>14}{'-':>14}{'-':>10}")
            print(f"{'pair_sum_grad':<28}{n:>6}{fmt(g_np):>14}{'-':>14}{'-':>10}")

    for n in (10, 40):
        k = rng.standard_normal((n, n))
        k = k @ k.T + n * np.eye(n)
        damp = 0.02 * k
        f = rng.standard_normal(n)
        steps = 20_000
        rk_args = (k, damp, f, 2.0, 1e-3, steps, np.zeros(n), np.zeros(n))
        t_np = bench(K.rk4_forced_np, *rk_args, repeat=args.repeat)
        if K.NUMBA_ENABLED:
            t_nb = bench(K.rk4_forced_nb, *rk_args, repeat=args.repeat)
            print(f"{'rk4_forced (20k steps)':<28}{n:>6}{fmt(t_np):>14}"
                  f"{fmt(t_nb):>14}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{'rk4_forced (20k steps)':<28}{n:>6}{fmt(t_np):>14}"
                  f"{'-':>14}{'-':>10}")


if __name__ == "__main__":
    main()
