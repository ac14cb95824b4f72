"""Compare the numba and numpy kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--N 12] [--repeat 5]

Times a single sector matrix, a full beam splitter on a dense four-mode
state, and one exhaustive generator run, each under both backends, after a
warm-up call that absorbs JIT compilation.
"""

import argparse
import math
import time

import numpy as np

from noongen import accel, kernels, optics
from noongen import generator as G


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def _cases(N):
    s = G.dual_fock_input(N)
    tap = math.asin(math.sqrt(0.5))
    s = optics.beam_splitter(s, tap, 0.0, (0, 2))
    s = optics.beam_splitter(s, tap, 0.0, (1, 3))

    def matrix():
        kernels._cached_stack.cache_clear()
        kernels.sector_matrix(2 * N, 0.3, 0.7)

    def splitter():
        kernels._cached_stack.cache_clear()
        optics.beam_splitter(s, math.pi / 4, 0.0, (2, 3))

    def pipeline():
        kernels._cached_stack.cache_clear()
        G._circuit_I_cached.cache_clear()
        G.enumerate_outcomes(G.GeneratorConfig(N, 0.5))

    return {"sector_matrix": matrix, "beam_splitter": splitter, "generator": pipeline}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=12)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"N={args.N}, best of {args.repeat}")
    print(f"{'case':<16}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, fn in _cases(args.N).items():
        with accel.backend(True):
            t_nb = _best(fn, args.repeat)
        with accel.backend(False):
            t_np = _best(fn, args.repeat)
        print(f"{name:<16}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>10.1f}")
    # both backends must agree
    with accel.backend(True):
        a = kernels.sector_matrix(2 * args.N, 0.3, 0.7)
    with accel.backend(False):
        b = kernels.sector_matrix(2 * args.N, 0.3, 0.7)
    print(f"max |numba - numpy| = {np.abs(a - b).max():.2e}")


if __name__ == "__main__":
    main()
