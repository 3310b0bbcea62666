#!/usr/bin/env python3
"""Compare the compiled and pure-numpy assignment kernels.

Both kernels implement the same shortest-augmenting-path algorithm and
return bit-identical assignments; this script measures the speed gap and
verifies the agreement on the way.

Usage: python benchmarks/bench_lap.py [--sizes 128 256 512] [--repeats 3]
"""

import argparse
import time

import numpy as np

from commatch.lap import _sap_py

try:
    from commatch.lap import _sap_c
except ImportError:
    _sap_c = None


def time_kernel(kernel, C, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        mapping = kernel.lap_mapping(C)
        best = min(best, time.perf_counter() - t0)
    return best, mapping


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[128, 256, 512, 1024])
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if _sap_c is None:
        print("compiled kernel not built (python setup.py build_ext "
              "--inplace); timing the numpy kernel only")

    rng = np.random.default_rng(args.seed)
    header = f"{'n':>6} {'numpy (s)':>12}"
    if _sap_c is not None:
        header += f" {'compiled (s)':>13} {'speedup':>8} {'identical':>10}"
    print(header)
    for n in args.sizes:
        C = rng.normal(size=(n, n))
        t_py, m_py = time_kernel(_sap_py, C, args.repeats)
        line = f"{n:>6} {t_py:>12.4f}"
        if _sap_c is not None:
            t_c, m_c = time_kernel(_sap_c, C, args.repeats)
            line += (f" {t_c:>13.4f} {t_py / t_c:>7.1f}x "
                     f"{'yes' if np.array_equal(m_py, m_c) else 'NO':>10}")
        print(line)


if __name__ == "__main__":
    main()
