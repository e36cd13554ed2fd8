"""Benchmark: compiled enumeration kernel vs the pure-Python fallback.

Run:  python benchmarks/bench_enum.py
"""

import time

from subspace_approx.enumkernel import (
    kernel_name,
    primitive_vectors,
    primitive_vectors_python,
)


def timed(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    print(f"active kernel: {kernel_name}")
    cases = [(2, 2_000_000), (3, 10_000), (4, 1_200), (5, 260)]
    print(f"{'n':>3} {'r2':>10} {'count':>9} {'compiled':>10} {'python':>10} {'speedup':>8}")
    for n, r2 in cases:
        t_c, out_c = timed(primitive_vectors, n, r2)
        t_p, out_p = timed(primitive_vectors_python, n, r2)
        assert out_c == out_p, "kernel outputs diverge"
        print(f"{n:>3} {r2:>10} {len(out_c):>9} {t_c * 1e3:>8.1f}ms {t_p * 1e3:>8.1f}ms {t_p / t_c:>7.2f}x")


if __name__ == "__main__":
    main()
