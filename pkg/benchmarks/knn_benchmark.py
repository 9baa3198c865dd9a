"""Time the parallel nearest-neighbor kernel against the pure-numpy twin.

The two backends are bit-for-bit interchangeable, so the only question is
speed. The jit path is compiled once outside the timed region; each backend
reports its best wall time over --repeats runs.

Usage: python benchmarks/knn_benchmark.py [--n 10000] [--d 32] [--k 20]
"""
import argparse
import time

import numpy as np

from cutselect._kernels import knn_topk_numba, knn_topk_numpy


def best_time(fn, x, k, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(x, k)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000, help="number of points")
    ap.add_argument("--d", type=int, default=32, help="embedding dimension")
    ap.add_argument("--k", type=int, default=20, help="neighbors per point")
    ap.add_argument("--repeats", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    x = rng.standard_normal((args.n, args.d))
    print(f"n={args.n} d={args.d} k={args.k} repeats={args.repeats}")

    t_np, out_np = best_time(knn_topk_numpy, x, args.k, args.repeats)
    print(f"numpy  {t_np:8.3f}s")

    if knn_topk_numba is None:
        print("numba  unavailable (not installed or CUTSELECT_BACKEND=numpy)")
        return
    knn_topk_numba(x[:64], min(args.k, 63))
    t_nb, out_nb = best_time(knn_topk_numba, x, args.k, args.repeats)
    same = all(np.array_equal(a, b) for a, b in zip(out_np, out_nb))
    print(f"numba  {t_nb:8.3f}s  (speedup {t_np / t_nb:.1f}x)")
    print(f"outputs identical: {same}")


if __name__ == "__main__":
    main()
