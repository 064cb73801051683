"""Benchmark the backward-liveness kernels: numba @njit vs pure numpy.

Synthetic instances mimic region sub-CFGs: mostly sequential statements with
short forward branches, sparse gen/kill bits, post-order sweep order.  The
numba timing excludes the one-off JIT compile (a warm-up call precedes the
measured runs).

    python benchmarks/bench_liveness.py [--repeats 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cobrex.signature.kernels import HAS_NUMBA, solve_liveness_matrix

SIZES = [
    (200, 32),
    (1000, 64),
    (4000, 128),
    (8000, 256),
]


def make_instance(rng: np.random.Generator, n_stmts: int, n_items: int):
    gen = rng.random((n_stmts, n_items)) < 0.05
    kill = rng.random((n_stmts, n_items)) < 0.05
    indptr = [0]
    indices: list[int] = []
    for i in range(n_stmts):
        if i + 1 < n_stmts:
            indices.append(i + 1)
        if i + 7 < n_stmts and rng.random() < 0.15:  # a short forward branch
            indices.append(i + 7)
        indptr.append(len(indices))
    order = np.arange(n_stmts - 1, -1, -1, dtype=np.int64)
    return (gen, kill, np.asarray(indptr, dtype=np.int64),
            np.asarray(indices, dtype=np.int64), order)


def time_backend(backend: str, instance, repeats: int) -> tuple[float, int]:
    gen, kill, indptr, indices, order = instance
    cap = gen.shape[0] * max(gen.shape[1], 1) + 2
    solve_liveness_matrix(gen, kill, indptr, indices, order, cap, backend=backend)
    best = float("inf")
    sweeps = 0
    for _ in range(repeats):
        start = time.perf_counter()
        _, _, sweeps = solve_liveness_matrix(gen, kill, indptr, indices, order,
                                             cap, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best, sweeps


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(2024)
    print(f"{'stmts':>7} {'items':>6} {'sweeps':>7} {'numpy ms':>10} "
          f"{'numba ms':>10} {'speedup':>8}")
    for n_stmts, n_items in SIZES:
        instance = make_instance(rng, n_stmts, n_items)
        numpy_t, sweeps = time_backend("numpy", instance, args.repeats)
        if HAS_NUMBA:
            numba_t, numba_sweeps = time_backend("numba", instance, args.repeats)
            assert numba_sweeps == sweeps
            ratio = f"{numpy_t / numba_t:7.1f}x"
            numba_ms = f"{numba_t * 1e3:10.2f}"
        else:
            ratio, numba_ms = "    n/a", "       n/a"
        print(f"{n_stmts:>7} {n_items:>6} {sweeps:>7} {numpy_t * 1e3:10.2f} "
              f"{numba_ms} {ratio}")
    if not HAS_NUMBA:
        print("numba not installed; only the numpy fallback was measured")


if __name__ == "__main__":
    main()
