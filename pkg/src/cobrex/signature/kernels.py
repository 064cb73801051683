"""Bitset liveness solver kernels.

Backward liveness over a region is the toolchain's hot loop: the verifier
alone runs it over a thousand generated programs.  Sets are packed into a
boolean matrix (statements x items) and the fixpoint is an in-place sweep in
post-order until nothing changes:

    out[n] = OR of in[k] over region successors k        (exit rows stay 0)
    in[n]  = gen[n] | (out[n] & ~kill[n])

Two interchangeable implementations exist:

* a numba ``@njit`` loop kernel (default when numba is importable), and
* a pure-numpy fallback using row reductions.

``COBREX_NUMBA=0`` forces the numpy path, ``COBREX_NUMBA=1`` requires numba,
anything else auto-detects.  ``benchmarks/bench_liveness.py`` compares both.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via COBREX_NUMBA=0
    numba = None
    HAS_NUMBA = False


def _solve_numpy(gen: np.ndarray, kill: np.ndarray, succ_indptr: np.ndarray,
                 succ_indices: np.ndarray, order: np.ndarray,
                 max_sweeps: int) -> tuple[np.ndarray, np.ndarray, int]:
    n_nodes, n_items = gen.shape
    req_in = gen.copy()
    req_out = np.zeros((n_nodes, n_items), dtype=np.bool_)
    not_kill = ~kill
    sweeps = 0
    changed = True
    while changed and sweeps < max_sweeps:
        changed = False
        sweeps += 1
        for idx in order:
            lo, hi = succ_indptr[idx], succ_indptr[idx + 1]
            if hi > lo:
                out_row = req_in[succ_indices[lo:hi]].any(axis=0)
            else:
                out_row = req_out[idx] & False
            in_row = gen[idx] | (out_row & not_kill[idx])
            if not np.array_equal(in_row, req_in[idx]) or not np.array_equal(out_row, req_out[idx]):
                changed = True
            req_out[idx] = out_row
            req_in[idx] = in_row
    return req_in, req_out, sweeps


def _solve_loops(gen, kill, succ_indptr, succ_indices, order, max_sweeps):
    # element-wise twin of _solve_numpy written for nopython compilation
    n_nodes = gen.shape[0]
    n_items = gen.shape[1]
    req_in = gen.copy()
    req_out = np.zeros((n_nodes, n_items), dtype=np.bool_)
    sweeps = 0
    changed = True
    while changed and sweeps < max_sweeps:
        changed = False
        sweeps += 1
        for oi in range(order.shape[0]):
            idx = order[oi]
            for j in range(n_items):
                out_bit = False
                for p in range(succ_indptr[idx], succ_indptr[idx + 1]):
                    if req_in[succ_indices[p], j]:
                        out_bit = True
                        break
                in_bit = gen[idx, j] or (out_bit and not kill[idx, j])
                if out_bit != req_out[idx, j] or in_bit != req_in[idx, j]:
                    changed = True
                req_out[idx, j] = out_bit
                req_in[idx, j] = in_bit
    return req_in, req_out, sweeps


_numba_solver = None


def _get_numba_solver():
    global _numba_solver
    if _numba_solver is None:
        _numba_solver = numba.njit(cache=True)(_solve_loops)
    return _numba_solver


def active_backend(backend: str | None = None) -> str:
    """Resolve the kernel backend: explicit argument beats COBREX_NUMBA beats auto."""
    choice = backend or os.environ.get("COBREX_NUMBA", "auto").strip().lower()
    if choice in ("0", "false", "off", "numpy"):
        return "numpy"
    if choice in ("1", "true", "on", "numba"):
        if not HAS_NUMBA:
            raise RuntimeError("COBREX_NUMBA=1 but numba is not installed")
        return "numba"
    return "numba" if HAS_NUMBA else "numpy"


def solve_liveness_matrix(gen: np.ndarray, kill: np.ndarray, succ_indptr: np.ndarray,
                          succ_indices: np.ndarray, order: np.ndarray,
                          max_sweeps: int, backend: str | None = None
                          ) -> tuple[np.ndarray, np.ndarray, int]:
    if gen.size == 0 or order.size == 0:
        return gen.copy(), np.zeros_like(gen), 1
    if active_backend(backend) == "numba":
        solver = _get_numba_solver()
        return solver(gen, kill, succ_indptr, succ_indices, order, max_sweeps)
    return _solve_numpy(gen, kill, succ_indptr, succ_indices, order, max_sweeps)
