"""Region-restricted backward liveness (the request-variable fixpoint).

ReqIn/ReqOut are iterated to a fixpoint over the region's sub-CFG; edges
leaving the region seed ReqOut with the empty set, so the requests of the
region are ReqIn at its entry statement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonTerminatingFixpoint
from ..frontend.model import DataItem, Statement
from ..graphs import Cfg, CodeRegion, post_order
from .kernels import solve_liveness_matrix
from .model import UseDefSets


@dataclass
class LivenessState:
    req_in: dict[Statement, set[DataItem]]
    req_out: dict[Statement, set[DataItem]]
    iterations: int


def solve_region_liveness(region: CodeRegion, cfg: Cfg, sets: UseDefSets,
                          backend: str | None = None) -> LivenessState:
    stmts = region.statements
    members = region.member_set()
    n = len(stmts)

    items = sorted({i for s in stmts for i in sets.gen(s) | sets.kill(s)},
                   key=lambda i: (i.qualified_name, i.section))
    item_idx = {item: k for k, item in enumerate(items)}
    k = len(items)

    stmt_idx = {s: i for i, s in enumerate(stmts)}
    gen = np.zeros((n, k), dtype=np.bool_)
    kill = np.zeros((n, k), dtype=np.bool_)
    for s in stmts:
        row = stmt_idx[s]
        for item in sets.gen(s):
            gen[row, item_idx[item]] = True
        for item in sets.kill(s):
            kill[row, item_idx[item]] = True

    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = []
    for i, s in enumerate(stmts):
        for t in cfg.succ(s):
            if t in members:
                indices.append(stmt_idx[t])
        indptr[i + 1] = len(indices)
    succ_indices = np.asarray(indices, dtype=np.int64)

    # post-order from the region entry puts exit-most nodes first, which is
    # the fast sweep order for a backward problem; stragglers go last
    ordered = post_order(cfg, roots=[region.entry], restrict=members)
    order = [stmt_idx[s] for s in ordered]
    seen = set(order)
    order.extend(i for i in range(n) if i not in seen)
    order_arr = np.asarray(order, dtype=np.int64)

    bound = k * n + 1
    req_in_m, req_out_m, sweeps = solve_liveness_matrix(
        gen, kill, indptr, succ_indices, order_arr, max_sweeps=bound + 1,
        backend=backend)
    if sweeps > bound:
        raise NonTerminatingFixpoint(
            f"liveness did not stabilize within {bound} sweeps over "
            f"{n} statements x {k} items")

    req_in = {s: {items[j] for j in np.flatnonzero(req_in_m[stmt_idx[s]])} for s in stmts}
    req_out = {s: {items[j] for j in np.flatnonzero(req_out_m[stmt_idx[s]])} for s in stmts}
    return LivenessState(req_in=req_in, req_out=req_out, iterations=int(sweeps))
