"""Optional-flag annotation: certainty of request/response membership.

A request field is certain (optional = false) when every region path from
the entry reads it and no region path writes it; a response field is certain
when every path writes it and no path reads it.  Anything read and written
along some path stays optional, and a field playing both roles is always
optional.  "Every path" is a must-analysis: intersection over successors,
iterated to the greatest fixpoint, so loops that may skip an access demote
certainty.
"""

from __future__ import annotations

from ..frontend.model import DataItem, Statement
from ..graphs import Cfg
from .model import ApiSignature, UseDefSets


def surety_annotate(signature: ApiSignature, cfg: Cfg,
                    sets: UseDefSets | None = None) -> ApiSignature:
    region = signature.region
    if sets is None:
        sets = UseDefSets(region.statements)
    members = region.member_set()

    reachable: set[Statement] = set()
    stack = [region.entry]
    while stack:
        n = stack.pop()
        if n in reachable:
            continue
        reachable.add(n)
        stack.extend(t for t in cfg.succ(n) if t in members)

    region_succs: dict[Statement, list[Statement]] = {}
    terminal: dict[Statement, bool] = {}
    for n in reachable:
        inside = [t for t in cfg.succ(n) if t in members]
        region_succs[n] = inside
        # a path may end here: no successors at all, or an edge out of the region
        terminal[n] = len(inside) < len(cfg.succ(n)) or not cfg.succ(n)

    read_somewhere: dict[DataItem, bool] = {}
    written_somewhere: dict[DataItem, bool] = {}
    for n in reachable:
        for item in sets.gen(n):
            read_somewhere[item] = True
        for item in sets.resp_gen[n]:
            written_somewhere[item] = True

    def all_paths(have: dict[Statement, frozenset[DataItem]], item: DataItem) -> bool:
        state = {n: True for n in reachable}
        changed = True
        while changed:
            changed = False
            for n in reachable:
                here = item in have[n]
                nxt = here or (not terminal[n] and bool(region_succs[n])
                               and all(state[k] for k in region_succs[n]))
                if nxt != state[n]:
                    state[n] = nxt
                    changed = True
        return state.get(region.entry, False)

    both_items = signature.request_items() & signature.response_items()

    for fr in signature.requests:
        if fr.item in both_items:
            fr.optional = True
            continue
        certain = (not written_somewhere.get(fr.item, False)
                   and all_paths(sets.req_gen, fr.item))
        fr.optional = not certain
    for fr in signature.responses:
        if fr.item in both_items:
            fr.optional = True
            continue
        certain = (not read_somewhere.get(fr.item, False)
                   and all_paths(sets.resp_gen, fr.item))
        fr.optional = not certain
    return signature
