"""Call-chain handling for signature computation.

Without call-chain analysis a call site is opaque: it may write everything
passed to it (the argument closure) and reads nothing, so requests come from
the lines before the call and responses from the storage the callee may have
filled.  With call-chain analysis every literal call target is replaced by a
summary of the callee's requests/responses over its PROCEDURE DIVISION USING
parameters, translated back onto the caller's argument items positionally and
byte-by-byte.  Summaries over cyclic call graphs start at the empty pair and
are swept to a fixpoint.
"""

from __future__ import annotations

from typing import Iterable, Optional

from ..errors import MissingCallee, NonTerminatingFixpoint
from ..frontend.model import LINKAGE, DataDictionary, DataItem, SourceUnit, Statement
from ..graphs import CallGraph, Cfg, CodeRegion, build_cfg, make_region
from .analyses import (
    DEFAULT_PATH_BUDGET,
    DEFAULT_UNROLL,
    flow_insensitive_signature,
    flow_sensitive_signature,
    path_sensitive_signature,
)
from .liveness import solve_region_liveness
from .model import CALL_KINDS, ApiSignature, CallEffects, UseDefSets, Variant


def argument_closure(stmt: Statement) -> set[DataItem]:
    out: set[DataItem] = set()
    for arg in stmt.call_arguments:
        out |= arg.storage_closure()
    return out


def _param_space(unit: SourceUnit) -> set[DataItem]:
    space: set[DataItem] = set()
    for param in unit.using_params:
        space |= param.storage_closure()
    if space:
        dictionary = DataDictionary(unit)
        for item in set(space):
            space |= {a for a in dictionary.overlap_aliases(item) if a.section == LINKAGE}
    return space


def translate_fields(fields: Iterable[DataItem], callee: SourceUnit,
                     call_site: Statement, as_writes: bool) -> tuple[set[DataItem], bool]:
    """Map callee linkage fields onto caller argument sub-items.

    Arguments bind to USING parameters positionally; inside a bound pair a
    field maps through its parameter-relative byte range.  Reads take every
    overlapping caller item (over-approximate); writes take only items fully
    inside the written range (safe to kill).  Any clipping or arity mismatch
    degrades the result.
    """
    params = callee.using_params
    args = call_site.call_arguments
    degraded = len(params) != len(args)
    out: set[DataItem] = set()
    param_index = {id(p): i for i, p in enumerate(params)}
    for field in fields:
        owner = None
        if id(field) in param_index:
            owner = field
        else:
            for anc in field.ancestors():
                if id(anc) in param_index:
                    owner = anc
                    break
        if owner is None:
            continue
        idx = param_index[id(owner)]
        if idx >= len(args):
            degraded = True
            continue
        arg = args[idx]
        rel = field.byte_offset - owner.byte_offset
        if rel >= arg.byte_size:
            degraded = True
            continue
        end = rel + field.byte_size
        if end > arg.byte_size:
            end = arg.byte_size
            degraded = True
        lo = arg.byte_offset + rel
        hi = arg.byte_offset + end
        exact = None
        for cand in (arg, *arg.descendants()):
            if cand.is_condition_name:
                continue
            if cand.byte_offset == lo and cand.end_offset == hi:
                exact = cand
                break
        if exact is not None:
            out |= exact.storage_closure()
            continue
        for cand in (arg, *arg.descendants()):
            if cand.is_condition_name:
                continue
            if as_writes:
                if cand.byte_offset >= lo and cand.end_offset <= hi:
                    out.add(cand)
            else:
                if cand.byte_offset < hi and cand.end_offset > lo:
                    out.add(cand)
    return out, degraded


class SummaryTable:
    """Fixpoint table of per-program (requests, responses) over linkage params."""

    def __init__(self, units: dict[str, SourceUnit], cfgs: dict[str, Cfg],
                 flow: str, backend: Optional[str] = None):
        self.units = units
        self.cfgs = cfgs
        self.flow = "fi" if flow == "fi" else "fs"
        self.backend = backend
        self.requests: dict[str, frozenset[DataItem]] = {}
        self.responses: dict[str, frozenset[DataItem]] = {}
        self.degraded: dict[str, bool] = {}
        self.rounds = 0

    def summary(self, program: str) -> tuple[frozenset[DataItem], frozenset[DataItem], bool]:
        return (self.requests.get(program, frozenset()),
                self.responses.get(program, frozenset()),
                self.degraded.get(program, False))

    def ensure(self, roots: Iterable[str]) -> None:
        needed: list[str] = []
        work = [r for r in roots if r in self.units]
        seen = set(work)
        while work:
            prog = work.pop()
            needed.append(prog)
            for stmt in self.units[prog].all_statements():
                if stmt.kind in CALL_KINDS and stmt.call_target in self.units \
                        and stmt.call_target not in seen:
                    seen.add(stmt.call_target)
                    work.append(stmt.call_target)
        needed = sorted(set(needed))
        if not needed:
            return
        for prog in needed:
            self.requests.setdefault(prog, frozenset())
            self.responses.setdefault(prog, frozenset())
            self.degraded.setdefault(prog, False)
        total_linkage = sum(
            1 for prog in needed for item in self.units[prog].all_items()
            if item.section == LINKAGE)
        bound = len(needed) * max(total_linkage, 1) + 1
        changed = True
        while changed:
            changed = False
            self.rounds += 1
            if self.rounds > bound:
                raise NonTerminatingFixpoint(
                    f"summary fixpoint exceeded {bound} rounds over {len(needed)} programs")
            for prog in needed:
                req, resp, deg = self._analyze(prog)
                if (req != self.requests[prog] or resp != self.responses[prog]
                        or deg != self.degraded[prog]):
                    self.requests[prog] = req
                    self.responses[prog] = resp
                    self.degraded[prog] = deg
                    changed = True

    def _cfg(self, program: str) -> Cfg:
        if program not in self.cfgs:
            self.cfgs[program] = build_cfg(self.units[program])
        return self.cfgs[program]

    def _analyze(self, program: str) -> tuple[frozenset[DataItem], frozenset[DataItem], bool]:
        unit = self.units[program]
        stmts = unit.all_statements()
        if not stmts:
            return frozenset(), frozenset(), False
        region = make_region(unit, min(s.line for s in stmts), max(s.line for s in stmts))
        effects, degraded = build_call_effects(
            region, self.units, table=self, strict=False)
        sets = UseDefSets(region.statements, effects)
        requests: set[DataItem] = set()
        responses: set[DataItem] = set()
        if self.flow == "fi":
            for s in region.statements:
                requests |= sets.gen(s)
                responses |= sets.resp_gen[s]
        else:
            state = solve_region_liveness(region, self._cfg(program), sets,
                                          backend=self.backend)
            requests = set(state.req_in[region.entry])
            for s in region.statements:
                responses |= sets.resp_gen[s]
        space = _param_space(unit)
        return frozenset(requests & space), frozenset(responses & space), degraded


def build_call_effects(region: CodeRegion, units: dict[str, SourceUnit],
                       table: Optional[SummaryTable], strict: bool
                       ) -> tuple[CallEffects, bool]:
    """Per-call-site (reads, writes) overrides; ``table=None`` means every
    site keeps the without-call-chain default (write the argument closure)."""
    effects: CallEffects = {}
    degraded = False
    caller_dict: Optional[DataDictionary] = None
    for stmt in region.statements:
        if stmt.kind not in CALL_KINDS:
            continue
        if table is None:
            continue  # default modeling applies
        target = stmt.call_target
        if target is None:
            degraded = True
            continue
        if target not in units:
            if strict:
                raise MissingCallee(target)
            degraded = True
            continue
        callee = units[target]
        req_c, resp_c, deg_c = table.summary(target)
        reads, d1 = translate_fields(req_c, callee, stmt, as_writes=False)
        writes, d2 = translate_fields(resp_c, callee, stmt, as_writes=True)
        if reads:
            if caller_dict is None:
                caller_dict = DataDictionary(_unit_of(region, units))
            for item in set(reads):
                reads |= caller_dict.overlap_aliases(item)
        effects[stmt] = (reads, writes)
        degraded |= deg_c or d1 or d2
    return effects, degraded


def _unit_of(region: CodeRegion, units: dict[str, SourceUnit]) -> SourceUnit:
    return units[region.program]


def interprocedural_signature(region: CodeRegion, units: dict[str, SourceUnit],
                              call_graph: Optional[CallGraph] = None,
                              flow: str = "fs", with_call_chain: bool = False,
                              cfgs: Optional[dict[str, Cfg]] = None,
                              strict: bool = False,
                              post_context: Optional[set[DataItem]] = None,
                              ps_bound: int = DEFAULT_PATH_BUDGET,
                              unroll: int = DEFAULT_UNROLL,
                              backend: Optional[str] = None) -> ApiSignature:
    if region.program not in units:
        raise MissingCallee(region.program)
    cfgs = cfgs if cfgs is not None else {}
    if region.program not in cfgs:
        cfgs[region.program] = build_cfg(units[region.program])
    cfg = cfgs[region.program]

    table: Optional[SummaryTable] = None
    if with_call_chain:
        table = SummaryTable(units, cfgs, flow, backend=backend)
        table.ensure(s.call_target for s in region.statements
                     if s.kind in CALL_KINDS and s.call_target)
    effects, degraded = build_call_effects(region, units, table, strict)
    sets = UseDefSets(region.statements, effects)
    variant = Variant(flow, with_call_chain)

    if flow == "fi":
        sig = flow_insensitive_signature(region, sets, cfg, variant, degraded)
    elif flow == "fs":
        sig = flow_sensitive_signature(region, cfg, sets, post_context, variant,
                                       degraded, backend=backend)
    elif flow == "ps":
        sig = path_sensitive_signature(region, cfg, sets, ps_bound, unroll,
                                       variant, degraded)
    else:
        raise ValueError(f"unknown flow variant {flow!r}")
    sig.stats["summary_rounds"] = table.rounds if table is not None else 0
    return sig
