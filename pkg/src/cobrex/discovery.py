"""Candidate API discovery.

Seeds, in emission order per program:

* transaction: one per transaction-table entry, spanning the entry program's
  top-level dispatch (its first EVALUATE's arm bodies); every arm body also
  becomes a control_flow_block candidate.
* data_access: one per maximal run of SQL/file statements inside a paragraph,
  extended over the contiguous loads before and the SQLCODE checks after.
* procedure: every paragraph that performs no other paragraph.
* screen: one per screen map, anchored at the paragraph that receives it.
* inter_program_call: one per callee reached across user-declared partitions.
* user_region: caller-supplied line ranges, passed through.

Programs with embedded SQL additionally offer a dynamic-query candidate whose
signature is fixed by convention (a query-text request, a result-rows
response).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import NoDataAccess, UnknownTransactionProgram
from .frontend.model import Paragraph, SourceUnit, Statement
from .graphs import CodeRegion
from .signature.analyses import classify_http_method
from .workspace import Workspace

DATA_KINDS = {"sql_select", "sql_insert", "sql_update", "sql_delete",
              "file_read", "file_write"}
LOAD_KINDS = {"move", "arithmetic", "initialize", "accept"}


@dataclass
class ApiCandidate:
    seed_kind: str
    region: CodeRegion
    suggested_name: str
    evidence: str
    http_method: str = "get"
    fixed_signature: Optional[dict] = None

    def as_json(self) -> dict:
        return {
            "name": self.suggested_name,
            "seed_kind": self.seed_kind,
            "program": self.region.program,
            "start_line": self.region.start_line,
            "end_line": self.region.end_line,
            "evidence": self.evidence,
        }


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")


def _paragraph_region(unit: SourceUnit, para: Paragraph) -> Optional[CodeRegion]:
    if not para.statements:
        return None
    start = para.statements[0].line
    end = max(s.span_end for s in para.statements)
    return CodeRegion(unit.program_id, start, end,
                      [s for s in unit.all_statements() if start <= s.line <= end])


def _whole_program_region(unit: SourceUnit) -> Optional[CodeRegion]:
    stmts = unit.all_statements()
    if not stmts:
        return None
    return CodeRegion(unit.program_id, stmts[0].line, max(s.line for s in stmts), stmts)


def _line_region(unit: SourceUnit, start: int, end: int) -> CodeRegion:
    return CodeRegion(unit.program_id, start, end,
                      [s for s in unit.all_statements() if start <= s.line <= end])


class _Collector:
    def __init__(self):
        self.out: list[ApiCandidate] = []
        self.seen_regions: set[tuple[str, str, int, int]] = set()
        self.names: dict[str, int] = {}

    def add(self, seed_kind: str, region: Optional[CodeRegion], base_name: str,
            evidence: str, fixed_signature: Optional[dict] = None) -> None:
        if region is None or not region.statements:
            return
        key = (seed_kind, region.program, region.start_line, region.end_line)
        if key in self.seen_regions:
            return
        self.seen_regions.add(key)
        method = classify_http_method(region)
        name = _slug(base_name) if fixed_signature else f"{_slug(base_name)}-{method}"
        count = self.names.get(name, 0)
        self.names[name] = count + 1
        if count:
            name = f"{name}-{count + 1}"
        self.out.append(ApiCandidate(seed_kind=seed_kind, region=region,
                                     suggested_name=name, evidence=evidence,
                                     http_method=method,
                                     fixed_signature=fixed_signature))


def discover_candidates(workspace: Workspace,
                        call_graph=None,
                        screen_maps=None,
                        transaction_table: Optional[Iterable[tuple[str, str]]] = None,
                        user_regions: Iterable[CodeRegion] = (),
                        partitions: Optional[dict[str, str]] = None) -> list[ApiCandidate]:
    call_graph = call_graph if call_graph is not None else workspace.call_graph
    screen_maps = screen_maps if screen_maps is not None else workspace.screen_maps
    transactions = list(transaction_table if transaction_table is not None
                        else workspace.transactions)
    partitions = partitions if partitions is not None else workspace.partitions

    col = _Collector()

    for txn, program in transactions:
        if program not in workspace.units:
            raise UnknownTransactionProgram(txn, program)
        unit = workspace.units[program]
        dispatch = _top_level_dispatch(unit)
        if dispatch is None:
            col.add("transaction", _whole_program_region(unit), f"txn-{txn}",
                    f"transaction {txn} enters {program}; no dispatch block, "
                    f"whole program exposed")
            continue
        arm_start = min(arm.body[0].line for arm in dispatch.when_arms)
        arm_end = max(s.span_end for arm in dispatch.when_arms for s in arm.body)
        col.add("transaction", _line_region(unit, arm_start, arm_end), f"txn-{txn}",
                f"transaction {txn} enters {program}; dispatch at line {dispatch.line}")
        for arm in dispatch.when_arms:
            label = "other" if arm.is_other else arm.values[0]
            start = arm.body[0].line
            end = max(s.span_end for s in arm.body)
            col.add("control_flow_block", _line_region(unit, start, end),
                    f"{program}-when-{label}",
                    f"dispatch arm WHEN {'OTHER' if arm.is_other else repr(arm.values[0])} "
                    f"of {program} line {dispatch.line}")

    for program in sorted(workspace.units):
        unit = workspace.units[program]
        for para in unit.paragraphs:
            for start, end in _data_access_runs(para):
                col.add("data_access", _line_region(unit, start, end),
                        f"{program}-{para.name}-data",
                        f"data access run in paragraph {para.name} of {program}")

    for program in sorted(workspace.units):
        unit = workspace.units[program]
        for para in unit.paragraphs:
            if any(s.kind == "perform" for s in para.flat_statements()):
                continue
            col.add("procedure", _paragraph_region(unit, para),
                    f"{program}-{para.name}",
                    f"standalone paragraph {para.name} of {program} performs no other paragraph")

    for map_name in sorted(screen_maps):
        hit = _receive_site(workspace, map_name)
        if hit is None:
            continue
        program, para = hit
        col.add("screen", _paragraph_region(workspace.units[program], para),
                f"screen-{map_name}",
                f"screen map {map_name} received in paragraph {para.name} of {program}")

    if partitions:
        crossing: dict[str, list[str]] = {}
        for caller, stmt, callee in call_graph.edges:
            p_from = partitions.get(caller)
            p_to = partitions.get(callee)
            if p_from and p_to and p_from != p_to and callee in workspace.units:
                crossing.setdefault(callee, []).append(f"{caller}:{stmt.line}")
        for callee in sorted(crossing):
            sites = ", ".join(sorted(crossing[callee]))
            col.add("inter_program_call",
                    _whole_program_region(workspace.units[callee]),
                    f"ipc-{callee}",
                    f"{callee} is called across partitions from {sites}")

    for region in user_regions:
        col.add("user_region", region,
                f"{region.program}-{region.start_line}-{region.end_line}",
                "user-supplied region")

    col.out.sort(key=lambda c: (c.region.program, c.region.start_line,
                                c.region.end_line, c.seed_kind, c.suggested_name))
    return col.out


def _top_level_dispatch(unit: SourceUnit) -> Optional[Statement]:
    for para in unit.paragraphs:
        for stmt in para.statements:
            if stmt.kind == "evaluate_when":
                return stmt
    return None


def _data_access_runs(para: Paragraph) -> list[tuple[int, int]]:
    stmts = para.statements

    def klass(s: Statement) -> str:
        if s.kind in DATA_KINDS:
            return "data"
        if s.kind in LOAD_KINDS:
            return "load"
        if s.kind == "if" and any(i.name == "SQLCODE" for i in s.reads):
            return "check"
        return "other"

    classes = [klass(s) for s in stmts]
    runs: list[tuple[int, int]] = []
    i = 0
    n = len(stmts)
    while i < n:
        if classes[i] != "data":
            i += 1
            continue
        first_op = i
        last_op = i
        j = i + 1
        while j < n and classes[j] in ("data", "load", "check"):
            if classes[j] == "data":
                last_op = j
            j += 1
        start = first_op
        while start - 1 >= 0 and classes[start - 1] == "load":
            start -= 1
        end = last_op
        while end + 1 < n and classes[end + 1] == "check":
            end += 1
        runs.append((stmts[start].line, stmts[end].span_end))
        i = j
    return runs


def _receive_site(workspace: Workspace, map_name: str) -> Optional[tuple[str, Paragraph]]:
    for program in sorted(workspace.units):
        unit = workspace.units[program]
        for para in unit.paragraphs:
            for stmt in para.flat_statements():
                if stmt.kind == "cics_receive_map" and stmt.map_name == map_name:
                    return program, para
    return None


DYNAMIC_QUERY_SIGNATURE = {
    "requests": [
        {"field": "QUERY-TEXT", "qualified": "QUERY-TEXT", "section": "linkage",
         "picture": "X(1024)", "optional": False},
    ],
    "responses": [
        {"field": "RESULT-ROWS", "qualified": "RESULT-ROWS", "section": "linkage",
         "picture": "X(4096)", "optional": False},
        {"field": "SQLCODE", "qualified": "SQLCODE", "section": "working_storage",
         "picture": "S9(9)", "optional": False},
    ],
}


def dynamic_query_candidate(workspace: Workspace, program: str) -> ApiCandidate:
    """Fixed-convention data API: any SQL text in, result rows out."""
    unit = workspace.unit(program)
    sql_lines = [s.line for s in unit.all_statements() if s.kind.startswith("sql_")]
    if not sql_lines:
        raise NoDataAccess(unit.program_id)
    region = _line_region(unit, min(sql_lines), max(sql_lines))
    return ApiCandidate(
        seed_kind="data_access",
        region=region,
        suggested_name=f"{unit.program_id.lower()}-dynamic-query",
        evidence="dynamic query layer",
        http_method="post",
        fixed_signature=DYNAMIC_QUERY_SIGNATURE,
    )


def dynamic_query_candidates(workspace: Workspace) -> list[ApiCandidate]:
    out = []
    for program in sorted(workspace.units):
        unit = workspace.units[program]
        if any(s.kind.startswith("sql_") for s in unit.all_statements()):
            out.append(dynamic_query_candidate(workspace, program))
    return out
