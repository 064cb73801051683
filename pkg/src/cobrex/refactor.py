"""Refactoring outputs: structured suggestions and copybook slices.

Nothing here rewrites source.  Reports flag terminal commands to guard, SQL
selects fetching columns the API never returns, and sanity-check blocks that
only talk to a terminal; slices emit minimal request/response copybooks that
re-parse through the frontend.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from .errors import BindingMismatch, EmptySlice
from .frontend.model import DataItem, SourceUnit, Statement
from .graphs import CodeRegion
from .signature.model import ApiSignature, FieldRole

logger = logging.getLogger(__name__)

TERMINAL_KINDS = {"cics_send_map", "cics_receive_map", "display", "accept"}


@dataclass
class RefactorSuggestion:
    kind: str
    program: str
    line: int
    detail: dict
    rationale: str

    def as_json(self) -> dict:
        return {
            "kind": self.kind,
            "program": self.program,
            "line": self.line,
            "detail": self.detail,
            "rationale": self.rationale,
        }


def refactor_report(region: CodeRegion, signature: ApiSignature) -> list[RefactorSuggestion]:
    out: list[RefactorSuggestion] = []
    responses = signature.response_items()
    for stmt in region.statements:
        if stmt.kind in TERMINAL_KINDS:
            out.append(RefactorSuggestion(
                kind="guard_terminal_command",
                program=region.program,
                line=stmt.line,
                detail={"statement": stmt.text},
                rationale="terminal interaction should be removed or guarded "
                          "so it never runs inside the API",
            ))
        if stmt.kind == "sql_select" and stmt.sql_into:
            droppable = [
                {"column": column, "host": host.qualified_name}
                for column, host in stmt.sql_into
                if host not in responses
            ]
            if droppable:
                out.append(RefactorSuggestion(
                    kind="narrow_sql",
                    program=region.program,
                    line=stmt.line,
                    detail={"table": stmt.sql_table, "droppable": droppable},
                    rationale="the query fetches columns the API never returns",
                ))
        if stmt.kind == "if" and _only_terminal_effects(stmt):
            out.append(RefactorSuggestion(
                kind="remove_sanity_check_candidate",
                program=region.program,
                line=stmt.line,
                detail={"statement": stmt.text},
                rationale="conditional block only drives a terminal; candidate "
                          "for removal or guarding (review before applying)",
            ))
    out.sort(key=lambda s: (s.line, s.kind))
    return out


def _only_terminal_effects(stmt: Statement) -> bool:
    body = list(stmt.body_statements())
    return bool(body) and all(s.kind in TERMINAL_KINDS for s in body)


# -- copybook slices -------------------------------------------------------------

_LEVEL_LADDER = (1, 5, 10, 15, 20, 25, 30, 35, 40, 45)


def _render_slice(roots: list[DataItem], keep: set[DataItem]) -> str:
    lines: list[str] = []

    def emit(item: DataItem, depth: int) -> None:
        if item not in keep or item.is_condition_name:
            return
        level = _LEVEL_LADDER[min(depth, len(_LEVEL_LADDER) - 1)]
        clauses = [f"{level:02d}", item.name]
        if item.picture:
            clauses += ["PIC", item.picture]
        if item.occurs:
            clauses += ["OCCURS", str(item.occurs)]
        lines.append("    " * depth + " ".join(clauses) + ".")
        for child in item.children:
            emit(child, depth + 1)

    for root in roots:
        emit(root, 0)
    return "\n".join(lines) + "\n" if lines else ""


def _slice_fields(roots: list[DataItem], fields: list[FieldRole]) -> tuple[set[DataItem], list[str]]:
    in_tree: set[DataItem] = set()
    skipped: list[str] = []
    root_set = set(roots)
    for fr in fields:
        node = fr.item
        top = node
        while top.parent is not None:
            top = top.parent
        if top not in root_set:
            skipped.append(fr.qualified_name)
            continue
        in_tree.add(node)
        in_tree.update(node.ancestors())
    return in_tree, skipped


def slice_copybook(copybook: list[DataItem], signature: ApiSignature
                   ) -> tuple[Optional[str], Optional[str]]:
    """Minimal request/response copybook texts (None for an empty role).

    Raises EmptySlice when neither role has a field inside the copybook.
    """
    req_keep, req_skipped = _slice_fields(copybook, signature.requests)
    resp_keep, resp_skipped = _slice_fields(copybook, signature.responses)
    for name in req_skipped + resp_skipped:
        logger.warning("field %s is outside the sliced copybook; skipped", name)
    if not req_keep and not resp_keep:
        label = copybook[0].name if copybook else "<empty>"
        raise EmptySlice(label, "request/response")
    req_text = _render_slice(copybook, req_keep) if req_keep else None
    resp_text = _render_slice(copybook, resp_keep) if resp_keep else None
    return req_text, resp_text


# -- caller mapping ---------------------------------------------------------------

def caller_mapping_report(call_site: Statement, callee_signature: ApiSignature,
                          callee_unit: SourceUnit,
                          caller_program: str = "<caller>") -> RefactorSuggestion:
    """Positional argument-to-parameter mapping plus the REST call shape."""
    params = callee_unit.using_params
    args = call_site.call_arguments
    sig_fields = [fr for fr in callee_signature.requests + callee_signature.responses]
    if (not args or not params) and sig_fields:
        raise BindingMismatch(
            f"call at line {call_site.line} passes {len(args)} arguments to "
            f"{callee_unit.program_id} which takes {len(params)} parameters")

    degraded = False
    param_index = {id(p): i for i, p in enumerate(params)}

    def map_field(fr: FieldRole) -> Optional[tuple[str, bool]]:
        nonlocal degraded
        owner = None
        node = fr.item
        if id(node) in param_index:
            owner = node
        else:
            for anc in node.ancestors():
                if id(anc) in param_index:
                    owner = anc
                    break
        if owner is None:
            return None  # field outside the linkage parameters
        idx = param_index[id(owner)]
        if idx >= len(args):
            degraded = True
            return None
        arg = args[idx]
        rel = node.byte_offset - owner.byte_offset
        if rel >= arg.byte_size:
            degraded = True
            return None
        end = rel + node.byte_size
        clipped = False
        if end > arg.byte_size:
            end = arg.byte_size
            clipped = True
            degraded = True
        lo, hi = arg.byte_offset + rel, arg.byte_offset + end
        best = None
        for cand in (arg, *arg.descendants()):
            if cand.is_condition_name:
                continue
            if cand.byte_offset <= lo and cand.end_offset >= hi:
                if best is None or cand.byte_size < best.byte_size:
                    best = cand
        if best is None:
            best = arg
        return best.qualified_name, clipped

    request_pairs = []
    for fr in callee_signature.requests:
        mapped = map_field(fr)
        if mapped is not None:
            request_pairs.append({"argument": mapped[0], "field": fr.item.name,
                                  **({"note": "prefix overlap"} if mapped[1] else {})})
    response_pairs = []
    for fr in callee_signature.responses:
        mapped = map_field(fr)
        if mapped is not None:
            response_pairs.append({"field": fr.item.name, "argument": mapped[0],
                                   **({"note": "prefix overlap"} if mapped[1] else {})})

    detail = {
        "callee": callee_unit.program_id,
        "requests": request_pairs,
        "responses": response_pairs,
        "rest": {
            "method": callee_signature.http_method,
            "body_fields": sorted({fr.item.name for fr in callee_signature.requests}),
        },
        "degraded": degraded,
    }
    return RefactorSuggestion(
        kind="caller_mapping",
        program=caller_program,
        line=call_site.line,
        detail=detail,
        rationale="replace the program call with a REST invocation mapped "
                  "argument-by-argument onto the API signature",
    )
