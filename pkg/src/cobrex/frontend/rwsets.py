"""Per-statement read/write classification.

The rules, by statement kind:

* MOVE a TO b          reads {a}, writes {b}
* arithmetic           reads every source operand, writes every target
                       (in-place forms like ADD X TO Y read X and Y, write Y)
* IF / EVALUATE /      reads the condition or scrutinee operands, writes
  PERFORM UNTIL        nothing
* DISPLAY              reads its operands
* ACCEPT               writes its operand
* INITIALIZE           writes the operand closure
* CALL / CICS LINK     nothing here; call sites are modeled per analysis
                       variant by the signature layer
* CICS RECEIVE MAP     writes every input-capable field of the map
* CICS SEND MAP        reads every output-capable field of the map
* CICS RETURN          reads the COMMAREA closure when one is passed
* SQL SELECT           writes INTO host variables and SQLCODE, reads WHERE hosts
* SQL INSERT/UPDATE/   reads VALUES / SET-source / WHERE hosts, writes SQLCODE
  DELETE
* READ f INTO x        writes the record item
* WRITE / REWRITE x    reads the record item
* SET cond TO TRUE     writes the 88-level's parent

Group accesses close over descendants in both directions.  A read of an item
additionally reads every REDEFINES-overlapping item (over-approximate
generation); a write never kills overlap aliases (under-approximate kill).
"""

from __future__ import annotations

from typing import Iterable, Optional

from .model import (
    DataDictionary,
    DataItem,
    ScreenField,
    SourceUnit,
    Statement,
    condition_reads,
)

ScreenMaps = dict[str, list[ScreenField]]


def _closure(items: Iterable[DataItem]) -> set[DataItem]:
    out: set[DataItem] = set()
    for item in items:
        out |= item.storage_closure()
    return out


def _with_aliases(items: set[DataItem], dictionary: DataDictionary) -> set[DataItem]:
    out = set(items)
    for item in items:
        out |= dictionary.overlap_aliases(item)
    return out


def _map_fields(stmt: Statement, dictionary: DataDictionary, screen_maps: Optional[ScreenMaps],
                want_input: bool) -> set[DataItem]:
    fields = (screen_maps or {}).get(stmt.map_name or "")
    if fields is None:
        return _closure([stmt.map_area]) if stmt.map_area is not None else set()
    out: set[DataItem] = set()
    for f in fields:
        if want_input and not f.accepts_input:
            continue
        if not want_input and not f.produces_output:
            continue
        cands = dictionary.candidates(f.name)
        if len(cands) == 1:
            out |= cands[0].storage_closure()
    return out


def read_write_sets(stmt: Statement, dictionary: DataDictionary,
                    screen_maps: Optional[ScreenMaps] = None) -> tuple[set[DataItem], set[DataItem]]:
    reads: set[DataItem] = set()
    writes: set[DataItem] = set()
    kind = stmt.kind
    if kind == "move":
        if isinstance(stmt.move_source, DataItem):
            reads = _closure([stmt.move_source])
        writes = _closure(stmt.move_targets)
    elif kind == "arithmetic":
        reads = _closure(stmt.arith_sources)
        writes = _closure(stmt.arith_targets)
    elif kind in ("if", "perform") and stmt.condition is not None:
        reads = condition_reads(stmt.condition)
    elif kind == "evaluate_when":
        reads = _closure([stmt.scrutinee])
    elif kind == "display":
        reads = _closure(stmt.operands)
    elif kind == "accept":
        writes = _closure(stmt.operands)
    elif kind == "initialize":
        writes = _closure(stmt.operands)
    elif kind == "other" and stmt.operands:
        writes = _closure(stmt.operands)  # SET 88 TO TRUE writes its parent
    elif kind == "cics_receive_map":
        writes = _map_fields(stmt, dictionary, screen_maps, want_input=True)
    elif kind == "cics_send_map":
        reads = _map_fields(stmt, dictionary, screen_maps, want_input=False)
    elif kind == "cics_return":
        if stmt.commarea is not None:
            reads = _closure([stmt.commarea])
    elif kind == "sql_select":
        writes = _closure(h for _, h in stmt.sql_into)
        writes |= _sqlcode(dictionary, stmt.line)
        reads = _closure(stmt.sql_read_hosts)
    elif kind in ("sql_insert", "sql_update", "sql_delete"):
        reads = _closure(stmt.sql_read_hosts)
        writes = _sqlcode(dictionary, stmt.line)
    elif kind == "file_read":
        writes = _closure(stmt.operands)
    elif kind == "file_write":
        reads = _closure(stmt.operands)
    # call / cics_link / goto / goback / stop_run / exit contribute nothing here
    return _with_aliases(reads, dictionary), writes


def _sqlcode(dictionary: DataDictionary, line: int) -> set[DataItem]:
    return dictionary.resolve("SQLCODE", line).storage_closure()


def apply_read_write_sets(unit: SourceUnit, dictionary: Optional[DataDictionary] = None,
                          screen_maps: Optional[ScreenMaps] = None) -> None:
    """Fill ``reads``/``writes`` on every statement of the unit."""
    if dictionary is None:
        dictionary = DataDictionary(unit)
    for stmt in unit.all_statements():
        stmt.reads, stmt.writes = read_write_sets(stmt, dictionary, screen_maps)
