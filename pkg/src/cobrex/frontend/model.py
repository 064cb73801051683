"""AST and symbol-table types for the MiniCOBOL frontend.

Data items form a tree (group items own children, level-88 condition names
hang off their conditional variable).  Statements are structured: IF and
EVALUATE heads own their body statements, so a paragraph's ``statements``
list holds only top-level sentences while ``SourceUnit.all_statements``
iterates the flattened form the control-flow graph is built from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from ..errors import UnresolvedName

WORKING_STORAGE = "working_storage"
LINKAGE = "linkage"


@dataclass(eq=False)
class DataItem:
    name: str
    level: int
    picture: Optional[str]
    section: str
    parent: Optional["DataItem"] = None
    occurs: Optional[int] = None
    redefines: Optional["DataItem"] = None
    byte_offset: int = 0
    byte_size: int = 0
    children: list["DataItem"] = field(default_factory=list)
    condition_values: tuple[str, ...] = ()  # level-88 VALUE literals

    @property
    def is_group(self) -> bool:
        return self.picture is None and self.level != 88

    @property
    def is_condition_name(self) -> bool:
        return self.level == 88

    @property
    def qualified_name(self) -> str:
        parts = [self.name]
        node = self.parent
        while node is not None:
            parts.append(node.name)
            node = node.parent
        return ".".join(reversed(parts))

    @property
    def end_offset(self) -> int:
        return self.byte_offset + self.byte_size

    def descendants(self) -> Iterator["DataItem"]:
        for child in self.children:
            yield child
            yield from child.descendants()

    def ancestors(self) -> Iterator["DataItem"]:
        node = self.parent
        while node is not None:
            yield node
            node = node.parent

    def storage_closure(self) -> set["DataItem"]:
        """The item plus every storage-bearing descendant (88s excluded)."""
        out = {self}
        out.update(d for d in self.descendants() if not d.is_condition_name)
        if self.is_condition_name:
            # Testing or setting a condition name touches its parent's storage.
            out = self.parent.storage_closure() if self.parent else set()
        return out

    def overlaps(self, other: "DataItem") -> bool:
        return self.byte_offset < other.end_offset and other.byte_offset < self.end_offset

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        pic = f" PIC {self.picture}" if self.picture else ""
        return f"<{self.level:02d} {self.qualified_name}{pic} @{self.byte_offset}+{self.byte_size}>"


# Condition expressions -------------------------------------------------------

@dataclass(frozen=True)
class Comparison:
    lhs: Union[DataItem, str]  # item or literal text
    op: str                    # one of = <> > < >= <=
    rhs: Union[DataItem, str]


@dataclass(frozen=True)
class ConditionName:
    item: DataItem  # the level-88 entry


@dataclass(frozen=True)
class BoolOp:
    op: str  # AND / OR
    parts: tuple["Condition", ...]


@dataclass(frozen=True)
class NotOp:
    part: "Condition"


Condition = Union[Comparison, ConditionName, BoolOp, NotOp]


def condition_reads(cond: Condition) -> set[DataItem]:
    if isinstance(cond, Comparison):
        out = set()
        for side in (cond.lhs, cond.rhs):
            if isinstance(side, DataItem):
                out |= side.storage_closure()
        return out
    if isinstance(cond, ConditionName):
        return cond.item.storage_closure()
    if isinstance(cond, BoolOp):
        out = set()
        for p in cond.parts:
            out |= condition_reads(p)
        return out
    if isinstance(cond, NotOp):
        return condition_reads(cond.part)
    raise TypeError(cond)


# Statements ------------------------------------------------------------------

@dataclass
class WhenArm:
    values: tuple[str, ...]  # literal texts; empty tuple means WHEN OTHER
    body: list["Statement"]

    @property
    def is_other(self) -> bool:
        return not self.values


@dataclass(eq=False)
class Statement:
    line: int
    kind: str
    text: str = ""
    reads: set[DataItem] = field(default_factory=set)
    writes: set[DataItem] = field(default_factory=set)
    call_target: Optional[str] = None
    call_arguments: list[DataItem] = field(default_factory=list)
    # structured payloads, populated per kind
    condition: Optional[Condition] = None          # if / perform-until
    then_body: list["Statement"] = field(default_factory=list)
    else_body: list["Statement"] = field(default_factory=list)
    scrutinee: Optional[DataItem] = None           # evaluate
    when_arms: list[WhenArm] = field(default_factory=list)
    perform_target: Optional[str] = None
    perform_thru: Optional[str] = None
    goto_target: Optional[str] = None
    move_source: Optional[Union[DataItem, str]] = None  # str holds a literal
    move_targets: list[DataItem] = field(default_factory=list)
    arith_sources: list[DataItem] = field(default_factory=list)
    arith_targets: list[DataItem] = field(default_factory=list)
    sql_into: list[tuple[str, DataItem]] = field(default_factory=list)  # (column, host var)
    sql_read_hosts: list[DataItem] = field(default_factory=list)
    sql_table: Optional[str] = None
    map_name: Optional[str] = None                 # cics send/receive map
    map_area: Optional[DataItem] = None            # INTO/FROM operand
    commarea: Optional[DataItem] = None            # cics link/return
    operands: list[DataItem] = field(default_factory=list)  # display/accept/initialize/file io
    file_name: Optional[str] = None
    is_rewrite: bool = False

    def body_statements(self) -> Iterator["Statement"]:
        for s in self.then_body:
            yield s
            yield from s.body_statements()
        for s in self.else_body:
            yield s
            yield from s.body_statements()
        for arm in self.when_arms:
            for s in arm.body:
                yield s
                yield from s.body_statements()

    @property
    def span_end(self) -> int:
        """Last source line covered by this statement including nested bodies."""
        last = self.line
        for s in self.body_statements():
            last = max(last, s.line)
        return last

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"<{self.line}:{self.kind} {self.text[:40]!r}>"


@dataclass(eq=False)
class Paragraph:
    name: str
    line: int
    statements: list[Statement] = field(default_factory=list)

    def flat_statements(self) -> Iterator[Statement]:
        for s in self.statements:
            yield s
            yield from s.body_statements()


@dataclass(eq=False)
class SourceUnit:
    program_id: str
    data_items: list[DataItem] = field(default_factory=list)  # 01/77-level roots, in order
    paragraphs: list[Paragraph] = field(default_factory=list)
    copybooks_used: list[str] = field(default_factory=list)
    source_lines: list[tuple[int, str]] = field(default_factory=list)
    using_params: list[DataItem] = field(default_factory=list)  # PROCEDURE DIVISION USING

    def all_items(self) -> Iterator[DataItem]:
        for root in self.data_items:
            yield root
            yield from root.descendants()

    def all_statements(self) -> list[Statement]:
        out: list[Statement] = []
        for para in self.paragraphs:
            out.extend(para.flat_statements())
        return out

    def paragraph(self, name: str) -> Optional[Paragraph]:
        upper = name.upper()
        for para in self.paragraphs:
            if para.name == upper:
                return para
        return None

    def statement_at(self, line: int) -> Optional[Statement]:
        for s in self.all_statements():
            if s.line == line:
                return s
        return None


class DataDictionary:
    """Name resolution over a unit's data items, with OF/IN qualification."""

    def __init__(self, unit: SourceUnit):
        self.unit = unit
        self._by_name: dict[str, list[DataItem]] = {}
        for item in unit.all_items():
            self._by_name.setdefault(item.name, []).append(item)

    def candidates(self, name: str) -> list[DataItem]:
        return self._by_name.get(name.upper(), [])

    def resolve(self, name: str, line: int, qualifiers: tuple[str, ...] = ()) -> DataItem:
        """Resolve ``name [OF q1 OF q2 ...]``; ambiguity without qualifiers is an error."""
        cands = self.candidates(name)
        if qualifiers:
            quals = tuple(q.upper() for q in qualifiers)
            filtered = []
            for item in cands:
                chain = [a.name for a in item.ancestors()]
                pos = 0
                for q in quals:
                    while pos < len(chain) and chain[pos] != q:
                        pos += 1
                    if pos == len(chain):
                        break
                    pos += 1
                else:
                    filtered.append(item)
            cands = filtered
        if not cands:
            raise UnresolvedName(name, line)
        if len(cands) > 1:
            raise UnresolvedName(f"{name} (ambiguous; qualify with OF)", line)
        return cands[0]

    def overlap_aliases(self, item: DataItem) -> set[DataItem]:
        """Items sharing bytes with ``item`` other than its own ancestors/descendants.

        With sequential layout these arise only through REDEFINES.
        """
        root = item
        while root.parent is not None:
            root = root.parent
        related = {item} | set(item.descendants()) | set(item.ancestors())
        out = set()
        for other_root in self.unit.data_items:
            if other_root.section != root.section:
                continue
            for other in [other_root, *other_root.descendants()]:
                if other in related or other.is_condition_name:
                    continue
                if _shares_storage(root, other_root) and item.overlaps(other):
                    out.add(other)
        return out


def _storage_base(root: DataItem) -> DataItem:
    """Follow REDEFINES until the item that actually owns the storage."""
    seen: set[int] = set()
    node = root
    while node.redefines is not None and id(node) not in seen:
        seen.add(id(node))
        node = node.redefines
    return node


def _shares_storage(root_a: DataItem, root_b: DataItem) -> bool:
    """Two sibling items alias only when REDEFINES chains them to one base."""
    return _storage_base(root_a) is _storage_base(root_b)


# Screen maps -----------------------------------------------------------------

@dataclass(frozen=True)
class ScreenField:
    name: str
    direction: str  # input / output / both
    position: tuple[int, int]
    length: int

    @property
    def accepts_input(self) -> bool:
        return self.direction in ("input", "both")

    @property
    def produces_output(self) -> bool:
        return self.direction in ("output", "both")
