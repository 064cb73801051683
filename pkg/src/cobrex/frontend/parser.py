"""MiniCOBOL parser: free-format source to :class:`SourceUnit`.

Accepted shape, one program per file:

    IDENTIFICATION DIVISION.
    PROGRAM-ID. name.
    DATA DIVISION.                       (optional)
    WORKING-STORAGE SECTION. / LINKAGE SECTION.
        level-number name [REDEFINES x] [PIC pic] [OCCURS n [TIMES]] [VALUE lit].
        COPY name.                       (data division only, nesting depth <= 8)
    PROCEDURE DIVISION [USING item ...].
    paragraph-name.
        statements, period-terminated; IF/EVALUATE bodies close with
        END-IF/END-EVALUATE or the sentence period; EXEC blocks close
        with END-EXEC.

Data items are laid out sequentially (REDEFINES shares the target's offset),
one item per line.  Lines whose first non-blank character is ``*`` are
comments.  A unit that embeds SQL gets an implicit SQLCODE declaration, since
every EXEC SQL statement writes it.
"""

from __future__ import annotations

import re
from typing import Callable, Optional, Union

from ..errors import CobolSyntaxError, DuplicateDataItem, MissingCopybook
from .model import (
    LINKAGE,
    WORKING_STORAGE,
    BoolOp,
    Comparison,
    Condition,
    ConditionName,
    DataDictionary,
    DataItem,
    NotOp,
    Paragraph,
    SourceUnit,
    Statement,
    WhenArm,
)

CopybookResolver = Union[Callable[[str], str], dict]

_STMT_KEYWORDS = {
    "MOVE", "ADD", "SUBTRACT", "MULTIPLY", "DIVIDE", "COMPUTE", "IF",
    "EVALUATE", "PERFORM", "GO", "GOBACK", "STOP", "EXIT", "CALL", "DISPLAY",
    "ACCEPT", "INITIALIZE", "SET", "READ", "WRITE", "REWRITE", "EXEC",
}

_FIGURATIVE = {"SPACE", "SPACES", "ZERO", "ZEROS", "ZEROES", "LOW-VALUES", "HIGH-VALUES"}

_ARITH_KINDS = {"ADD", "SUBTRACT", "MULTIPLY", "DIVIDE", "COMPUTE"}

_TOKEN_RE = re.compile(
    r"""'[^']*'|"[^"]*"            # string literal
      | >=|<=|<>                   # two-char relops
      | [A-Za-z0-9_][A-Za-z0-9_-]* # word / number (underscore: SQL identifiers)
      | [().=<>+\-*/:,;]           # punctuation
    """,
    re.X,
)

_NUMBER_RE = re.compile(r"^\d+$")


class Token:
    __slots__ = ("value", "line")

    def __init__(self, value: str, line: int):
        self.value = value
        self.line = line

    def __repr__(self):  # pragma: no cover
        return f"Token({self.value!r}, {self.line})"


def _is_comment(line: str) -> bool:
    stripped = line.lstrip()
    return stripped.startswith("*")


def _tokenize(lines: list[tuple[int, str]]) -> list[Token]:
    tokens = []
    for lineno, text in lines:
        if _is_comment(text):
            continue
        pos = 0
        for m in _TOKEN_RE.finditer(text):
            if text[pos:m.start()].strip():
                raise CobolSyntaxError(lineno, f"unexpected characters {text[pos:m.start()].strip()!r}")
            tokens.append(Token(m.group(0), lineno))
            pos = m.end()
        if text[pos:].strip():
            raise CobolSyntaxError(lineno, f"unexpected characters {text[pos:].strip()!r}")
    return tokens


def _is_string(tok: Token) -> bool:
    return tok.value[0] in "'\""


def _is_number(tok: Token) -> bool:
    return bool(_NUMBER_RE.match(tok.value))


def _is_word(tok: Token) -> bool:
    return bool(re.match(r"^[A-Za-z]", tok.value)) and not _is_string(tok)


def literal_value(token_text: str) -> str:
    """Normalized literal payload used for constant propagation."""
    if token_text[0] in "'\"":
        return token_text[1:-1]
    return token_text


# -- picture clauses ----------------------------------------------------------

_PIC_RE = re.compile(r"^S?[X9V()0-9]+$")


def picture_size(picture: str, line: int = 0) -> int:
    """Byte size of a PIC string: X/9 count one, S and V are zero-width."""
    pic = picture.upper()
    if not _PIC_RE.match(pic):
        raise CobolSyntaxError(line, f"unsupported picture {picture}")
    size = 0
    i = 0
    last = 0
    while i < len(pic):
        ch = pic[i]
        if ch in ("S", "V"):
            last = 0
            i += 1
        elif ch in ("X", "9"):
            size += 1
            last = 1
            i += 1
        elif ch == "(":
            j = pic.index(")", i)
            count = int(pic[i + 1:j])
            size += last * (count - 1)
            i = j + 1
            last = 0
        else:
            raise CobolSyntaxError(line, f"unsupported picture {picture}")
    if size <= 0:
        raise CobolSyntaxError(line, f"zero-width picture {picture}")
    return size


def picture_is_numeric(picture: Optional[str]) -> bool:
    return bool(picture) and "X" not in picture.upper()


# -- data division ------------------------------------------------------------

_ITEM_RE = re.compile(
    r"^\s*(?P<level>\d{1,2})\s+(?P<name>[A-Za-z][A-Za-z0-9-]*)(?P<rest>.*?)\.\s*$"
)
_COPY_RE = re.compile(r"^\s*COPY\s+(?P<name>[A-Za-z][A-Za-z0-9-]*)\s*\.\s*$", re.I)
_REDEF_RE = re.compile(r"\bREDEFINES\s+([A-Za-z][A-Za-z0-9-]*)", re.I)
_PICKW_RE = re.compile(r"\bPIC(?:TURE)?\s+(\S+)", re.I)
_OCCURS_RE = re.compile(r"\bOCCURS\s+(\d+)(?:\s+TIMES)?", re.I)
_VALUE_RE = re.compile(r"\bVALUE\s+('[^']*'|\"[^\"]*\"|[A-Za-z0-9-]+)", re.I)


class _RawItem:
    __slots__ = ("level", "name", "redefines", "picture", "occurs", "values", "line")

    def __init__(self, level, name, redefines, picture, occurs, values, line):
        self.level = level
        self.name = name
        self.redefines = redefines
        self.picture = picture
        self.occurs = occurs
        self.values = values
        self.line = line


def _parse_item_line(lineno: int, text: str) -> _RawItem:
    m = _ITEM_RE.match(text)
    if not m:
        raise CobolSyntaxError(lineno, f"cannot parse data item: {text.strip()!r}")
    level = int(m.group("level"))
    if not (1 <= level <= 49 or level in (77, 88)):
        raise CobolSyntaxError(lineno, f"invalid level number {level}")
    rest = m.group("rest")
    redefines = None
    rm = _REDEF_RE.search(rest)
    if rm:
        redefines = rm.group(1).upper()
    picture = None
    pm = _PICKW_RE.search(rest)
    if pm:
        picture = pm.group(1).upper()
    occurs = None
    om = _OCCURS_RE.search(rest)
    if om:
        occurs = int(om.group(1))
    values: tuple[str, ...] = ()
    vm = _VALUE_RE.search(rest)
    if vm:
        values = (literal_value(vm.group(1)),)
    if level == 88:
        if picture or occurs or redefines:
            raise CobolSyntaxError(lineno, "88-level items take only VALUE clauses")
        if not values:
            raise CobolSyntaxError(lineno, "88-level item needs a VALUE clause")
    if occurs is not None and redefines is not None:
        raise CobolSyntaxError(lineno, "OCCURS with REDEFINES is not supported")
    return _RawItem(level, m.group("name").upper(), redefines, picture, occurs, values, lineno)


def _expand_copy(
    lines: list[tuple[int, str]],
    resolver: Optional[CopybookResolver],
    used: list[str],
    stack: tuple[str, ...] = (),
) -> list[tuple[int, str]]:
    out = []
    for lineno, text in lines:
        m = _COPY_RE.match(text)
        if not m:
            out.append((lineno, text))
            continue
        name = m.group("name").upper()
        if name in stack:
            raise CobolSyntaxError(lineno, f"cyclic COPY of {name}")
        if len(stack) >= 8:
            raise CobolSyntaxError(lineno, f"COPY nesting deeper than 8 at {name}")
        body = _resolve_copybook(resolver, name)
        if name not in used:
            used.append(name)
        inner = [(lineno, t) for t in body.splitlines()
                 if t.strip() and not _is_comment(t)]
        out.extend(_expand_copy(inner, resolver, used, stack + (name,)))
    return out


def _resolve_copybook(resolver: Optional[CopybookResolver], name: str) -> str:
    if resolver is None:
        raise MissingCopybook(name)
    if isinstance(resolver, dict):
        for key, value in resolver.items():
            if key.upper() == name:
                return value
        raise MissingCopybook(name)
    try:
        text = resolver(name)
    except KeyError:
        raise MissingCopybook(name) from None
    if text is None:
        raise MissingCopybook(name)
    return text


def build_item_tree(raw_items: list[_RawItem], section: str) -> list[DataItem]:
    """Stacked hierarchy build; duplicate sibling names are rejected."""
    roots: list[DataItem] = []
    stack: list[DataItem] = []
    last_non_88: Optional[DataItem] = None
    for raw in raw_items:
        if raw.level == 88:
            if last_non_88 is None:
                raise CobolSyntaxError(raw.line, "88-level item without a parent")
            item = DataItem(raw.name, 88, None, section, parent=last_non_88,
                            condition_values=raw.values)
            _check_sibling(last_non_88.children, item, raw.line)
            last_non_88.children.append(item)
            continue
        while stack and stack[-1].level >= raw.level:
            stack.pop()
        parent = stack[-1] if stack else None
        if parent is None and raw.level not in (1, 77):
            raise CobolSyntaxError(raw.line, f"level {raw.level:02d} item {raw.name} has no 01 parent")
        item = DataItem(raw.name, raw.level, raw.picture, section,
                        parent=parent, occurs=raw.occurs)
        siblings = parent.children if parent else roots
        if raw.redefines:
            target = next((s for s in reversed(siblings) if s.name == raw.redefines), None)
            if target is None:
                raise CobolSyntaxError(raw.line, f"REDEFINES target {raw.redefines} not a prior sibling")
            item.redefines = target
        _check_sibling(siblings, item, raw.line)
        siblings.append(item)
        stack.append(item)
        last_non_88 = item
    for root in roots:
        _validate_groups(root)
    _assign_layout(roots)
    return roots


def _check_sibling(siblings: list[DataItem], item: DataItem, line: int) -> None:
    if any(s.name == item.name for s in siblings):
        parent = item.parent.qualified_name if item.parent else "<section>"
        raise DuplicateDataItem(item.name, f"{parent}.{item.name} (line {line})")


def _validate_groups(item: DataItem) -> None:
    real_children = [c for c in item.children if not c.is_condition_name]
    if item.is_group and not real_children:
        raise CobolSyntaxError(0, f"group item {item.qualified_name} has no children")
    if item.picture and real_children:
        raise CobolSyntaxError(0, f"elementary item {item.qualified_name} has children")
    for child in item.children:
        _validate_groups(child)


def _assign_layout(roots: list[DataItem]) -> None:
    cursor = 0
    for root in roots:
        start = root.redefines.byte_offset if root.redefines else cursor
        end = _place(root, start)
        cursor = max(cursor, end)
    for root in roots:
        _fix_condition_names(root)


def _place(item: DataItem, base: int) -> int:
    item.byte_offset = base
    repeat = item.occurs or 1
    if not item.is_group:
        item.byte_size = picture_size(item.picture) * repeat if item.picture else 0
        return base + item.byte_size
    cursor = base
    for child in item.children:
        if child.is_condition_name:
            continue
        start = child.redefines.byte_offset if child.redefines else cursor
        end = _place(child, start)
        cursor = max(cursor, end)
    item.byte_size = (cursor - base) * repeat
    return base + item.byte_size


def _fix_condition_names(item: DataItem) -> None:
    for child in item.children:
        if child.is_condition_name:
            child.byte_offset = item.byte_offset
            child.byte_size = item.byte_size
        else:
            _fix_condition_names(child)


def parse_copybook(text: str, section: str = WORKING_STORAGE,
                   resolver: Optional[CopybookResolver] = None) -> list[DataItem]:
    """Parse a bare copybook (data-division lines only) into item trees."""
    lines = [(i + 1, t) for i, t in enumerate(text.splitlines())]
    lines = _expand_copy([l for l in lines if l[1].strip() and not _is_comment(l[1])],
                         resolver, [])
    raw = [_parse_item_line(n, t) for n, t in lines]
    return build_item_tree(raw, section)


# -- procedure division -------------------------------------------------------

class _StatementParser:
    """Recursive-descent statement parser over the procedure-division tokens."""

    def __init__(self, tokens: list[Token], dictionary: DataDictionary):
        self.toks = tokens
        self.pos = 0
        self.dict = dictionary

    # token helpers

    def peek(self, offset: int = 0) -> Optional[Token]:
        idx = self.pos + offset
        return self.toks[idx] if idx < len(self.toks) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            last = self.toks[-1].line if self.toks else 0
            raise CobolSyntaxError(last, "unexpected end of source")
        self.pos += 1
        return tok

    def at_word(self, *words: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.value.upper() in words

    def expect_word(self, word: str) -> Token:
        tok = self.next()
        if tok.value.upper() != word:
            raise CobolSyntaxError(tok.line, f"expected {word}, found {tok.value!r}")
        return tok

    def expect(self, value: str) -> Token:
        tok = self.next()
        if tok.value != value:
            raise CobolSyntaxError(tok.line, f"expected {value!r}, found {tok.value!r}")
        return tok

    # operand parsing

    def parse_item_ref(self) -> DataItem:
        tok = self.next()
        if not _is_word(tok):
            raise CobolSyntaxError(tok.line, f"expected identifier, found {tok.value!r}")
        name = tok.value.upper()
        # OCCURS subscripts are ignored: the item stands for the whole array
        if self.peek() and self.peek().value == "(":
            depth = 0
            while True:
                t = self.next()
                if t.value == "(":
                    depth += 1
                elif t.value == ")":
                    depth -= 1
                    if depth == 0:
                        break
        qualifiers = []
        while self.at_word("OF", "IN"):
            self.next()
            qtok = self.next()
            if not _is_word(qtok):
                raise CobolSyntaxError(qtok.line, f"expected qualifier name, found {qtok.value!r}")
            qualifiers.append(qtok.value.upper())
        return self.dict.resolve(name, tok.line, tuple(qualifiers))

    def parse_operand(self) -> Union[DataItem, str]:
        tok = self.peek()
        if tok is None:
            raise CobolSyntaxError(0, "unexpected end of source")
        if _is_string(tok) or _is_number(tok):
            self.next()
            return literal_value(tok.value)
        if tok.value.upper() in _FIGURATIVE:
            self.next()
            return tok.value.upper()
        return self.parse_item_ref()

    def operand_text(self, op: Union[DataItem, str]) -> str:
        if isinstance(op, DataItem):
            return op.name
        if _NUMBER_RE.match(op) or op in _FIGURATIVE:
            return op
        return f"'{op}'"

    # conditions

    def parse_condition(self) -> Condition:
        return self._parse_or()

    def _parse_or(self) -> Condition:
        parts = [self._parse_and()]
        while self.at_word("OR"):
            self.next()
            parts.append(self._parse_and())
        return parts[0] if len(parts) == 1 else BoolOp("OR", tuple(parts))

    def _parse_and(self) -> Condition:
        parts = [self._parse_not()]
        while self.at_word("AND"):
            self.next()
            parts.append(self._parse_not())
        return parts[0] if len(parts) == 1 else BoolOp("AND", tuple(parts))

    def _parse_not(self) -> Condition:
        if self.at_word("NOT"):
            tok = self.next()
            nxt = self.peek()
            if nxt is not None and nxt.value in ("=", ">", "<"):
                raise CobolSyntaxError(tok.line, "place NOT directly before a condition, not an operator")
            return NotOp(self._parse_not())
        return self._parse_relation()

    def _parse_relation(self) -> Condition:
        lhs = self.parse_operand()
        tok = self.peek()
        op = None
        if tok is not None and tok.value in ("=", ">", "<", ">=", "<=", "<>"):
            op = self.next().value
        elif tok is not None and tok.value.upper() == "NOT":
            nxt = self.peek(1)
            if nxt is not None and nxt.value in ("=", ">", "<"):
                self.next()
                sym = self.next().value
                op = {"=": "<>", ">": "<=", "<": ">="}[sym]
        if op is None:
            if isinstance(lhs, DataItem) and lhs.is_condition_name:
                return ConditionName(lhs)
            where = tok.line if tok else 0
            raise CobolSyntaxError(where, "expected relational operator or 88-level condition name")
        rhs = self.parse_operand()
        return Comparison(lhs, op, rhs)

    def condition_text(self, cond: Condition) -> str:
        if isinstance(cond, Comparison):
            return f"{self.operand_text(cond.lhs)} {cond.op} {self.operand_text(cond.rhs)}"
        if isinstance(cond, ConditionName):
            return cond.item.name
        if isinstance(cond, BoolOp):
            return f" {cond.op} ".join(self.condition_text(p) for p in cond.parts)
        if isinstance(cond, NotOp):
            return f"NOT {self.condition_text(cond.part)}"
        raise TypeError(cond)

    # statement lists

    _BODY_STOPS = {"ELSE", "END-IF", "END-EVALUATE", "WHEN"}

    def parse_body(self) -> list[Statement]:
        """Statements inside IF/EVALUATE: stop at arm keywords or the sentence period."""
        out = []
        while True:
            tok = self.peek()
            if tok is None or tok.value == "." or tok.value.upper() in self._BODY_STOPS:
                return out
            out.append(self.parse_statement())

    def parse_statement(self) -> Statement:
        tok = self.peek()
        verb = tok.value.upper()
        line = tok.line
        if verb == "MOVE":
            return self._parse_move()
        if verb in ("ADD", "SUBTRACT", "MULTIPLY", "DIVIDE", "COMPUTE"):
            return self._parse_arithmetic(verb)
        if verb == "IF":
            return self._parse_if()
        if verb == "EVALUATE":
            return self._parse_evaluate()
        if verb == "PERFORM":
            return self._parse_perform()
        if verb == "GO":
            return self._parse_goto()
        if verb == "CALL":
            return self._parse_call()
        if verb == "EXEC":
            return self._parse_exec()
        if verb == "GOBACK":
            self.next()
            return Statement(line, "goback", "GOBACK")
        if verb == "STOP":
            self.next()
            self.expect_word("RUN")
            return Statement(line, "stop_run", "STOP RUN")
        if verb == "EXIT":
            self.next()
            return Statement(line, "exit", "EXIT")
        if verb == "DISPLAY":
            return self._parse_display()
        if verb == "ACCEPT":
            self.next()
            item = self.parse_item_ref()
            return Statement(line, "accept", f"ACCEPT {item.name}", operands=[item])
        if verb == "INITIALIZE":
            self.next()
            items = [self.parse_item_ref()]
            while self.peek() and _is_word(self.peek()) and not self._starts_statement():
                items.append(self.parse_item_ref())
            text = "INITIALIZE " + " ".join(i.name for i in items)
            return Statement(line, "initialize", text, operands=items)
        if verb == "SET":
            return self._parse_set()
        if verb in ("READ", "WRITE", "REWRITE"):
            return self._parse_file_io(verb)
        raise CobolSyntaxError(line, f"unknown statement verb {tok.value!r}")

    def _starts_statement(self) -> bool:
        tok = self.peek()
        return tok is not None and tok.value.upper() in _STMT_KEYWORDS

    def _parse_move(self) -> Statement:
        tok = self.expect_word("MOVE")
        src = self.parse_operand()
        self.expect_word("TO")
        targets = [self.parse_item_ref()]
        while self.peek() and _is_word(self.peek()) and not self._starts_statement() \
                and self.peek().value.upper() not in self._BODY_STOPS:
            targets.append(self.parse_item_ref())
        text = f"MOVE {self.operand_text(src)} TO " + " ".join(t.name for t in targets)
        return Statement(tok.line, "move", text, move_source=src, move_targets=targets)

    def _parse_arithmetic(self, verb: str) -> Statement:
        tok = self.next()
        line = tok.line
        sources: list[DataItem] = []
        targets: list[DataItem] = []
        parts = [verb]

        def grab_operand():
            op = self.parse_operand()
            parts.append(self.operand_text(op))
            if isinstance(op, DataItem):
                sources.append(op)

        if verb == "COMPUTE":
            targets.append(self.parse_item_ref())
            parts.append(targets[0].name)
            self.expect("=")
            parts.append("=")
            while True:
                nxt = self.peek()
                if nxt is None or nxt.value == "." or nxt.value.upper() in self._BODY_STOPS \
                        or self._starts_statement():
                    break
                t = self.next()
                parts.append(t.value)
                if _is_word(t) and not _is_number(t) and t.value.upper() not in _FIGURATIVE:
                    self.pos -= 1
                    item = self.parse_item_ref()
                    parts[-1] = item.name
                    sources.append(item)
            return Statement(line, "arithmetic", " ".join(parts),
                             arith_sources=sources, arith_targets=targets)

        grab_operand()
        while self.peek() and not self.at_word("TO", "FROM", "BY", "INTO", "GIVING"):
            grab_operand()
        joiner = {"ADD": "TO", "SUBTRACT": "FROM", "MULTIPLY": "BY", "DIVIDE": "BY"}[verb]
        if verb == "DIVIDE" and self.at_word("INTO"):
            joiner = "INTO"
        self.expect_word(joiner)
        parts.append(joiner)
        second = [self.parse_item_ref()]
        parts.append(second[0].name)
        while self.peek() and _is_word(self.peek()) and not self.at_word("GIVING") \
                and not self._starts_statement() and self.peek().value.upper() not in self._BODY_STOPS:
            second.append(self.parse_item_ref())
            parts.append(second[-1].name)
        if self.at_word("GIVING"):
            self.next()
            parts.append("GIVING")
            sources.extend(second)
            while True:
                targets.append(self.parse_item_ref())
                parts.append(targets[-1].name)
                nxt = self.peek()
                if not (nxt and _is_word(nxt) and not self._starts_statement()
                        and nxt.value.upper() not in self._BODY_STOPS
                        and nxt.value.upper() != "REMAINDER"):
                    break
            if verb == "DIVIDE" and self.at_word("REMAINDER"):
                self.next()
                parts.append("REMAINDER")
                targets.append(self.parse_item_ref())
                parts.append(targets[-1].name)
        else:
            # in-place form: the accumulators are read and written
            sources.extend(second)
            targets.extend(second)
        return Statement(line, "arithmetic", " ".join(parts),
                         arith_sources=sources, arith_targets=targets)

    def _parse_if(self) -> Statement:
        tok = self.expect_word("IF")
        cond = self.parse_condition()
        stmt = Statement(tok.line, "if", f"IF {self.condition_text(cond)}", condition=cond)
        stmt.then_body = self.parse_body()
        if not stmt.then_body:
            raise CobolSyntaxError(tok.line, "IF with an empty branch")
        if self.at_word("ELSE"):
            self.next()
            stmt.else_body = self.parse_body()
            if not stmt.else_body:
                raise CobolSyntaxError(tok.line, "ELSE with an empty branch")
        if self.at_word("END-IF"):
            self.next()
        return stmt

    def _parse_evaluate(self) -> Statement:
        tok = self.expect_word("EVALUATE")
        scrutinee = self.parse_item_ref()
        stmt = Statement(tok.line, "evaluate_when", f"EVALUATE {scrutinee.name}",
                         scrutinee=scrutinee)
        while self.at_word("WHEN"):
            values: list[str] = []
            is_other = False
            while self.at_word("WHEN"):
                self.next()
                if self.at_word("OTHER"):
                    self.next()
                    is_other = True
                else:
                    vtok = self.next()
                    if not (_is_string(vtok) or _is_number(vtok)):
                        raise CobolSyntaxError(vtok.line, "WHEN takes a literal or OTHER")
                    values.append(literal_value(vtok.value))
            body = self.parse_body()
            if not body:
                raise CobolSyntaxError(tok.line, "WHEN arm with an empty body")
            stmt.when_arms.append(WhenArm((), body) if is_other else WhenArm(tuple(values), body))
        if not stmt.when_arms:
            raise CobolSyntaxError(tok.line, "EVALUATE without WHEN arms")
        if self.at_word("END-EVALUATE"):
            self.next()
        return stmt

    def _parse_perform(self) -> Statement:
        tok = self.expect_word("PERFORM")
        target = self.next()
        if not _is_word(target):
            raise CobolSyntaxError(target.line, "PERFORM needs a paragraph name")
        stmt = Statement(tok.line, "perform", f"PERFORM {target.value.upper()}",
                         perform_target=target.value.upper(),
                         call_target=target.value.upper())
        if self.at_word("THRU", "THROUGH"):
            self.next()
            thru = self.next()
            stmt.perform_thru = thru.value.upper()
            stmt.text += f" THRU {stmt.perform_thru}"
        if self.at_word("UNTIL"):
            self.next()
            stmt.condition = self.parse_condition()
            stmt.text += f" UNTIL {self.condition_text(stmt.condition)}"
        return stmt

    def _parse_goto(self) -> Statement:
        tok = self.expect_word("GO")
        self.expect_word("TO")
        target = self.next()
        if not _is_word(target):
            raise CobolSyntaxError(target.line, "GO TO needs a paragraph name")
        name = target.value.upper()
        return Statement(tok.line, "goto", f"GO TO {name}", goto_target=name, call_target=name)

    def _parse_call(self) -> Statement:
        tok = self.expect_word("CALL")
        target = self.next()
        stmt = Statement(tok.line, "call", "")
        if _is_string(target):
            stmt.call_target = literal_value(target.value).upper()
            head = f"CALL '{stmt.call_target}'"
        elif _is_word(target):
            # dynamic call: target unknown statically
            stmt.call_target = None
            head = f"CALL {target.value.upper()}"
        else:
            raise CobolSyntaxError(target.line, "CALL needs a literal or identifier target")
        if self.at_word("USING"):
            self.next()
            while self.peek() and _is_word(self.peek()) and not self._starts_statement() \
                    and self.peek().value.upper() not in self._BODY_STOPS:
                stmt.call_arguments.append(self.parse_item_ref())
        if stmt.call_arguments:
            head += " USING " + " ".join(a.name for a in stmt.call_arguments)
        stmt.text = head
        return stmt

    def _parse_display(self) -> Statement:
        tok = self.expect_word("DISPLAY")
        items = []
        parts = ["DISPLAY"]
        while True:
            nxt = self.peek()
            if nxt is None or nxt.value == "." or nxt.value.upper() in self._BODY_STOPS \
                    or self._starts_statement():
                break
            op = self.parse_operand()
            parts.append(self.operand_text(op))
            if isinstance(op, DataItem):
                items.append(op)
        return Statement(tok.line, "display", " ".join(parts), operands=items)

    def _parse_set(self) -> Statement:
        tok = self.expect_word("SET")
        item = self.parse_item_ref()
        self.expect_word("TO")
        self.expect_word("TRUE")
        if not item.is_condition_name:
            raise CobolSyntaxError(tok.line, "SET ... TO TRUE needs an 88-level name")
        return Statement(tok.line, "other", f"SET {item.name} TO TRUE", operands=[item])

    def _parse_file_io(self, verb: str) -> Statement:
        tok = self.next()
        if verb == "READ":
            fname = self.next()
            if not _is_word(fname):
                raise CobolSyntaxError(fname.line, "READ needs a file name")
            self.expect_word("INTO")
            record = self.parse_item_ref()
            return Statement(tok.line, "file_read",
                             f"READ {fname.value.upper()} INTO {record.name}",
                             operands=[record], file_name=fname.value.upper())
        record = self.parse_item_ref()
        stmt = Statement(tok.line, "file_write", f"{verb} {record.name}",
                         operands=[record], is_rewrite=(verb == "REWRITE"))
        if self.at_word("FROM"):
            self.next()
            src = self.parse_item_ref()
            stmt.operands.append(src)
            stmt.text += f" FROM {src.name}"
        return stmt

    # EXEC blocks

    def _collect_exec_tokens(self) -> list[Token]:
        out = []
        while True:
            tok = self.next()
            if tok.value.upper() == "END-EXEC":
                return out
            out.append(tok)

    def _parse_exec(self) -> Statement:
        tok = self.expect_word("EXEC")
        family = self.next().value.upper()
        body = self._collect_exec_tokens()
        if family == "CICS":
            return self._parse_cics(tok.line, body)
        if family == "SQL":
            return self._parse_sql(tok.line, body)
        raise CobolSyntaxError(tok.line, f"unsupported EXEC {family}")

    def _parse_cics(self, line: int, body: list[Token]) -> Statement:
        sub = _StatementParser(body, self.dict)
        verb = sub.next().value.upper()

        def paren_operand(parse_item: bool):
            sub.expect("(")
            val: Union[DataItem, str]
            if parse_item:
                val = sub.parse_item_ref()
            else:
                t = sub.next()
                val = literal_value(t.value).upper() if _is_string(t) else t.value.upper()
            sub.expect(")")
            return val

        if verb in ("RECEIVE", "SEND"):
            sub.expect_word("MAP")
            map_name = paren_operand(parse_item=False)
            kind = "cics_receive_map" if verb == "RECEIVE" else "cics_send_map"
            stmt = Statement(line, kind, "", map_name=str(map_name))
            text = f"EXEC CICS {verb} MAP('{map_name}')"
            while sub.peek() is not None:
                kw = sub.next().value.upper()
                if kw == "MAPSET":
                    ms = paren_operand(parse_item=False)
                    text += f" MAPSET('{ms}')"
                elif kw in ("INTO", "FROM"):
                    stmt.map_area = paren_operand(parse_item=True)
                    text += f" {kw}({stmt.map_area.name})"
                elif kw == "ERASE":
                    text += " ERASE"
                else:
                    raise CobolSyntaxError(line, f"unsupported CICS {verb} option {kw}")
            stmt.text = text + " END-EXEC"
            return stmt
        if verb == "LINK":
            sub.expect_word("PROGRAM")
            target = paren_operand(parse_item=False)
            stmt = Statement(line, "cics_link", "", call_target=str(target))
            text = f"EXEC CICS LINK PROGRAM('{target}')"
            if sub.at_word("COMMAREA"):
                sub.next()
                stmt.commarea = paren_operand(parse_item=True)
                stmt.call_arguments = [stmt.commarea]
                text += f" COMMAREA({stmt.commarea.name})"
            stmt.text = text + " END-EXEC"
            return stmt
        if verb == "RETURN":
            stmt = Statement(line, "cics_return", "")
            text = "EXEC CICS RETURN"
            while sub.peek() is not None:
                kw = sub.next().value.upper()
                if kw == "TRANSID":
                    tid = paren_operand(parse_item=False)
                    text += f" TRANSID('{tid}')"
                elif kw == "COMMAREA":
                    stmt.commarea = paren_operand(parse_item=True)
                    text += f" COMMAREA({stmt.commarea.name})"
                else:
                    raise CobolSyntaxError(line, f"unsupported CICS RETURN option {kw}")
            stmt.text = text + " END-EXEC"
            return stmt
        raise CobolSyntaxError(line, f"unsupported CICS verb {verb}")

    def _parse_sql(self, line: int, body: list[Token]) -> Statement:
        verb = body[0].value.upper() if body else ""
        raw = " ".join(t.value for t in body)
        text = f"EXEC SQL {raw} END-EXEC"
        sub = _StatementParser(body, self.dict)

        def host_var() -> DataItem:
            sub.expect(":")
            return sub.parse_item_ref()

        def collect_where_hosts(into: list[DataItem]):
            while sub.peek() is not None:
                if sub.peek().value == ":":
                    into.append(host_var())
                else:
                    sub.next()

        if verb == "SELECT":
            sub.next()
            columns: list[str] = []
            while not sub.at_word("INTO"):
                t = sub.next()
                if t.value != ",":
                    columns.append(t.value.upper())
            sub.expect_word("INTO")
            hosts: list[DataItem] = []
            while not sub.at_word("FROM"):
                if sub.peek().value == ",":
                    sub.next()
                    continue
                hosts.append(host_var())
            sub.expect_word("FROM")
            table = sub.next().value.upper()
            stmt = Statement(line, "sql_select", text, sql_table=table)
            stmt.sql_into = [(columns[i] if i < len(columns) else "?", h)
                             for i, h in enumerate(hosts)]
            collect_where_hosts(stmt.sql_read_hosts)
            return stmt
        if verb == "INSERT":
            sub.next()
            sub.expect_word("INTO")
            table = sub.next().value.upper()
            stmt = Statement(line, "sql_insert", text, sql_table=table)
            collect_where_hosts(stmt.sql_read_hosts)
            return stmt
        if verb == "UPDATE":
            sub.next()
            table = sub.next().value.upper()
            stmt = Statement(line, "sql_update", text, sql_table=table)
            collect_where_hosts(stmt.sql_read_hosts)
            return stmt
        if verb == "DELETE":
            sub.next()
            sub.expect_word("FROM")
            table = sub.next().value.upper()
            stmt = Statement(line, "sql_delete", text, sql_table=table)
            collect_where_hosts(stmt.sql_read_hosts)
            return stmt
        raise CobolSyntaxError(line, f"unsupported SQL verb {verb or '<empty>'}")


# -- unit parsing -------------------------------------------------------------

_SECTION_RE = re.compile(r"^\s*(WORKING-STORAGE|LINKAGE)\s+SECTION\s*\.\s*$", re.I)
_PROGRAM_ID_RE = re.compile(r"\bPROGRAM-ID\s*\.\s*([A-Za-z0-9][A-Za-z0-9-]*)\s*\.?", re.I)
_DATA_DIV_RE = re.compile(r"\bDATA\s+DIVISION\s*\.", re.I)
_PROC_DIV_RE = re.compile(r"\bPROCEDURE\s+DIVISION(?P<using>[^.]*)\.", re.I)
_SQL_HINT_RE = re.compile(r"\bEXEC\s+SQL\b", re.I)


def parse_source(text: str, copybook_resolver: Optional[CopybookResolver] = None) -> SourceUnit:
    """Parse one MiniCOBOL program; copybooks are inlined via the resolver."""
    source_lines = [(i + 1, raw) for i, raw in enumerate(text.splitlines())]
    program_id = None
    data_start = None
    proc_start = None
    proc_tail = ""
    proc_using: list[str] = []
    for lineno, raw in source_lines:
        if _is_comment(raw):
            continue
        if program_id is None:
            pm = _PROGRAM_ID_RE.search(raw)
            if pm:
                program_id = pm.group(1).upper()
        if data_start is None and _DATA_DIV_RE.search(raw):
            data_start = lineno
        dm = _PROC_DIV_RE.search(raw)
        if dm:
            proc_start = lineno
            using_text = dm.group("using").strip()
            if using_text:
                words = using_text.split()
                if words[0].upper() != "USING":
                    raise CobolSyntaxError(
                        lineno, f"unexpected text after PROCEDURE DIVISION: {using_text!r}")
                proc_using = [w.upper() for w in words[1:]]
            proc_tail = raw[dm.end():]
            break
    if program_id is None:
        raise CobolSyntaxError(1, "missing PROGRAM-ID")
    if proc_start is None:
        raise CobolSyntaxError(len(source_lines) or 1, "missing PROCEDURE DIVISION")

    unit = SourceUnit(program_id=program_id, source_lines=source_lines)

    # data division
    if data_start is not None:
        section = None
        pending: dict[str, list[tuple[int, str]]] = {WORKING_STORAGE: [], LINKAGE: []}
        for lineno, raw in source_lines:
            if lineno <= data_start or lineno >= proc_start:
                continue
            if not raw.strip() or _is_comment(raw):
                continue
            sm = _SECTION_RE.match(raw)
            if sm:
                section = WORKING_STORAGE if sm.group(1).upper() == "WORKING-STORAGE" else LINKAGE
                continue
            if section is None:
                raise CobolSyntaxError(lineno, "data item outside a section")
            pending[section].append((lineno, raw))
        for section, lines in pending.items():
            expanded = _expand_copy(lines, copybook_resolver, unit.copybooks_used)
            raw_items = [_parse_item_line(n, t) for n, t in expanded]
            if section == WORKING_STORAGE and raw_items and _needs_sqlcode(source_lines):
                pass  # injected below, after both sections build
            unit.data_items.extend(build_item_tree(raw_items, section))

    if _needs_sqlcode(source_lines) and not any(i.name == "SQLCODE" for i in unit.all_items()):
        sqlcode = DataItem("SQLCODE", 1, "S9(9)", WORKING_STORAGE)
        sqlcode.byte_size = picture_size("S9(9)")
        ws_end = max((i.end_offset for i in unit.data_items if i.section == WORKING_STORAGE),
                     default=0)
        sqlcode.byte_offset = ws_end
        last_ws = max((k for k, i in enumerate(unit.data_items)
                       if i.section == WORKING_STORAGE), default=-1)
        unit.data_items.insert(last_ws + 1, sqlcode)

    dictionary = DataDictionary(unit)

    for name in proc_using:
        param = dictionary.resolve(name, proc_start)
        if param.section != LINKAGE:
            raise CobolSyntaxError(proc_start, f"USING parameter {name} is not a linkage item")
        unit.using_params.append(param)

    # procedure division (text may continue on the division header's line)
    proc_lines = [(proc_start, proc_tail)] if proc_tail.strip() else []
    proc_lines.extend((n, t) for n, t in source_lines if n > proc_start)
    tokens = _tokenize(proc_lines)
    parser = _StatementParser(tokens, dictionary)
    current: Optional[Paragraph] = None
    while parser.peek() is not None:
        tok = parser.peek()
        nxt = parser.peek(1)
        if _is_word(tok) and tok.value.upper() not in _STMT_KEYWORDS \
                and nxt is not None and nxt.value == ".":
            name = tok.value.upper()
            if unit.paragraph(name) is not None:
                raise CobolSyntaxError(tok.line, f"duplicate paragraph {name}")
            current = Paragraph(name, tok.line)
            unit.paragraphs.append(current)
            parser.next()
            parser.next()
            continue
        if current is None:
            raise CobolSyntaxError(tok.line, "statement before the first paragraph")
        stmt = parser.parse_statement()
        parser.expect(".")
        current.statements.append(stmt)

    from .rwsets import apply_read_write_sets
    apply_read_write_sets(unit, dictionary)
    return unit


def _needs_sqlcode(source_lines: list[tuple[int, str]]) -> bool:
    return any(_SQL_HINT_RE.search(t) for _, t in source_lines if not _is_comment(t))


# -- canonical rendering ------------------------------------------------------

def render_data_item(item: DataItem, indent: int = 0) -> list[str]:
    pad = "    " * indent
    clauses = [f"{item.level:02d}", item.name]
    if item.redefines is not None:
        clauses += ["REDEFINES", item.redefines.name]
    if item.picture:
        clauses += ["PIC", item.picture]
    if item.occurs:
        clauses += ["OCCURS", str(item.occurs)]
    if item.is_condition_name:
        clauses = ["88", item.name, "VALUE", f"'{item.condition_values[0]}'"]
    lines = [pad + " ".join(clauses) + "."]
    for child in item.children:
        lines.extend(render_data_item(child, indent + 1))
    return lines


def render_statement(stmt: Statement, indent: int, top_level: bool) -> list[str]:
    pad = "    " * indent
    period = "." if top_level else ""
    if stmt.kind == "if":
        lines = [pad + stmt.text]
        for s in stmt.then_body:
            lines.extend(render_statement(s, indent + 1, False))
        if stmt.else_body:
            lines.append(pad + "ELSE")
            for s in stmt.else_body:
                lines.extend(render_statement(s, indent + 1, False))
        lines.append(pad + "END-IF" + period)
        return lines
    if stmt.kind == "evaluate_when":
        lines = [pad + stmt.text]
        for arm in stmt.when_arms:
            if arm.is_other:
                lines.append(pad + "  WHEN OTHER")
            else:
                lines.append(pad + "  " + " ".join(f"WHEN '{v}'" for v in arm.values))
            for s in arm.body:
                lines.extend(render_statement(s, indent + 1, False))
        lines.append(pad + "END-EVALUATE" + period)
        return lines
    return [pad + stmt.text + period]


def render_source(unit: SourceUnit) -> str:
    """Canonical MiniCOBOL text; reparsing yields a structurally identical unit."""
    lines = [
        "IDENTIFICATION DIVISION.",
        f"PROGRAM-ID. {unit.program_id}.",
    ]
    ws = [i for i in unit.data_items if i.section == WORKING_STORAGE]
    lk = [i for i in unit.data_items if i.section == LINKAGE]
    if ws or lk:
        lines.append("DATA DIVISION.")
        if ws:
            lines.append("WORKING-STORAGE SECTION.")
            for item in ws:
                lines.extend(render_data_item(item))
        if lk:
            lines.append("LINKAGE SECTION.")
            for item in lk:
                lines.extend(render_data_item(item))
    using = ""
    if unit.using_params:
        using = " USING " + " ".join(p.name for p in unit.using_params)
    lines.append(f"PROCEDURE DIVISION{using}.")
    for para in unit.paragraphs:
        lines.append(f"{para.name}.")
        for stmt in para.statements:
            lines.extend(render_statement(stmt, 1, True))
    return "\n".join(lines) + "\n"
