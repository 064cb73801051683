"""Control-flow and call graphs.

The CFG is statement-granular.  PERFORM is spliced: an edge into the target
paragraph's first statement and return edges from the paragraph range's
fall-out statements back to the PERFORM's follower (plus a bypass edge for
PERFORM ... UNTIL).  Splicing over-approximates paths when one paragraph is
performed from several sites; that keeps the analyses sound.  GOBACK and
STOP RUN are exits.  Edges carry a label so path enumerators can tell apart
sequential flow, branch arms, perform enter/return/bypass, and GO TO jumps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import InvalidRegion, UnknownParagraph
from .frontend.model import Paragraph, SourceUnit, Statement

ENTER = "perform_enter"
RETURN = "perform_return"
BYPASS = "perform_bypass"
SEQ = "seq"
BRANCH = "branch"
GOTO = "goto"


@dataclass(eq=False)
class Cfg:
    unit: SourceUnit
    nodes: list[Statement] = field(default_factory=list)
    entry: Optional[Statement] = None
    exits: set[Statement] = field(default_factory=set)
    successors: dict[Statement, list[Statement]] = field(default_factory=dict)
    predecessors: dict[Statement, list[Statement]] = field(default_factory=dict)
    edge_labels: dict[tuple[int, int], tuple[str, Optional[Statement]]] = field(default_factory=dict)
    unreachable: set[Statement] = field(default_factory=set)
    order: dict[Statement, int] = field(default_factory=dict)

    def succ(self, node: Statement) -> list[Statement]:
        return self.successors.get(node, [])

    def pred(self, node: Statement) -> list[Statement]:
        return self.predecessors.get(node, [])

    def edge_label(self, a: Statement, b: Statement) -> tuple[str, Optional[Statement]]:
        return self.edge_labels.get((id(a), id(b)), (SEQ, None))

    def edge_count(self) -> int:
        return sum(len(v) for v in self.successors.values())


class _Builder:
    def __init__(self, unit: SourceUnit):
        self.unit = unit
        self.succ: dict[Statement, list[Statement]] = {}
        self.labels: dict[tuple[int, int], tuple[str, Optional[Statement]]] = {}
        self.performs: list[Statement] = []
        self.gotos: list[Statement] = []

    def add_edge(self, a: Statement, b: Statement, label: str = SEQ,
                 site: Optional[Statement] = None) -> None:
        targets = self.succ.setdefault(a, [])
        if b not in targets:
            targets.append(b)
            self.labels[(id(a), id(b))] = (label, site)

    def remove_edge(self, a: Statement, b: Statement) -> None:
        targets = self.succ.get(a, [])
        if b in targets:
            targets.remove(b)
            self.labels.pop((id(a), id(b)), None)

    def link_seq(self, stmts: list[Statement]) -> tuple[Optional[Statement], list[Statement]]:
        """Wire a statement sequence; returns (first, fall-out statements)."""
        first: Optional[Statement] = None
        outs: list[Statement] = []
        for stmt in stmts:
            s_first, s_outs = self.link_one(stmt)
            if first is None:
                first = s_first
            for o in outs:
                self.add_edge(o, s_first)
            outs = s_outs
        return first, outs

    def link_one(self, stmt: Statement) -> tuple[Statement, list[Statement]]:
        kind = stmt.kind
        if kind == "if":
            t_first, t_outs = self.link_seq(stmt.then_body)
            self.add_edge(stmt, t_first, BRANCH)
            outs = list(t_outs)
            if stmt.else_body:
                e_first, e_outs = self.link_seq(stmt.else_body)
                self.add_edge(stmt, e_first, BRANCH)
                outs.extend(e_outs)
            else:
                outs.append(stmt)  # false edge falls through
            return stmt, outs
        if kind == "evaluate_when":
            outs = []
            has_other = False
            for arm in stmt.when_arms:
                a_first, a_outs = self.link_seq(arm.body)
                self.add_edge(stmt, a_first, BRANCH)
                outs.extend(a_outs)
                has_other = has_other or arm.is_other
            if not has_other:
                outs.append(stmt)  # no matching WHEN falls through
            return stmt, outs
        if kind in ("goback", "stop_run"):
            return stmt, []
        if kind == "goto":
            self.gotos.append(stmt)
            return stmt, []
        if kind == "perform":
            self.performs.append(stmt)
            return stmt, [stmt]
        return stmt, [stmt]


def build_cfg(unit: SourceUnit) -> Cfg:
    builder = _Builder(unit)
    para_info: list[tuple[Paragraph, Optional[Statement], list[Statement]]] = []
    for para in unit.paragraphs:
        first, outs = builder.link_seq(para.statements)
        para_info.append((para, first, outs))

    # paragraph fall-through chaining
    prev_outs: list[Statement] = []
    entry: Optional[Statement] = None
    for _, first, outs in para_info:
        if first is None:
            continue
        if entry is None:
            entry = first
        for o in prev_outs:
            builder.add_edge(o, first)
        prev_outs = outs

    para_index = {para.name: i for i, (para, _, _) in enumerate(para_info)}

    def paragraph_entry(idx: int) -> Optional[Statement]:
        for _, first, _ in para_info[idx:]:
            if first is not None:
                return first
        return None

    def require(name: str, line: int) -> int:
        if name not in para_index:
            raise UnknownParagraph(name, line)
        return para_index[name]

    # snapshot original fall-through successors before splice passes add
    # return edges, so one PERFORM's rewiring never leaks into another's
    original_succs = {stmt: list(builder.succ.get(stmt, []))
                      for stmt in builder.performs + builder.gotos}

    for stmt in builder.performs:
        t_idx = require(stmt.perform_target, stmt.line)
        u_idx = require(stmt.perform_thru, stmt.line) if stmt.perform_thru else t_idx
        target_entry = paragraph_entry(t_idx)
        followers = original_succs[stmt]
        if target_entry is not None:
            builder.add_edge(stmt, target_entry, ENTER, stmt)
            for ret in para_info[u_idx][2]:
                for f in followers:
                    builder.add_edge(ret, f, RETURN, stmt)
        if stmt.condition is not None:
            for f in followers:
                builder.labels[(id(stmt), id(f))] = (BYPASS, stmt)
        else:
            for f in followers:
                builder.remove_edge(stmt, f)

    for stmt in builder.gotos:
        t_idx = require(stmt.goto_target, stmt.line)
        for f in original_succs[stmt]:
            builder.remove_edge(stmt, f)
        target_entry = paragraph_entry(t_idx)
        if target_entry is not None:
            builder.add_edge(stmt, target_entry, GOTO)

    cfg = Cfg(unit=unit)
    cfg.nodes = unit.all_statements()
    cfg.order = {s: i for i, s in enumerate(cfg.nodes)}
    cfg.entry = entry
    cfg.successors = {s: sorted(builder.succ.get(s, []), key=cfg.order.get)
                      for s in cfg.nodes}
    cfg.edge_labels = builder.labels
    cfg.predecessors = {s: [] for s in cfg.nodes}
    for a, targets in cfg.successors.items():
        for b in targets:
            cfg.predecessors[b].append(a)
    cfg.exits = {s for s in cfg.nodes if not cfg.successors[s]}
    reachable = set()
    stack = [entry] if entry is not None else []
    while stack:
        n = stack.pop()
        if n in reachable:
            continue
        reachable.add(n)
        stack.extend(cfg.successors[n])
    cfg.unreachable = {s for s in cfg.nodes if s not in reachable}
    return cfg


def post_order(cfg: Cfg, roots: Optional[list[Statement]] = None,
               restrict: Optional[set[Statement]] = None) -> list[Statement]:
    """Depth-first post-order of the reachable nodes (deepest first)."""
    if roots is None:
        roots = [cfg.entry] if cfg.entry is not None else []
    seen: set[Statement] = set()
    out: list[Statement] = []
    for root in roots:
        if root is None or root in seen or (restrict is not None and root not in restrict):
            continue
        stack: list[tuple[Statement, int]] = [(root, 0)]
        seen.add(root)
        while stack:
            node, child_idx = stack.pop()
            succs = [s for s in cfg.succ(node)
                     if restrict is None or s in restrict]
            if child_idx < len(succs):
                stack.append((node, child_idx + 1))
                child = succs[child_idx]
                if child not in seen:
                    seen.add(child)
                    stack.append((child, 0))
            else:
                out.append(node)
    return out


# -- code regions --------------------------------------------------------------

@dataclass(eq=False)
class CodeRegion:
    program: str
    start_line: int
    end_line: int
    statements: list[Statement]

    @property
    def entry(self) -> Statement:
        return self.statements[0]

    def member_set(self) -> set[Statement]:
        return set(self.statements)

    def __repr__(self) -> str:  # pragma: no cover
        return f"<region {self.program}:{self.start_line}-{self.end_line} ({len(self.statements)} stmts)>"


def make_region(unit: SourceUnit, start_line: int, end_line: int) -> CodeRegion:
    if start_line > end_line:
        raise InvalidRegion(f"start line {start_line} after end line {end_line}")
    stmts = [s for s in unit.all_statements() if start_line <= s.line <= end_line]
    if not stmts:
        raise InvalidRegion(f"no statements in {unit.program_id}:{start_line}-{end_line}")
    return CodeRegion(unit.program_id, start_line, end_line, stmts)


def region_exits(region: CodeRegion, cfg: Cfg) -> set[Statement]:
    members = region.member_set()
    out = set()
    for s in region.statements:
        succs = cfg.succ(s)
        if not succs or any(t not in members for t in succs):
            out.add(s)
    return out


# -- call graph ----------------------------------------------------------------

@dataclass(eq=False)
class CallGraph:
    nodes: set[str] = field(default_factory=set)
    edges: list[tuple[str, Statement, str]] = field(default_factory=list)
    unresolved: list[tuple[str, Statement]] = field(default_factory=list)
    cycles: set[frozenset[str]] = field(default_factory=set)

    def callees(self, program: str) -> set[str]:
        return {callee for caller, _, callee in self.edges if caller == program}

    def in_cycle(self, program: str) -> bool:
        return any(program in scc for scc in self.cycles)


def build_call_graph(workspace: Iterable[SourceUnit]) -> CallGraph:
    units = list(workspace)
    graph = CallGraph(nodes={u.program_id for u in units})
    adj: dict[str, set[str]] = {u.program_id: set() for u in units}
    for unit in units:
        for stmt in unit.all_statements():
            if stmt.kind not in ("call", "cics_link"):
                continue
            if stmt.call_target is None:
                graph.unresolved.append((unit.program_id, stmt))
                continue
            graph.edges.append((unit.program_id, stmt, stmt.call_target))
            if stmt.call_target in adj:
                adj[unit.program_id].add(stmt.call_target)
    graph.cycles = _nontrivial_sccs(adj)
    return graph


def _nontrivial_sccs(adj: dict[str, set[str]]) -> set[frozenset[str]]:
    """Tarjan's algorithm; keeps SCCs with >1 node or a self-loop."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    out: set[frozenset[str]] = set()
    counter = [0]

    def strongconnect(v: str) -> None:
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        for w in sorted(adj.get(v, ())):
            if w not in index:
                strongconnect(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            scc = []
            while True:
                w = stack.pop()
                on_stack.discard(w)
                scc.append(w)
                if w == v:
                    break
            if len(scc) > 1 or v in adj.get(v, ()):
                out.add(frozenset(scc))

    for v in sorted(adj):
        if v not in index:
            strongconnect(v)
    return out


# -- DOT export ----------------------------------------------------------------

def cfg_to_dot(cfg: Cfg) -> str:
    lines = [f'digraph "{cfg.unit.program_id}" {{']
    ids = {s: f"n{i}" for i, s in enumerate(cfg.nodes)}
    for s in cfg.nodes:
        label = f"{s.line}: {s.text}".replace('"', "'")
        lines.append(f'  {ids[s]} [label="{label}"];')
    for a in cfg.nodes:
        for b in cfg.succ(a):
            kind, _ = cfg.edge_label(a, b)
            attr = f' [label="{kind}"]' if kind != SEQ else ""
            lines.append(f"  {ids[a]} -> {ids[b]}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def call_graph_to_dot(graph: CallGraph) -> str:
    lines = ["digraph calls {"]
    for node in sorted(graph.nodes):
        lines.append(f'  "{node}";')
    for caller, stmt, callee in sorted(graph.edges, key=lambda e: (e[0], e[1].line, e[2])):
        lines.append(f'  "{caller}" -> "{callee}" [label="line {stmt.line}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
