"""Execution-semantics reference for the static analyses.

Paths through a region are enumerated with loops unrolled to a bound, and
each path is evaluated backward on its own: a field is a path request when it
is read without an earlier write on that path, and a path response when the
path writes it.  The union over paths is the ground truth the soundness and
precision properties compare against.  The walker here is deliberately a
separate implementation from the path-sensitive analysis: it breadth-first
expands configurations and keeps its own constant tracking, so agreement
between the two is evidence, not tautology.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .errors import InvalidRegion, PathBudgetExceeded
from .frontend.model import (
    BoolOp,
    Comparison,
    Condition,
    ConditionName,
    DataDictionary,
    DataItem,
    NotOp,
    SourceUnit,
    Statement,
)
from .frontend.parser import parse_source
from .graphs import ENTER, GOTO, RETURN, Cfg, CodeRegion
from .signature.model import UseDefSets

DEFAULT_BOUND = 3
DEFAULT_BUDGET = 4096
MAX_REGION_STATEMENTS = 200  # the reference is desk-scale by design


@dataclass
class ExecutionPath:
    statements: list[Statement]
    input_valuation: dict[DataItem, str] = field(default_factory=dict)
    loop_unroll_bound: int = DEFAULT_BOUND


@dataclass
class OracleResult:
    per_path: list[tuple[ExecutionPath, set[DataItem], set[DataItem]]]
    union_req: set[DataItem]
    union_resp: set[DataItem]


# -- constant tracking (the oracle's own copy, kept apart from the analyses) ----

def _known(value, env):
    if isinstance(value, str):
        return value
    return env.get(value)


def _cmp(a: str, op: str, b: str) -> bool:
    try:
        lhs, rhs = int(a), int(b)
    except ValueError:
        lhs, rhs = a, b
    return {
        "=": lhs == rhs,
        "<>": lhs != rhs,
        ">": lhs > rhs,
        "<": lhs < rhs,
        ">=": lhs >= rhs,
        "<=": lhs <= rhs,
    }[op]


def _decide(cond: Condition, env: dict) -> Optional[bool]:
    if isinstance(cond, Comparison):
        a, b = _known(cond.lhs, env), _known(cond.rhs, env)
        return None if a is None or b is None else _cmp(a, cond.op, b)
    if isinstance(cond, ConditionName):
        v = env.get(cond.item.parent) if cond.item.parent else None
        return None if v is None else any(_cmp(v, "=", lit) for lit in cond.item.condition_values)
    if isinstance(cond, BoolOp):
        parts = [_decide(p, env) for p in cond.parts]
        if cond.op == "AND":
            if False in parts:
                return False
            return True if all(p is True for p in parts) else None
        if True in parts:
            return True
        return False if all(p is False for p in parts) else None
    if isinstance(cond, NotOp):
        inner = _decide(cond.part, env)
        return None if inner is None else not inner
    raise TypeError(cond)


class _Config:
    """One in-flight execution: current node, constants, perform stack."""

    __slots__ = ("node", "env", "frames", "hops", "trace")

    def __init__(self, node, env, frames, hops, trace):
        self.node = node
        self.env = env
        self.frames = frames  # tuple of (site, entered-count)
        self.hops = hops      # frozen dict of goto-edge traversal counts
        self.trace = trace    # tuple of statements executed so far


def enumerate_paths(region: CodeRegion, cfg: Cfg, bound: int = DEFAULT_BOUND,
                    budget: int = DEFAULT_BUDGET,
                    stats: Optional[dict] = None) -> list[ExecutionPath]:
    """All region paths with loops unrolled at most ``bound`` times.

    Input-dependent branches expand both ways; branches forced by constants
    the region itself established go one way only.
    """
    if len(region.statements) > MAX_REGION_STATEMENTS:
        raise InvalidRegion(
            f"the execution-semantics reference is capped at "
            f"{MAX_REGION_STATEMENTS} statements; region has {len(region.statements)}")
    members = region.member_set()
    dictionary = DataDictionary(cfg.unit)
    stale: dict[Statement, frozenset[DataItem]] = {}
    for s in region.statements:
        written = set(s.writes)
        if s.kind in ("call", "cics_link"):
            # a callee may overwrite anything passed to it
            for arg in s.call_arguments:
                written |= arg.storage_closure()
        dead = set(written)
        for w in written:
            dead.update(w.ancestors())
            dead |= dictionary.overlap_aliases(w)
        stale[s] = frozenset(dead)

    forced = 0
    paths: list[ExecutionPath] = []
    expansions = 0
    queue = deque([_Config(region.entry, {}, (), {}, ())])
    while queue:
        cfgn = queue.popleft()
        expansions += 1
        if expansions > max(budget, 1) * 512:
            raise PathBudgetExceeded(len(paths))
        node = cfgn.node
        trace = cfgn.trace + (node,)
        env = dict(cfgn.env)
        literal = None
        if node.kind == "move":
            literal = _known(node.move_source, cfgn.env) if node.move_source is not None else None
        for dead_item in stale.get(node, ()):
            env[dead_item] = None
        if node.kind == "move" and literal is not None:
            for tgt in node.move_targets:
                env[tgt] = literal

        moves, was_forced = _expand(node, env, cfgn, cfg, bound)
        if was_forced:
            forced += 1
        moves = [(t, fr, hp) for t, fr, hp in moves if t in members]
        if not moves:
            paths.append(ExecutionPath(list(trace), {}, bound))
            if len(paths) > budget:
                raise PathBudgetExceeded(len(paths))
            continue
        for target, frames, hops in moves:
            queue.append(_Config(target, env, frames, hops, trace))
    if stats is not None:
        stats["forced_branches"] = forced
        stats["expansions"] = expansions
    return paths


def _expand(node: Statement, env: dict, cfgn: _Config, cfg: Cfg, bound: int):
    """Successor configurations as (target, frames, hops); bool = branch was forced."""
    succs = cfg.succ(node)

    def plain(targets):
        out = []
        if cfgn.frames:
            site, count = cfgn.frames[-1]
            rets = [t for t in targets if cfg.edge_label(node, t) == (RETURN, site)]
            if rets:
                shed = cfgn.frames[:-1]
                if site.condition is None:
                    return [(t, shed, cfgn.hops) for t in rets]
                verdict = _decide(site.condition, env)
                result = []
                if verdict is not False or count >= bound:
                    result.extend((t, shed, cfgn.hops) for t in rets)
                if verdict is not True and count < bound:
                    again = _enter_of(site, cfg)
                    if again is not None:
                        result.append((again, shed + ((site, count + 1),), cfgn.hops))
                return result
        for t in targets:
            label, _ = cfg.edge_label(node, t)
            if label == GOTO:
                key = (id(node), id(t))
                if cfgn.hops.get(key, 0) >= max(bound, 1):
                    continue
                hops = dict(cfgn.hops)
                hops[key] = hops.get(key, 0) + 1
                out.append((t, cfgn.frames, hops))
            else:
                out.append((t, cfgn.frames, cfgn.hops))
        return out

    if node.kind == "if":
        then_t = node.then_body[0]
        else_t = node.else_body[0] if node.else_body else None
        arm_set = {then_t} | ({else_t} if else_t else set())
        rest = [s for s in succs if s not in arm_set]
        verdict = _decide(node.condition, env)
        if verdict is True:
            return [(then_t, cfgn.frames, cfgn.hops)], True
        if verdict is False:
            if else_t is not None:
                return [(else_t, cfgn.frames, cfgn.hops)], True
            return plain(rest), True
        both = [(then_t, cfgn.frames, cfgn.hops)]
        if else_t is not None:
            both.append((else_t, cfgn.frames, cfgn.hops))
        else:
            both.extend(plain(rest))
        return both, False

    if node.kind == "evaluate_when":
        entries = {arm.body[0] for arm in node.when_arms}
        rest = [s for s in succs if s not in entries]
        value = env.get(node.scrutinee)
        if value is not None:
            for arm in node.when_arms:
                if arm.is_other or any(_cmp(value, "=", v) for v in arm.values):
                    return [(arm.body[0], cfgn.frames, cfgn.hops)], True
            return plain(rest), True
        fanout = [(arm.body[0], cfgn.frames, cfgn.hops) for arm in node.when_arms]
        if not any(arm.is_other for arm in node.when_arms):
            fanout.extend(plain(rest))
        return fanout, False

    if node.kind == "perform":
        enter = _enter_of(node, cfg)
        rest = [t for t in succs if cfg.edge_label(node, t)[0] != ENTER]
        if enter is None:
            return plain(rest), False
        if len(cfgn.frames) >= 32:
            raise PathBudgetExceeded(0)
        pushed = cfgn.frames + ((node, 1),)
        if node.condition is None:
            return [(enter, pushed, cfgn.hops)], False
        verdict = _decide(node.condition, env)
        if verdict is True:
            return [(t, cfgn.frames, cfgn.hops) for t in rest], True
        if verdict is False:
            return [(enter, pushed, cfgn.hops)], True
        choices = [(enter, pushed, cfgn.hops)]
        choices.extend((t, cfgn.frames, cfgn.hops) for t in rest)
        return choices, False

    return plain(succs), False


def _enter_of(site: Statement, cfg: Cfg) -> Optional[Statement]:
    for t in cfg.succ(site):
        if cfg.edge_label(site, t) == (ENTER, site):
            return t
    return None


def oracle_signature(region: CodeRegion, paths: list[ExecutionPath],
                     sets: UseDefSets) -> OracleResult:
    """Backward per-path evaluation, then union over paths."""
    per_path = []
    union_req: set[DataItem] = set()
    union_resp: set[DataItem] = set()
    for ep in paths:
        live: set[DataItem] = set()
        resp: set[DataItem] = set()
        for stmt in reversed(ep.statements):
            live = set(sets.gen(stmt)) | (live - set(sets.kill(stmt)))
            resp |= sets.resp_gen[stmt]
        per_path.append((ep, live, resp))
        union_req |= live
        union_resp |= resp
    return OracleResult(per_path, union_req, union_resp)


# -- seeded program generator ---------------------------------------------------

_SIMPLE_KINDS = ("move_var", "move_lit", "add", "compute")
_MAX_BRANCHES = 5  # keeps worst-case path fan-out well under the default budget


def random_program(seed: int, size: int = 30, vars: int = 10) -> SourceUnit:
    """Deterministic pseudo-random MiniCOBOL program over PIC 9(4) fields.

    Straight-line statements, IF/EVALUATE branching, and bounded PERFORM
    UNTIL loops; the same seed always yields the same text.  A size-1 budget
    always produces a single variable-to-variable MOVE.
    """
    rng = random.Random(seed)
    size = max(1, min(int(size), 30))
    cap = max(2, min(int(vars), 10))
    nvars = 2 if cap == 2 else rng.randint(2, cap)
    names = [f"V{i:02d}" for i in range(nvars)]
    remaining = size
    loops: list[tuple[str, list[str]]] = []
    branches = 0

    def var() -> str:
        return rng.choice(names)

    def two() -> tuple[str, str]:
        a = rng.choice(names)
        b = rng.choice(names)
        if a == b:
            b = names[(names.index(a) + 1) % len(names)]
        return a, b

    def simple() -> str:
        kind = rng.choice(_SIMPLE_KINDS)
        if kind == "move_var":
            a, b = two()
            return f"MOVE {a} TO {b}"
        if kind == "move_lit":
            return f"MOVE {rng.randint(0, 9)} TO {var()}"
        if kind == "add":
            a, b = two()
            return f"ADD {a} TO {b}"
        a, b = two()
        return f"COMPUTE {a} = {b} + {rng.randint(1, 99)}"

    blocks: list[list[str]] = []  # one sentence per block
    if size == 1:
        a, b = two()
        blocks.append([f"MOVE {a} TO {b}"])
        remaining = 0

    while remaining > 0:
        roll = rng.random()
        if branches < _MAX_BRANCHES and remaining >= 4 and roll < 0.15:
            branches += 1
            scrutinee = var()
            if remaining >= 5 and rng.random() < 0.5:
                remaining -= 1
                blocks.append([f"MOVE {rng.randint(1, 3)} TO {scrutinee}"])
            remaining -= 1
            lines = [f"EVALUATE {scrutinee}"]
            for i in range(rng.randint(2, 3)):
                if remaining <= 0:
                    break
                remaining -= 1
                lines.extend([f"  WHEN {i + 1}", f"    {simple()}"])
            if remaining > 0 and rng.random() < 0.5:
                remaining -= 1
                lines.extend(["  WHEN OTHER", f"    {simple()}"])
            lines.append("END-EVALUATE")
            blocks.append(lines)
        elif branches < _MAX_BRANCHES and remaining >= 3 and roll < 0.32:
            branches += 1
            remaining -= 2
            probe = var()
            cond = f"{probe} > {rng.randint(0, 9)}" if rng.random() < 0.5 \
                else f"{probe} = {var()}"
            lines = [f"IF {cond}", f"    {simple()}"]
            if remaining > 0 and rng.random() < 0.4:
                remaining -= 1
                lines.append(f"    {simple()}")
            if remaining > 0 and rng.random() < 0.5:
                remaining -= 1
                lines.extend(["ELSE", f"    {simple()}"])
            lines.append("END-IF")
            blocks.append(lines)
        elif branches < _MAX_BRANCHES and remaining >= 3 and len(loops) < 2 and roll < 0.42:
            branches += 1
            remaining -= 2
            counter = var()
            body = [simple()]
            if remaining > 0 and rng.random() < 0.6:
                remaining -= 1
                body.append(f"ADD 1 TO {counter}")
            name = f"LOOP-{len(loops) + 1}"
            loops.append((name, body))
            blocks.append([f"PERFORM {name} UNTIL {counter} > {rng.randint(1, 9)}"])
        else:
            remaining -= 1
            blocks.append([simple()])

    text_lines = [
        "IDENTIFICATION DIVISION.",
        f"PROGRAM-ID. RAND{seed % 100000:05d}.",
        "DATA DIVISION.",
        "WORKING-STORAGE SECTION.",
    ]
    text_lines.extend(f"01 {n} PIC 9(4)." for n in names)
    text_lines.append("PROCEDURE DIVISION.")
    text_lines.append("MAIN.")
    for block in blocks:
        for i, line in enumerate(block):
            tail = "." if i == len(block) - 1 else ""
            text_lines.append(f"    {line}{tail}")
    # loop bodies live after the exit so they are reachable only through
    # their PERFORM sites
    text_lines.append("    GOBACK.")
    for name, body in loops:
        text_lines.append(f"{name}.")
        text_lines.extend(f"    {line}." for line in body)
    return parse_source("\n".join(text_lines) + "\n")
