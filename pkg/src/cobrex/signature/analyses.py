"""Intra-program signature analyses.

Three variants over a code region, in ascending precision:

* flow-insensitive: requests are every field read anywhere in the region,
  responses every field written; one pass, no ordering.
* flow-sensitive: requests are ReqIn at the region entry from the backward
  liveness fixpoint; responses stay the union of writes (optionally filtered
  to fields the caller reads after the region).
* path-sensitive: feasible paths are enumerated with region-local constant
  propagation (a literal moved to a scrutinee picks the matching WHEN arm);
  requests and responses are unioned over per-path results.
"""

from __future__ import annotations

from typing import Optional, Union

from ..errors import InvalidRegion, PathBudgetExceeded
from ..frontend.model import (
    BoolOp,
    Comparison,
    Condition,
    ConditionName,
    DataDictionary,
    DataItem,
    NotOp,
    Statement,
)
from ..graphs import ENTER, GOTO, RETURN, Cfg, CodeRegion
from .liveness import solve_region_liveness
from .model import ApiSignature, UseDefSets, Variant, make_signature
from .surety import surety_annotate

DEFAULT_PATH_BUDGET = 4096
DEFAULT_UNROLL = 3
MAX_PERFORM_DEPTH = 32
MAX_PS_STATEMENTS = 200  # path enumeration is desk-scale by design


def classify_http_method(region: CodeRegion) -> str:
    """delete > put > post > get over the region's data-store operations."""
    has_update = has_insert = False
    for s in region.statements:
        if s.kind == "sql_delete":
            return "delete"
        if s.kind == "sql_update" or (s.kind == "file_write" and s.is_rewrite):
            has_update = True
        elif s.kind == "sql_insert" or s.kind == "file_write":
            has_insert = True
    if has_update:
        return "put"
    if has_insert:
        return "post"
    return "get"


def flow_insensitive_signature(region: CodeRegion, sets: UseDefSets,
                               cfg: Optional[Cfg] = None,
                               variant: Variant = Variant("fi", False),
                               degraded: bool = False) -> ApiSignature:
    requests: set[DataItem] = set()
    responses: set[DataItem] = set()
    for s in region.statements:
        requests |= sets.gen(s)
        responses |= sets.resp_gen[s]
    sig = make_signature(region, variant, requests, responses,
                         classify_http_method(region), degraded,
                         stats={"fi_passes": 1})
    if cfg is not None:
        surety_annotate(sig, cfg, sets)
    return sig


def flow_sensitive_signature(region: CodeRegion, cfg: Cfg, sets: UseDefSets,
                             post_context: Optional[set[DataItem]] = None,
                             variant: Variant = Variant("fs", False),
                             degraded: bool = False,
                             backend: Optional[str] = None) -> ApiSignature:
    state = solve_region_liveness(region, cfg, sets, backend=backend)
    requests = set(state.req_in[region.entry])
    responses: set[DataItem] = set()
    for s in region.statements:
        responses |= sets.resp_gen[s]
    if post_context is not None:
        responses &= post_context
    sig = make_signature(region, variant, requests, responses,
                         classify_http_method(region), degraded,
                         stats={"fs_iterations": state.iterations})
    surety_annotate(sig, cfg, sets)
    return sig


def path_sensitive_signature(region: CodeRegion, cfg: Cfg, sets: UseDefSets,
                             bound: int = DEFAULT_PATH_BUDGET,
                             unroll: int = DEFAULT_UNROLL,
                             variant: Variant = Variant("ps", False),
                             degraded: bool = False,
                             max_statements: int = MAX_PS_STATEMENTS) -> ApiSignature:
    if len(region.statements) > max_statements:
        raise InvalidRegion(
            f"path-sensitive analysis is capped at {max_statements} statements; "
            f"region has {len(region.statements)} (fall back to --flow fs)")
    paths, stats = enumerate_feasible_paths(region, cfg, sets,
                                            budget=bound, unroll=unroll)
    requests: set[DataItem] = set()
    responses: set[DataItem] = set()
    for path in paths:
        written: set[DataItem] = set()
        for s in path:
            requests |= sets.gen(s) - written
            written |= sets.kill(s)
        responses |= written
    sig = make_signature(region, variant, requests, responses,
                         classify_http_method(region), degraded,
                         stats={"ps_paths": len(paths),
                                "ps_forced_branches": stats["forced"]})
    surety_annotate(sig, cfg, sets)
    return sig


# -- constant environment -------------------------------------------------------

Value = Optional[str]  # literal text; None means statically unknown


def evaluate_condition(cond: Condition, env: dict[DataItem, Value]) -> Optional[bool]:
    if isinstance(cond, Comparison):
        lhs = cond.lhs if isinstance(cond.lhs, str) else env.get(cond.lhs)
        rhs = cond.rhs if isinstance(cond.rhs, str) else env.get(cond.rhs)
        if lhs is None or rhs is None:
            return None
        return compare_literals(lhs, cond.op, rhs)
    if isinstance(cond, ConditionName):
        parent = cond.item.parent
        value = env.get(parent) if parent is not None else None
        if value is None:
            return None
        return any(compare_literals(value, "=", v) for v in cond.item.condition_values)
    if isinstance(cond, BoolOp):
        results = [evaluate_condition(p, env) for p in cond.parts]
        if cond.op == "AND":
            if any(r is False for r in results):
                return False
            return True if all(r is True for r in results) else None
        if any(r is True for r in results):
            return True
        return False if all(r is False for r in results) else None
    if isinstance(cond, NotOp):
        inner = evaluate_condition(cond.part, env)
        return None if inner is None else not inner
    raise TypeError(cond)


def compare_literals(lhs: str, op: str, rhs: str) -> bool:
    a: Union[int, str]
    b: Union[int, str]
    try:
        a, b = int(lhs), int(rhs)
    except ValueError:
        a, b = lhs, rhs
    if op == "=":
        return a == b
    if op == "<>":
        return a != b
    if op == ">":
        return a > b
    if op == "<":
        return a < b
    if op == ">=":
        return a >= b
    if op == "<=":
        return a <= b
    raise ValueError(op)


def invalidation_sets(region: CodeRegion, cfg: Cfg,
                      sets: UseDefSets) -> dict[Statement, frozenset[DataItem]]:
    """Items whose known constant dies when a statement runs: everything the
    statement writes plus each written item's ancestors and overlap aliases."""
    dictionary = DataDictionary(cfg.unit)
    out = {}
    for s in region.statements:
        dead = set(sets.kill(s))
        for w in sets.kill(s):
            dead.update(w.ancestors())
            dead |= dictionary.overlap_aliases(w)
        out[s] = frozenset(dead)
    return out


def apply_constant_effects(stmt: Statement, env: dict[DataItem, Value],
                           invalidation: dict[Statement, frozenset[DataItem]]) -> None:
    source_value: Value = None
    if stmt.kind == "move":
        if isinstance(stmt.move_source, str):
            source_value = stmt.move_source
        elif stmt.move_source is not None:
            source_value = env.get(stmt.move_source)
    for item in invalidation.get(stmt, ()):
        env[item] = None
    if stmt.kind == "move" and source_value is not None:
        for target in stmt.move_targets:
            env[target] = source_value


# -- feasible-path enumeration ----------------------------------------------------

class _Walk:
    __slots__ = ("node", "env", "frames", "path", "goto_hops")

    def __init__(self, node, env, frames, path, goto_hops):
        self.node = node
        self.env = env
        self.frames = frames        # list of (perform site, iterations entered)
        self.path = path
        self.goto_hops = goto_hops  # (id(a), id(b)) -> traversal count

    def fork(self, node) -> "_Walk":
        return _Walk(node, dict(self.env), list(self.frames), list(self.path),
                     dict(self.goto_hops))


def enumerate_feasible_paths(region: CodeRegion, cfg: Cfg, sets: UseDefSets,
                             budget: int = DEFAULT_PATH_BUDGET,
                             unroll: int = DEFAULT_UNROLL
                             ) -> tuple[list[list[Statement]], dict]:
    """All feasible region paths from the region entry.

    Branches resolve one way when region-local constants force them, both
    ways otherwise.  A PERFORM ... UNTIL body replays up to ``unroll`` times
    by re-testing the loop condition at its return point; GO TO back edges
    are cut after ``unroll`` traversals.  Truncating a path only shrinks its
    contribution, so unions over the result stay sound.
    """
    members = region.member_set()
    invalidation = invalidation_sets(region, cfg, sets)
    stats = {"forced": 0}
    completed: list[list[Statement]] = []
    steps = 0
    step_cap = max(budget, 1) * 512

    def enter_target(site: Statement) -> Optional[Statement]:
        for t in cfg.succ(site):
            if cfg.edge_label(site, t) == (ENTER, site):
                return t
        return None

    stack = [_Walk(region.entry, {}, [], [], {})]
    while stack:
        walk = stack.pop()
        while True:
            steps += 1
            if steps > step_cap:
                raise PathBudgetExceeded(len(completed))
            node = walk.node
            walk.path.append(node)
            apply_constant_effects(node, walk.env, invalidation)
            choices = _resolve_successors(walk, cfg, unroll, stats, enter_target)
            live: list[tuple[Statement, list, Optional[tuple]]] = []
            for target, frames, hop in choices:
                if target in members:
                    live.append((target, frames, hop))
            if not live:
                completed.append(list(walk.path))
                if len(completed) > budget:
                    raise PathBudgetExceeded(len(completed))
                break
            first = live[0]
            for target, frames, hop in live[1:]:
                forked = walk.fork(target)
                forked.frames = list(frames)
                if hop is not None:
                    forked.goto_hops[hop] = forked.goto_hops.get(hop, 0) + 1
                stack.append(forked)
            walk.node, walk.frames = first[0], list(first[1])
            if first[2] is not None:
                walk.goto_hops[first[2]] = walk.goto_hops.get(first[2], 0) + 1

    return completed, stats


def _resolve_successors(walk: _Walk, cfg: Cfg, unroll: int, stats: dict,
                        enter_target) -> list[tuple[Statement, list, Optional[tuple]]]:
    """Successor choices as (target, frames-after, goto-edge-key) triples."""
    node = walk.node
    succs = cfg.succ(node)
    kind = node.kind

    if kind == "if":
        then_t = node.then_body[0]
        else_t = node.else_body[0] if node.else_body else None
        arm_entries = {then_t} | ({else_t} if else_t else set())
        followers = [s for s in succs if s not in arm_entries]
        verdict = evaluate_condition(node.condition, walk.env)
        if verdict is True:
            stats["forced"] += 1
            return [(then_t, walk.frames, None)]
        if verdict is False:
            stats["forced"] += 1
            if else_t is not None:
                return [(else_t, walk.frames, None)]
            return _frame_filter(walk, followers, cfg, unroll, enter_target)
        out = [(then_t, walk.frames, None)]
        if else_t is not None:
            out.append((else_t, walk.frames, None))
        else:
            out.extend(_frame_filter(walk, followers, cfg, unroll, enter_target))
        return out

    if kind == "evaluate_when":
        arm_entries = {arm.body[0] for arm in node.when_arms}
        followers = [s for s in succs if s not in arm_entries]
        value = walk.env.get(node.scrutinee)
        if value is not None:
            stats["forced"] += 1
            for arm in node.when_arms:
                if arm.is_other or any(compare_literals(value, "=", v) for v in arm.values):
                    return [(arm.body[0], walk.frames, None)]
            return _frame_filter(walk, followers, cfg, unroll, enter_target)
        out = [(arm.body[0], walk.frames, None) for arm in node.when_arms]
        if not any(arm.is_other for arm in node.when_arms):
            out.extend(_frame_filter(walk, followers, cfg, unroll, enter_target))
        return out

    if kind == "perform":
        enter = enter_target(node)
        bypasses = [t for t in succs if cfg.edge_label(node, t)[0] != ENTER]
        if enter is None:
            return _frame_filter(walk, bypasses, cfg, unroll, enter_target)
        if len(walk.frames) >= MAX_PERFORM_DEPTH:
            raise PathBudgetExceeded(0)
        entered = walk.frames + [(node, 1)]
        if node.condition is None:
            return [(enter, entered, None)]
        verdict = evaluate_condition(node.condition, walk.env)
        if verdict is True:
            stats["forced"] += 1
            return [(t, walk.frames, None) for t in bypasses]
        if verdict is False:
            stats["forced"] += 1
            return [(enter, entered, None)]
        out = [(enter, entered, None)]
        out.extend((t, walk.frames, None) for t in bypasses)
        return out

    return _frame_filter(walk, succs, cfg, unroll, enter_target)


def _frame_filter(walk: _Walk, targets: list[Statement], cfg: Cfg, unroll: int,
                  enter_target) -> list[tuple[Statement, list, Optional[tuple]]]:
    """Apply perform-return and GO TO bookkeeping to plain successor sets."""
    node = walk.node
    out: list[tuple[Statement, list, Optional[tuple]]] = []
    if walk.frames:
        site, count = walk.frames[-1]
        returns = [t for t in targets if cfg.edge_label(node, t) == (RETURN, site)]
        if returns:
            popped = walk.frames[:-1]
            if site.condition is None:
                return [(t, popped, None) for t in returns]
            verdict = evaluate_condition(site.condition, walk.env)
            may_exit = verdict is not False or count >= unroll
            may_iterate = verdict is not True and count < unroll
            if may_exit:
                out.extend((t, popped, None) for t in returns)
            if may_iterate:
                re_entry = enter_target(site)
                if re_entry is not None:
                    out.append((re_entry, popped + [(site, count + 1)], None))
            return out
    for t in targets:
        label, _ = cfg.edge_label(node, t)
        if label == GOTO:
            key = (id(node), id(t))
            if walk.goto_hops.get(key, 0) >= max(unroll, 1):
                continue  # cut the loop: the truncated prefix is still a valid path
            out.append((t, walk.frames, key))
        else:
            out.append((t, walk.frames, None))
    return out
