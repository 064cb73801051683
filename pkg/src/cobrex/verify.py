"""Property verification over generated programs.

For each seed a program is generated, analyzed by every variant, and compared
against the execution-semantics reference:

* soundness: flow-sensitive and flow-insensitive requests/responses are
  supersets of the per-path unions;
* precision: flow-sensitive requests are a subset of flow-insensitive
  requests, and the two variants agree on responses;
* path-sensitive refinement: requests/responses within the flow-sensitive
  sets while still covering the reference;
* exactness: on loop-free programs whose branches all depend on inputs,
  flow-sensitive requests equal the reference union;
* fixpoint budget: the liveness sweep count stays within items x statements + 1.

``corrupt_kill`` is a test hook that deliberately over-kills so the harness
can prove it detects violations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import PathBudgetExceeded
from .frontend.model import DataItem, SourceUnit
from .frontend.parser import render_source
from .graphs import Cfg, build_cfg, make_region
from .oracle import enumerate_paths, oracle_signature, random_program
from .signature.analyses import (
    flow_insensitive_signature,
    flow_sensitive_signature,
    path_sensitive_signature,
)
from .signature.model import UseDefSets


@dataclass
class VerifySummary:
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    violations: list[str] = field(default_factory=list)
    counterexample: Optional[str] = None
    elapsed_seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.failed == 0


def _names(items: set[DataItem]) -> str:
    return "{" + ", ".join(sorted(i.qualified_name for i in items)) + "}"


class _CorruptedSets(UseDefSets):
    """Kills every item everywhere: breaks the under-approximation discipline."""

    def __init__(self, statements, universe: frozenset[DataItem]):
        super().__init__(statements)
        for stmt in list(self._kill):
            self._kill[stmt] = universe


def check_unit(unit: SourceUnit, cfg: Optional[Cfg] = None, unroll: int = 3,
               budget: int = 4096, corrupt_kill: bool = False,
               backend: Optional[str] = None) -> tuple[list[str], bool]:
    """Violation messages for one program; bool reports a skipped PS/oracle check."""
    cfg = cfg or build_cfg(unit)
    stmts = unit.all_statements()
    region = make_region(unit, min(s.line for s in stmts), max(s.line for s in stmts))
    honest_sets = UseDefSets(region.statements)
    sets = honest_sets
    if corrupt_kill:
        universe = frozenset(i for i in unit.all_items() if not i.is_condition_name)
        sets = _CorruptedSets(region.statements, universe)

    problems: list[str] = []
    skipped = False

    stats: dict = {}
    try:
        paths = enumerate_paths(region, cfg, bound=unroll, budget=budget, stats=stats)
    except PathBudgetExceeded:
        return problems, True
    # the reference always evaluates the honest per-statement effects; the
    # corrupt_kill hook must only poison the analyses under test
    ref = oracle_signature(region, paths, honest_sets)

    fi = flow_insensitive_signature(region, sets)
    fs = flow_sensitive_signature(region, cfg, sets, backend=backend)
    fi_req, fi_resp = fi.request_items(), fi.response_items()
    fs_req, fs_resp = fs.request_items(), fs.response_items()

    if not fs_req >= ref.union_req:
        problems.append(f"soundness: FS requests {_names(fs_req)} miss "
                        f"{_names(ref.union_req - fs_req)}")
    if not fi_req >= ref.union_req:
        problems.append(f"soundness: FI requests {_names(fi_req)} miss "
                        f"{_names(ref.union_req - fi_req)}")
    if not fs_resp >= ref.union_resp:
        problems.append(f"soundness: FS responses {_names(fs_resp)} miss "
                        f"{_names(ref.union_resp - fs_resp)}")
    if fs_resp != fi_resp:
        problems.append(f"precision: FS responses {_names(fs_resp)} differ from "
                        f"FI responses {_names(fi_resp)}")
    if not fs_req <= fi_req:
        problems.append(f"precision: FS requests {_names(fs_req)} exceed "
                        f"FI requests {_names(fi_req)}")

    n_stmts = len(region.statements)
    n_items = len({i for s in region.statements for i in sets.gen(s) | sets.kill(s)})
    if fs.stats.get("fs_iterations", 0) > n_items * n_stmts + 1:
        problems.append(
            f"fixpoint: {fs.stats['fs_iterations']} sweeps over "
            f"{n_stmts} statements x {n_items} items")

    try:
        ps = path_sensitive_signature(region, cfg, sets, bound=budget, unroll=unroll)
        ps_req, ps_resp = ps.request_items(), ps.response_items()
        if not ps_req <= fs_req:
            problems.append(f"refinement: PS requests {_names(ps_req)} exceed FS")
        if not ps_resp <= fs_resp:
            problems.append(f"refinement: PS responses {_names(ps_resp)} exceed FS")
        if not ps_req >= ref.union_req:
            problems.append(f"refinement: PS requests {_names(ps_req)} miss "
                            f"{_names(ref.union_req - ps_req)}")
        if not ps_resp >= ref.union_resp:
            problems.append(f"refinement: PS responses {_names(ps_resp)} miss "
                            f"{_names(ref.union_resp - ps_resp)}")
    except PathBudgetExceeded:
        skipped = True

    loop_free = not any(s.kind == "perform" and s.condition is not None
                        for s in region.statements)
    loop_free = loop_free and not any(s.kind == "goto" for s in region.statements)
    if loop_free and stats.get("forced_branches", 0) == 0 and not corrupt_kill:
        if fs_req != ref.union_req:
            problems.append(
                f"exactness: loop-free input-driven program, FS requests "
                f"{_names(fs_req)} vs reference {_names(ref.union_req)}")

    return problems, skipped


def run_verification(seeds: Iterable[int], size: int = 30, vars: int = 10,
                     unroll: int = 3, budget: int = 4096,
                     corrupt_kill: bool = False,
                     backend: Optional[str] = None) -> VerifySummary:
    summary = VerifySummary()
    start = time.perf_counter()
    for seed in seeds:
        unit = random_program(seed, size=size, vars=vars)
        problems, skipped = check_unit(unit, unroll=unroll, budget=budget,
                                       corrupt_kill=corrupt_kill, backend=backend)
        if skipped:
            summary.skipped += 1
        if problems:
            summary.failed += 1
            summary.violations.extend(f"seed {seed}: {p}" for p in problems)
            if summary.counterexample is None:
                summary.counterexample = render_source(unit)
        else:
            summary.passed += 1
    summary.elapsed_seconds = time.perf_counter() - start
    return summary
