"""Execution-semantics reference and generator tests."""

import pytest

from cobrex.errors import PathBudgetExceeded
from cobrex.frontend import parse_source, render_source
from cobrex.graphs import make_region
from cobrex.oracle import enumerate_paths, oracle_signature, random_program
from cobrex.signature import build_use_def_sets


def region_of(unit, a=None, b=None):
    stmts = unit.all_statements()
    a = a if a is not None else min(s.line for s in stmts)
    b = b if b is not None else max(s.line for s in stmts)
    return make_region(unit, a, b)


def qnames(items):
    return {i.name for i in items}


class TestEnumeratePaths:
    def test_straight_line_single_path(self, fixtures_ws):
        unit = fixtures_ws.unit("DEMO1")
        paths = enumerate_paths(region_of(unit, 10, 11), fixtures_ws.cfg("DEMO1"))
        assert len(paths) == 1
        assert [s.line for s in paths[0].statements] == [10, 11]

    def test_input_dependent_if_two_paths(self, fixtures_ws):
        unit = fixtures_ws.unit("DEMO3")
        paths = enumerate_paths(region_of(unit, 10, 14), fixtures_ws.cfg("DEMO3"))
        assert len(paths) == 2

    def test_loop_paths_bounded(self, fixtures_ws):
        unit = fixtures_ws.unit("LOOPY")
        paths = enumerate_paths(region_of(unit, 9, 13), fixtures_ws.cfg("LOOPY"), bound=3)
        assert len(paths) == 4  # 0..3 body replays
        lengths = sorted(len(p.statements) for p in paths)
        assert lengths == [2, 4, 6, 8]

    def test_forced_branch_single_path(self, fixtures_ws):
        unit = fixtures_ws.unit("DEMO2")
        stats = {}
        paths = enumerate_paths(region_of(unit, 13, 25), fixtures_ws.cfg("DEMO2"),
                                stats=stats)
        assert len(paths) == 1
        assert stats["forced_branches"] >= 2

    def test_budget_exceeded(self, fixtures_ws):
        unit = fixtures_ws.unit("DEMO3")
        with pytest.raises(PathBudgetExceeded):
            enumerate_paths(region_of(unit, 10, 14), fixtures_ws.cfg("DEMO3"), budget=1)


class TestOracleSignature:
    def test_single_move_path(self, fixtures_ws):
        unit = fixtures_ws.unit("DEMO1")
        region = region_of(unit, 10, 10)
        paths = enumerate_paths(region, fixtures_ws.cfg("DEMO1"))
        result = oracle_signature(region, paths, build_use_def_sets(region.statements))
        assert qnames(result.union_req) == {"A"}
        assert qnames(result.union_resp) == {"B"}

    def test_move_chain_single_path(self, fixtures_ws):
        unit = fixtures_ws.unit("DEMO1")
        region = region_of(unit, 10, 11)
        paths = enumerate_paths(region, fixtures_ws.cfg("DEMO1"))
        result = oracle_signature(region, paths, build_use_def_sets(region.statements))
        assert qnames(result.union_req) == {"A"}
        assert qnames(result.union_resp) == {"B", "C"}

    def test_if_union_over_two_paths(self, fixtures_ws):
        # hand enumeration: [IF, MOVE A->Y] and [IF, MOVE Y->A]
        unit = fixtures_ws.unit("DEMO3")
        region = region_of(unit, 10, 14)
        paths = enumerate_paths(region, fixtures_ws.cfg("DEMO3"))
        result = oracle_signature(region, paths, build_use_def_sets(region.statements))
        assert qnames(result.union_req) == {"X-NUM", "A", "Y-FLD"}
        assert qnames(result.union_resp) == {"Y-FLD", "A"}
        per_path = {tuple(s.line for s in ep.statements): (qnames(req), qnames(resp))
                    for ep, req, resp in result.per_path}
        assert per_path[(10, 11)] == ({"X-NUM", "A"}, {"Y-FLD"})
        assert per_path[(10, 13)] == ({"X-NUM", "Y-FLD"}, {"A"})

    def test_unions_accumulate_per_path(self, fixtures_ws):
        unit = fixtures_ws.unit("LOOPY")
        region = region_of(unit, 9, 13)
        paths = enumerate_paths(region, fixtures_ws.cfg("LOOPY"))
        result = oracle_signature(region, paths, build_use_def_sets(region.statements))
        union_req = set().union(*(req for _, req, _ in result.per_path))
        union_resp = set().union(*(resp for _, _, resp in result.per_path))
        assert union_req == result.union_req
        assert union_resp == result.union_resp


class TestRandomProgram:
    def test_seed_determinism(self):
        a = random_program(17)
        b = random_program(17)
        assert [t for _, t in a.source_lines] == [t for _, t in b.source_lines]

    def test_seed_zero_size_one_golden(self):
        unit = random_program(0, size=1)
        body = [t.strip() for _, t in unit.source_lines if t.strip().startswith("MOVE")]
        assert body == ["MOVE V06 TO V00."]
        assert len(unit.all_statements()) == 2  # the MOVE plus GOBACK

    @pytest.mark.parametrize("seed", range(0, 40))
    def test_generated_programs_parse(self, seed):
        unit = random_program(seed)
        assert unit.program_id.startswith("RAND")
        reparsed = parse_source(render_source(unit))
        assert reparsed.program_id == unit.program_id

    def test_size_budget_respected(self):
        for seed in range(30):
            unit = random_program(seed, size=30)
            assert len(unit.all_statements()) <= 30 + 1 + 6  # body + GOBACK + loop bodies

    def test_vars_budget_respected(self):
        for seed in range(20):
            unit = random_program(seed, vars=4)
            names = {i.name for i in unit.all_items()}
            assert len(names) <= 4
