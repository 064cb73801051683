"""CFG construction, post-order, code regions, and call-graph tests."""

import itertools

import pytest

from cobrex.errors import InvalidRegion, UnknownParagraph
from cobrex.frontend import parse_source
from cobrex.graphs import (
    build_call_graph,
    build_cfg,
    call_graph_to_dot,
    cfg_to_dot,
    make_region,
    post_order,
    region_exits,
)


def tiny(body: str, data: str = "01 A PIC X.\n01 B PIC X.\n01 C PIC X.",
         program: str = "G1") -> str:
    return ("IDENTIFICATION DIVISION.\n"
            f"PROGRAM-ID. {program}.\n"
            "DATA DIVISION.\nWORKING-STORAGE SECTION.\n"
            f"{data}\n"
            "PROCEDURE DIVISION.\nMAIN.\n"
            + "\n".join("    " + l for l in body.strip("\n").splitlines())
            + "\n")


def edge_lines(cfg):
    return sorted((a.line, b.line) for a in cfg.nodes for b in cfg.succ(a))


class TestBuildCfg:
    def test_straight_line_chain(self):
        cfg = build_cfg(parse_source(tiny("MOVE A TO B.\nMOVE B TO C.\nGOBACK.")))
        assert edge_lines(cfg) == [(10, 11), (11, 12)]
        assert {s.line for s in cfg.exits} == {12}

    def test_if_diamond(self):
        text = tiny("IF A = B\n    MOVE A TO C\nELSE\n    MOVE B TO C\nEND-IF.\nGOBACK.")
        cfg = build_cfg(parse_source(text))
        if_stmt = next(s for s in cfg.nodes if s.kind == "if")
        assert len(cfg.succ(if_stmt)) == 2
        join = next(s for s in cfg.nodes if s.kind == "goback")
        for branch in cfg.succ(if_stmt):
            assert cfg.succ(branch) == [join]

    def test_perform_splice_exact_edges(self, fixtures_ws):
        # hand-enumerated for PERFDEMO: PERFORM(9) MOVE(10) GOBACK(11) MOVE(13)
        # enter 9->13, return 13->10, sequence 10->11; no 9->10 fall-through
        cfg = fixtures_ws.cfg("PERFDEMO")
        assert edge_lines(cfg) == [(9, 13), (10, 11), (13, 10)]
        assert {s.line for s in cfg.exits} == {11}

    def test_perform_until_bypass(self, fixtures_ws):
        cfg = fixtures_ws.cfg("LOOPY")
        perform = next(s for s in cfg.nodes if s.kind == "perform")
        succ_lines = sorted(s.line for s in cfg.succ(perform))
        assert succ_lines == [10, 12]  # bypass to GOBACK and enter to body

    def test_unknown_paragraph(self):
        with pytest.raises(UnknownParagraph):
            build_cfg(parse_source(tiny("PERFORM NO-SUCH.\nGOBACK.")))
        with pytest.raises(UnknownParagraph):
            build_cfg(parse_source(tiny("GO TO NOWHERE.\nGOBACK.")))

    def test_goto_edge(self):
        text = tiny("MOVE A TO B.\nGO TO DONE.\nMOVE B TO C.\nGOBACK.") + \
            "DONE.\n    GOBACK.\n"
        cfg = build_cfg(parse_source(text))
        goto = next(s for s in cfg.nodes if s.kind == "goto")
        assert [s.line for s in cfg.succ(goto)] == [15]
        unreachable = {s.line for s in cfg.unreachable}
        assert 12 in unreachable  # MOVE B TO C sits behind the jump

    def test_edge_count_sanity_no_branches(self, corpus_ws, fixtures_ws):
        for ws in (corpus_ws, fixtures_ws):
            for unit in ws.units.values():
                if any(s.kind in ("if", "evaluate_when", "perform", "goto")
                       for s in unit.all_statements()):
                    continue
                cfg = ws.cfg(unit.program_id)
                assert cfg.edge_count() == len(cfg.nodes) - 1

    def test_every_statement_is_one_node(self, corpus_ws):
        for unit in corpus_ws.units.values():
            cfg = corpus_ws.cfg(unit.program_id)
            assert cfg.nodes == unit.all_statements()
            assert len(set(map(id, cfg.nodes))) == len(cfg.nodes)

    def test_predecessors_invert_successors(self, corpus_ws):
        for program, cfg in corpus_ws.cfgs.items():
            for a in cfg.nodes:
                for b in cfg.succ(a):
                    assert a in cfg.pred(b)
            for b in cfg.nodes:
                for a in cfg.pred(b):
                    assert b in cfg.succ(a)

    def test_exits_have_no_successors(self, corpus_ws):
        for cfg in corpus_ws.cfgs.values():
            for node in cfg.nodes:
                if node in cfg.exits:
                    assert not cfg.succ(node)
                else:
                    assert cfg.succ(node)


class TestPostOrder:
    def test_chain(self):
        cfg = build_cfg(parse_source(tiny("MOVE A TO B.\nMOVE B TO C.\nMOVE C TO A.")))
        order = [s.line for s in post_order(cfg)]
        assert order == [12, 11, 10]

    def test_diamond_join_before_arms_entry_last(self):
        text = tiny("IF A = B\n    MOVE A TO C\nELSE\n    MOVE B TO C\nEND-IF.\nGOBACK.")
        cfg = build_cfg(parse_source(text))
        order = post_order(cfg)
        kinds = [s.kind for s in order]
        assert kinds[-1] == "if"
        join_pos = next(i for i, s in enumerate(order) if s.kind == "goback")
        arm_positions = [i for i, s in enumerate(order) if s.kind == "move"]
        assert all(join_pos < p for p in arm_positions)

    def test_loop_fixture_is_permutation(self, fixtures_ws):
        cfg = fixtures_ws.cfg("LOOPY")
        order = post_order(cfg)
        reachable = [s for s in cfg.nodes if s not in cfg.unreachable]
        assert sorted(map(id, order)) == sorted(map(id, reachable))
        assert len(order) == len(set(map(id, order)))


class TestRegions:
    def test_statements_are_exact_line_filter(self, corpus_ws):
        unit = corpus_ws.unit("POLYTRN1")
        region = make_region(unit, 14, 17)
        expected = [s for s in unit.all_statements() if 14 <= s.line <= 17]
        assert region.statements == expected
        assert region.entry.line == 14

    def test_empty_region_rejected(self, corpus_ws):
        unit = corpus_ws.unit("POLYSRV1")
        with pytest.raises(InvalidRegion):
            make_region(unit, 15, 16)
        with pytest.raises(InvalidRegion):
            make_region(unit, 12, 9)

    def test_region_exits(self, corpus_ws):
        unit = corpus_ws.unit("POLYTRN1")
        cfg = corpus_ws.cfg("POLYTRN1")
        region = make_region(unit, 14, 17)
        exits = region_exits(region, cfg)
        assert {s.line for s in exits} == {17}


class TestCallGraph:
    def test_chain_two_edges_no_cycles(self):
        a = parse_source(tiny("CALL 'B1'.\nGOBACK.", program="A1"))
        b = parse_source(tiny("CALL 'C1'.\nGOBACK.", program="B1"))
        c = parse_source(tiny("GOBACK.", program="C1"))
        graph = build_call_graph([a, b, c])
        assert len(graph.edges) == 2
        assert not graph.cycles

    def test_mutual_recursion_is_one_scc(self):
        a = parse_source(tiny("CALL 'B1'.\nGOBACK.", program="A1"))
        b = parse_source(tiny("CALL 'A1'.\nGOBACK.", program="B1"))
        graph = build_call_graph([a, b])
        assert graph.cycles == {frozenset({"A1", "B1"})}

    def test_self_loop_is_cycle(self):
        a = parse_source(tiny("CALL 'A1'.\nGOBACK.", program="A1"))
        graph = build_call_graph([a])
        assert graph.cycles == {frozenset({"A1"})}

    def test_corpus_transaction_chain(self, corpus_ws):
        # the transaction program links the router, which calls the data layer
        graph = corpus_ws.call_graph
        pairs = {(caller, callee) for caller, _, callee in graph.edges}
        assert ("POLYTRN1", "POLYSRV1") in pairs
        assert ("POLYSRV1", "POLYDB01") in pairs
        assert graph.cycles == {frozenset({"CYCA", "CYCB"})}

    def test_dynamic_call_recorded_unresolved(self):
        text = tiny("MOVE A TO B.\nCALL B.\nGOBACK.")
        graph = build_call_graph([parse_source(text)])
        assert not graph.edges
        assert len(graph.unresolved) == 1

    def test_scc_matches_bruteforce_on_small_workspaces(self):
        # every digraph over up to 4 nodes, cross-checked against transitive closure
        names = ["P1", "P2", "P3", "P4"]
        rng_edges = [(i, j) for i in range(4) for j in range(4)]
        import random
        rnd = random.Random(7)
        for _ in range(60):
            chosen = {e for e in rng_edges if rnd.random() < 0.3}
            units = []
            for i, name in enumerate(names):
                calls = "\n".join(f"CALL '{names[j]}'." for (a, j) in sorted(chosen) if a == i)
                body = (calls + "\nGOBACK.") if calls else "GOBACK."
                units.append(parse_source(tiny(body, program=name)))
            graph = build_call_graph(units)
            reach = {i: {i} for i in range(4)}
            for _ in range(4):
                for (a, b) in chosen:
                    for src in range(4):
                        if a in reach[src]:
                            reach[src] |= reach[b] | {b}
            cyclic = set()
            for i, j in itertools.permutations(range(4), 2):
                if j in reach[i] and i in reach[j]:
                    cyclic.add(names[i])
                    cyclic.add(names[j])
            for (a, b) in chosen:
                if a == b:
                    cyclic.add(names[a])
            in_scc = set().union(*graph.cycles) if graph.cycles else set()
            assert in_scc == cyclic, (chosen, graph.cycles)


class TestDot:
    def test_cfg_dot(self, fixtures_ws):
        dot = cfg_to_dot(fixtures_ws.cfg("DEMO1"))
        assert dot.startswith('digraph "DEMO1"') and "->" in dot

    def test_call_graph_dot(self, corpus_ws):
        dot = call_graph_to_dot(corpus_ws.call_graph)
        assert '"POLYTRN1" -> "POLYSRV1"' in dot
