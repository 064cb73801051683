"""Refactor reports, copybook slices, caller mappings."""

import pytest

from cobrex.errors import BindingMismatch, EmptySlice
from cobrex.frontend import parse_copybook, parse_source
from cobrex.graphs import make_region
from cobrex.refactor import caller_mapping_report, refactor_report, slice_copybook
from cobrex.signature import (
    build_use_def_sets,
    flow_insensitive_signature,
    flow_sensitive_signature,
    interprocedural_signature,
)


def signature_for(ws, program, a, b, flow="fi"):
    unit = ws.unit(program)
    region = make_region(unit, a, b)
    return region, interprocedural_signature(
        region, ws.units, ws.call_graph, flow=flow, with_call_chain=False,
        cfgs=ws.cfgs)


class TestRefactorReport:
    def test_terminal_commands_guarded(self, corpus_ws):
        region, sig = signature_for(corpus_ws, "HOUSTRN1", 11, 21)
        report = refactor_report(region, sig)
        guards = [s for s in report if s.kind == "guard_terminal_command"]
        kinds_at = {(s.line, s.detail["statement"].split()[0]) for s in guards}
        # RECEIVE, DISPLAY inside the sanity IF, and the closing SEND
        assert any(text == "EXEC" for _, text in kinds_at)
        assert any(text == "DISPLAY" for _, text in kinds_at)
        assert len(guards) == 3

    def test_sanity_check_candidate(self, corpus_ws):
        region, sig = signature_for(corpus_ws, "HOUSTRN1", 11, 21)
        report = refactor_report(region, sig)
        sanity = [s for s in report if s.kind == "remove_sanity_check_candidate"]
        assert len(sanity) == 1
        assert sanity[0].line == 12

    def test_narrow_sql_lists_droppable_hosts(self, corpus_ws):
        # derived by set difference: responses filtered to the issue date
        # leave the expiry/premium hosts droppable
        unit = corpus_ws.unit("POLYDB01")
        region = make_region(unit, 25, 33)
        cfg = corpus_ws.cfg("POLYDB01")
        sets = build_use_def_sets(region.statements)
        items = {i.name: i for i in unit.all_items()}
        sig = flow_sensitive_signature(region, cfg, sets,
                                       post_context={items["CA-ISSUE-DATE"]})
        report = refactor_report(region, sig)
        narrows = [s for s in report if s.kind == "narrow_sql"]
        assert len(narrows) == 1
        droppable = {(d["column"], d["host"]) for d in narrows[0].detail["droppable"]}
        assert droppable == {
            ("EXPIRY_DATE", "COMM-AREA.CA-POLICY-DATA.CA-EXPIRY-DATE"),
            ("PREMIUM_AMT", "COMM-AREA.CA-POLICY-DATA.CA-PREMIUM-AMT"),
        }

    def test_narrow_sql_never_lists_response_hosts(self, corpus_ws):
        region, sig = signature_for(corpus_ws, "POLYDB01", 25, 33)
        responses = {fr.qualified_name for fr in sig.responses}
        for s in refactor_report(region, sig):
            if s.kind == "narrow_sql":
                assert all(d["host"] not in responses for d in s.detail["droppable"])

    def test_quiet_region_empty_report(self, corpus_ws):
        region, sig = signature_for(corpus_ws, "POLYTRN1", 14, 17)
        assert refactor_report(region, sig) == []

    def test_report_sorted(self, corpus_ws):
        region, sig = signature_for(corpus_ws, "HOUSTRN1", 11, 21)
        report = refactor_report(region, sig)
        keys = [(s.line, s.kind) for s in report]
        assert keys == sorted(keys)


class TestSliceCopybook:
    def test_inquiry_request_slice_two_fields(self, corpus_ws):
        region, sig = signature_for(corpus_ws, "POLYTRN1", 14, 17)
        unit = corpus_ws.unit("POLYTRN1")
        map_root = [i for i in unit.data_items if i.name == "POLMAP-AREA"]
        req_text, resp_text = slice_copybook(map_root, sig)
        assert resp_text is None  # responses all live in the commarea
        roots = parse_copybook(req_text)
        leaves = [i for i in roots[0].descendants() if i.picture]
        assert sorted(l.name for l in leaves) == ["ENP1CNO", "ENP1PNO"]
        assert roots[0].name == "POLMAP-AREA"
        assert roots[0].level == 1 and all(l.level == 5 for l in leaves)

    def test_slice_reparses_and_matches_fields(self, corpus_ws):
        region, sig = signature_for(corpus_ws, "POLYDB01", 25, 33)
        unit = corpus_ws.unit("POLYDB01")
        req_text, resp_text = slice_copybook(unit.data_items, sig)
        for text, fields in ((req_text, sig.requests), (resp_text, sig.responses)):
            roots = parse_copybook(text)
            sliced = {i.name for r in roots for i in [r, *r.descendants()] if i.picture}
            expected = {fr.item.name for fr in fields if fr.item.picture}
            assert sliced == expected

    def test_single_root_elementary_slice(self):
        unit = parse_source(
            "IDENTIFICATION DIVISION.\nPROGRAM-ID. ONE.\n"
            "DATA DIVISION.\nWORKING-STORAGE SECTION.\n01 LONE PIC X(3).\n"
            "PROCEDURE DIVISION.\nMAIN.\n    MOVE 'A' TO LONE.\n    GOBACK.\n")
        region = make_region(unit, 8, 8)
        sets = build_use_def_sets(region.statements)
        sig = flow_insensitive_signature(region, sets)
        req_text, resp_text = slice_copybook(unit.data_items, sig)
        assert req_text is None
        assert resp_text == "01 LONE PIC X(3).\n"

    def test_empty_slice_raises(self, corpus_ws):
        region, sig = signature_for(corpus_ws, "POLYTRN1", 14, 17)
        unit = corpus_ws.unit("CYCA")
        with pytest.raises(EmptySlice):
            slice_copybook(unit.data_items, sig)

    def test_level_ladder_renumbering(self, corpus_ws):
        region, sig = signature_for(corpus_ws, "POLYDB01", 25, 33)
        unit = corpus_ws.unit("POLYDB01")
        _, resp_text = slice_copybook(unit.data_items, sig)
        levels = [int(line.strip().split()[0]) for line in resp_text.splitlines()]
        for lvl in levels:
            assert lvl in (1, 5, 10)


class TestCallerMapping:
    def test_positional_mapping(self, corpus_ws):
        unit = corpus_ws.unit("POLYSRV1")
        region = make_region(unit, 9, 14)
        sig = interprocedural_signature(region, corpus_ws.units, corpus_ws.call_graph,
                                        flow="fi", with_call_chain=True,
                                        cfgs=corpus_ws.cfgs)
        site = next(s for s in corpus_ws.unit("POLYTRN1").all_statements()
                    if s.kind == "cics_link")
        suggestion = caller_mapping_report(site, sig, unit, "POLYTRN1")
        detail = suggestion.detail
        assert suggestion.program == "POLYTRN1"
        req_pairs = {(d["argument"], d["field"]) for d in detail["requests"]}
        assert ("COMM-AREA.CA-REQUEST-ID", "CA-REQUEST-ID") in req_pairs
        assert detail["rest"]["method"] == sig.http_method
        assert "CA-REQUEST-ID" in detail["rest"]["body_fields"]

    def test_empty_signature_valid_mapping(self, corpus_ws):
        unit = corpus_ws.unit("POLYSRV1")
        region = make_region(unit, 14, 14)  # just the GOBACK
        sets = build_use_def_sets(region.statements)
        sig = flow_insensitive_signature(region, sets)
        site = next(s for s in corpus_ws.unit("CUSTTRN1").all_statements()
                    if s.kind == "cics_link")
        suggestion = caller_mapping_report(site, sig, unit, "CUSTTRN1")
        assert suggestion.detail["requests"] == []
        assert suggestion.detail["responses"] == []

    def test_size_mismatch_prefix_and_degraded(self):
        callee = parse_source(
            "IDENTIFICATION DIVISION.\nPROGRAM-ID. CALLEE.\n"
            "DATA DIVISION.\nLINKAGE SECTION.\n"
            "01 P-REC.\n    05 P-HEAD PIC X(4).\n    05 P-TAIL PIC X(4).\n"
            "PROCEDURE DIVISION USING P-REC.\nMAIN.\n"
            "    DISPLAY P-HEAD.\n    DISPLAY P-TAIL.\n    GOBACK.\n")
        caller = parse_source(
            "IDENTIFICATION DIVISION.\nPROGRAM-ID. CALLER.\n"
            "DATA DIVISION.\nWORKING-STORAGE SECTION.\n01 A-SHORT PIC X(4).\n"
            "PROCEDURE DIVISION.\nMAIN.\n"
            "    CALL 'CALLEE' USING A-SHORT.\n    GOBACK.\n")
        region = make_region(callee, 10, 11)
        sets = build_use_def_sets(region.statements)
        sig = flow_insensitive_signature(region, sets)
        site = next(s for s in caller.all_statements() if s.kind == "call")
        suggestion = caller_mapping_report(site, sig, callee, "CALLER")
        # byte rule: P-HEAD [0,4) binds whole A-SHORT; P-TAIL [4,8) is out of range
        req_pairs = {(d["field"], d["argument"]) for d in suggestion.detail["requests"]}
        assert req_pairs == {("P-HEAD", "A-SHORT")}
        assert suggestion.detail["degraded"] is True

    def test_binding_mismatch(self, corpus_ws):
        unit = corpus_ws.unit("POLYSRV1")
        region = make_region(unit, 9, 14)
        sig = interprocedural_signature(region, corpus_ws.units, corpus_ws.call_graph,
                                        flow="fi", with_call_chain=False,
                                        cfgs=corpus_ws.cfgs)
        bare_call = parse_source(
            "IDENTIFICATION DIVISION.\nPROGRAM-ID. NOARGS.\n"
            "PROCEDURE DIVISION.\nMAIN.\n    CALL 'POLYSRV1'.\n    GOBACK.\n")
        site = next(s for s in bare_call.all_statements() if s.kind == "call")
        with pytest.raises(BindingMismatch):
            caller_mapping_report(site, sig, unit, "NOARGS")
