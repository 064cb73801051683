"""End-to-end command-line tests (subprocess level, real exit codes)."""

import json

import pytest

from conftest import CORPUS_CONFIG, FIXTURES_CONFIG, run_cli

CORPUS = str(CORPUS_CONFIG)
FIXTURES = str(FIXTURES_CONFIG)


class TestIdentify:
    def test_matches_manifest(self, manifest):
        proc = run_cli("--config", CORPUS, "identify")
        assert proc.returncode == 0
        assert json.loads(proc.stdout) == manifest["candidates"]

    def test_empty_workspace(self, tmp_path):
        (tmp_path / "src").mkdir()
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"source_dirs": ["src"]}))
        proc = run_cli("--config", str(config), "identify")
        assert proc.returncode == 0
        assert json.loads(proc.stdout) == []

    def test_missing_copybook_exit_2(self, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        (src / "BROKEN.cbl").write_text(
            "IDENTIFICATION DIVISION.\nPROGRAM-ID. BROKEN.\n"
            "DATA DIVISION.\nWORKING-STORAGE SECTION.\nCOPY NOSUCH.\n"
            "PROCEDURE DIVISION.\nMAIN.\n    GOBACK.\n")
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"source_dirs": ["src"]}))
        proc = run_cli("--config", str(config), "identify")
        assert proc.returncode == 2
        assert "NOSUCH" in proc.stderr

    def test_dump_dot(self, tmp_path):
        out = tmp_path / "dots"
        proc = run_cli("--config", CORPUS, "identify", "--dump-dot", str(out))
        assert proc.returncode == 0
        assert (out / "POLYTRN1.dot").exists()
        assert (out / "callgraph.dot").exists()


class TestSignatureCommand:
    def request_names(self, doc):
        return [f["field"] for f in doc["requests"]]

    def response_names(self, doc):
        return [f["field"] for f in doc["responses"]]

    def test_fi_region(self):
        proc = run_cli("--config", FIXTURES, "signature",
                       "--region", "DEMO1:10-11", "--flow", "fi")
        assert proc.returncode == 0
        doc = json.loads(proc.stdout)
        assert self.request_names(doc) == ["A", "B"]
        assert self.response_names(doc) == ["B", "C"]

    def test_fs_region(self):
        proc = run_cli("--config", FIXTURES, "signature",
                       "--region", "DEMO1:10-11", "--flow", "fs")
        doc = json.loads(proc.stdout)
        assert self.request_names(doc) == ["A"]
        assert self.response_names(doc) == ["B", "C"]

    def test_ps_evaluate_fixture(self):
        proc = run_cli("--config", FIXTURES, "signature",
                       "--region", "DEMO2:13-25", "--flow", "ps")
        doc = json.loads(proc.stdout)
        assert self.request_names(doc) == ["A"]
        assert self.response_names(doc) == ["B", "C", "OPT-CODE"]

    def test_unresolved_selector_exit_3(self):
        proc = run_cli("--config", CORPUS, "signature", "--candidate", "nope")
        assert proc.returncode == 3
        proc = run_cli("--config", CORPUS, "signature", "--region", "GHOST:1-2")
        assert proc.returncode == 3

    def test_ps_budget_exit_4(self):
        proc = run_cli("--config", FIXTURES, "signature",
                       "--region", "DEMO3:10-14", "--flow", "ps", "--ps-bound", "1")
        assert proc.returncode == 4

    def test_stats_flag(self):
        proc = run_cli("--config", FIXTURES, "--stats", "signature",
                       "--region", "DEMO1:10-11", "--flow", "fi")
        doc = json.loads(proc.stdout)
        assert doc["stats"]["fi_passes"] == 1
        assert "wall_ms" in doc["stats"]

    def test_candidate_selector(self):
        proc = run_cli("--config", CORPUS, "signature",
                       "--candidate", "polytrn1-when-1-get", "--flow", "fi",
                       "--no-call-chain")
        doc = json.loads(proc.stdout)
        assert doc["api"]["seed_kind"] == "control_flow_block"
        assert self.request_names(doc) == ["ENP1CNO", "ENP1PNO"]

    def test_dynamic_query_fixed_signature(self):
        proc = run_cli("--config", CORPUS, "signature",
                       "--candidate", "polydb01-dynamic-query")
        doc = json.loads(proc.stdout)
        assert doc["variant"]["flow"] == "fixed"
        assert self.request_names(doc) == ["QUERY-TEXT"]
        assert self.response_names(doc) == ["RESULT-ROWS", "SQLCODE"]

    def test_include_sqlcode_flag(self):
        tail = ["signature", "--candidate", "polydb01-get-motor-info-data-get",
                "--flow", "fi"]
        without = json.loads(run_cli("--config", CORPUS, *tail).stdout)
        with_flag = json.loads(
            run_cli("--config", CORPUS, "--include-sqlcode", *tail).stdout)
        assert "SQLCODE" not in self.response_names(without)
        assert "SQLCODE" in self.response_names(with_flag)


class TestExport:
    def test_get_candidate_two_required_requests(self):
        proc = run_cli("--config", CORPUS, "export",
                       "--candidate", "polytrn1-when-1-get", "--flow", "fi")
        doc = json.loads(proc.stdout)
        item = doc["paths"]["/apis/polytrn1-when-1-get"]
        assert list(item) == ["get"]
        schema = item["get"]["requestBody"]["content"]["application/json"]["schema"]
        assert schema["required"] == ["ENP1CNO", "ENP1PNO"]
        assert schema["properties"]["ENP1CNO"]["maxLength"] == 10
        assert schema["properties"]["ENP1CNO"]["pattern"] == "^[0-9]*$"

    def test_optional_field_not_required(self):
        proc = run_cli("--config", FIXTURES, "export",
                       "--region", "DEMO1:10-11", "--flow", "fi")
        doc = json.loads(proc.stdout)
        schema = doc["paths"]["/apis/DEMO1:10-11"]["get"]["requestBody"][
            "content"]["application/json"]["schema"]
        assert "B" in schema["properties"]
        assert schema.get("required") == ["A"]  # B is optional, A certain

    def test_post_candidate_uses_post_key(self):
        proc = run_cli("--config", CORPUS, "export",
                       "--candidate", "polydb01-add-motor-info-data-post")
        doc = json.loads(proc.stdout)
        item = doc["paths"]["/apis/polydb01-add-motor-info-data-post"]
        assert list(item) == ["post"]

    def test_export_all(self, manifest):
        proc = run_cli("--config", CORPUS, "export", "--all")
        doc = json.loads(proc.stdout)
        assert len(doc["paths"]) == len(manifest["candidates"])

    def test_export_dynamic_query_uses_fixed_signature(self):
        proc = run_cli("--config", CORPUS, "export",
                       "--candidate", "polydb01-dynamic-query")
        doc = json.loads(proc.stdout)
        item = doc["paths"]["/apis/polydb01-dynamic-query"]["post"]
        schema = item["requestBody"]["content"]["application/json"]["schema"]
        assert schema["properties"]["QUERY-TEXT"]["maxLength"] == 1024


class TestRefactorCommand:
    def test_slices_written(self, tmp_path):
        out = tmp_path / "slices"
        proc = run_cli("--config", CORPUS, "refactor",
                       "--candidate", "polytrn1-when-1-get", "--flow", "fi",
                       "--out-dir", str(out))
        assert proc.returncode == 0
        doc = json.loads(proc.stdout)
        assert doc["slices"]["request"]
        req_file = out / "polytrn1-when-1-get-REQ.cpy"
        assert req_file.exists()
        assert req_file.read_text() == doc["slices"]["request"]

    def test_caller_mappings_on_callee_program(self):
        proc = run_cli("--config", CORPUS, "refactor",
                       "--candidate", "ipc-polysrv1-get", "--flow", "fi")
        doc = json.loads(proc.stdout)
        callers = {m["program"] for m in doc["caller_mappings"]}
        assert callers == {"POLYTRN1", "CUSTTRN1", "HOUSTRN1", "ENDWTRN1"}


class TestOracleCommand:
    def test_loop_paths(self):
        proc = run_cli("--config", FIXTURES, "oracle", "--region", "LOOPY:9-13")
        doc = json.loads(proc.stdout)
        assert doc["paths"] == 4
        assert doc["union_requests"] == ["ACC", "K-CNT"]


class TestVerifyCommand:
    def test_small_range_passes(self):
        proc = run_cli("verify", "--seeds", "0..25")
        assert proc.returncode == 0
        assert proc.stdout.strip() == "26 passed, 0 failed"

    def test_empty_range(self):
        proc = run_cli("verify", "--seeds", "5..4")
        assert proc.returncode == 0
        assert proc.stdout.strip() == "0 passed, 0 failed"

    def test_violation_exits_5(self, monkeypatch, capsys):
        from cobrex import cli
        from cobrex.verify import VerifySummary

        def fake(seeds, **kwargs):
            return VerifySummary(passed=0, failed=1,
                                 violations=["seed 0: soundness: broken"],
                                 counterexample="IDENTIFICATION DIVISION. ...")

        monkeypatch.setattr(cli, "run_verification", fake)
        code = cli.main(["verify", "--seeds", "0..0"])
        captured = capsys.readouterr()
        assert code == 5
        assert "0 passed, 1 failed" in captured.out
        assert "counterexample" in captured.err


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ("identify",),
        ("signature", "--candidate", "polytrn1-when-1-get"),
        ("signature", "--candidate", "txn-smp1-get", "--flow", "fs", "--call-chain"),
        ("export", "--all"),
        ("refactor", "--candidate", "polydb01-get-motor-info-data-get"),
    ])
    def test_byte_identical_runs(self, argv):
        first = run_cli("--config", CORPUS, *argv)
        second = run_cli("--config", CORPUS, *argv)
        assert first.returncode == second.returncode == 0
        assert first.stdout == second.stdout
