import json
import subprocess
import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
CORPUS_DIR = TESTS_DIR / "corpus"
FIXTURES_DIR = TESTS_DIR / "fixtures"
CORPUS_CONFIG = CORPUS_DIR / "config.json"
FIXTURES_CONFIG = FIXTURES_DIR / "config.json"


@pytest.fixture(scope="session")
def corpus_ws():
    from cobrex.workspace import WorkspaceConfig, load_workspace
    return load_workspace(WorkspaceConfig.from_file(CORPUS_CONFIG))


@pytest.fixture(scope="session")
def fixtures_ws():
    from cobrex.workspace import WorkspaceConfig, load_workspace
    return load_workspace(WorkspaceConfig.from_file(FIXTURES_CONFIG))


@pytest.fixture(scope="session")
def manifest():
    return json.loads((CORPUS_DIR / "manifest.json").read_text())


def run_cli(*argv: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "cobrex.cli", *argv],
        capture_output=True, text=True, cwd=TESTS_DIR.parent)


def names(items) -> set[str]:
    """Qualified names of a DataItem collection or FieldRole list."""
    out = set()
    for x in items:
        out.add(x.qualified_name if hasattr(x, "qualified_name") else x)
    return out


def req_names(sig) -> set[str]:
    return {fr.item.name for fr in sig.requests}


def resp_names(sig) -> set[str]:
    return {fr.item.name for fr in sig.responses}


def unit_structure(unit):
    """Line-number-free fingerprint used by round-trip tests."""

    def item_struct(item):
        return (
            item.name, item.level, item.picture, item.section, item.occurs,
            item.redefines.name if item.redefines else None,
            item.byte_offset, item.byte_size, item.condition_values,
            tuple(item_struct(c) for c in item.children),
        )

    def stmt_struct(stmt):
        return (
            stmt.kind, stmt.text,
            tuple(sorted(i.qualified_name for i in stmt.reads)),
            tuple(sorted(i.qualified_name for i in stmt.writes)),
            tuple(stmt_struct(s) for s in stmt.then_body),
            tuple(stmt_struct(s) for s in stmt.else_body),
            tuple((arm.values, tuple(stmt_struct(s) for s in arm.body))
                  for arm in stmt.when_arms),
        )

    return (
        unit.program_id,
        tuple(item_struct(i) for i in unit.data_items),
        tuple(p.name for p in unit.using_params),
        tuple((p.name, tuple(stmt_struct(s) for s in p.statements))
              for p in unit.paragraphs),
    )
