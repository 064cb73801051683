"""Workspace loading: JSON config, source/copybook/map directories, tables.

Paths in a config file resolve relative to the file's own directory.  Source
files are parsed in sorted order and screen maps are applied to the CICS
RECEIVE/SEND classification before control-flow graphs are built, so a loaded
workspace is fully analyzable and deterministic.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import CobrexError, MissingCopybook
from .frontend.model import DataDictionary, ScreenField, SourceUnit
from .frontend.parser import parse_source
from .frontend.rwsets import apply_read_write_sets
from .frontend.screens import parse_screen_map
from .graphs import CallGraph, Cfg, CodeRegion, build_call_graph, build_cfg, make_region

SOURCE_SUFFIXES = (".cbl", ".cob", ".cobol")


@dataclass
class Defaults:
    flow: str = "fs"
    call_chain: bool = False
    ps_bound: int = 4096
    include_sqlcode: bool = False


@dataclass
class WorkspaceConfig:
    source_dirs: list[Path]
    copybook_dirs: list[Path] = field(default_factory=list)
    screen_maps: list[Path] = field(default_factory=list)
    transaction_table: Optional[Path] = None
    partition_file: Optional[Path] = None
    defaults: Defaults = field(default_factory=Defaults)

    @classmethod
    def from_file(cls, path: str | Path) -> "WorkspaceConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CobrexError(f"cannot read config {path}: {exc}") from exc
        base = path.parent

        def resolve_list(key: str) -> list[Path]:
            return [base / p for p in data.get(key, [])]

        def resolve_one(key: str) -> Optional[Path]:
            return base / data[key] if data.get(key) else None

        defaults = Defaults(**data.get("defaults", {}))
        config = cls(
            source_dirs=resolve_list("source_dirs"),
            copybook_dirs=resolve_list("copybook_dirs"),
            screen_maps=resolve_list("screen_maps"),
            transaction_table=resolve_one("transaction_table"),
            partition_file=resolve_one("partition_file"),
            defaults=defaults,
        )
        config.validate()
        return config

    def validate(self) -> None:
        if not self.source_dirs:
            raise CobrexError("config needs at least one source dir")
        for p in [*self.source_dirs, *self.copybook_dirs, *self.screen_maps,
                  self.transaction_table, self.partition_file]:
            if p is not None and not Path(p).exists():
                raise CobrexError(f"configured path does not exist: {p}")


def _copybook_resolver(dirs: list[Path]):
    index: dict[str, Path] = {}
    for d in dirs:
        for f in sorted(Path(d).iterdir()):
            if f.suffix.lower() == ".cpy":
                index.setdefault(f.stem.upper(), f)

    def resolve(name: str) -> str:
        f = index.get(name.upper())
        if f is None:
            raise MissingCopybook(name)
        return f.read_text()

    return resolve


class Workspace:
    def __init__(self, config: WorkspaceConfig):
        self.config = config
        self.units: dict[str, SourceUnit] = {}
        self.dictionaries: dict[str, DataDictionary] = {}
        self.cfgs: dict[str, Cfg] = {}
        self.screen_maps: dict[str, list[ScreenField]] = {}
        self.call_graph: CallGraph = CallGraph()
        self.transactions: list[tuple[str, str]] = []
        self.partitions: dict[str, str] = {}

    def unit(self, program: str) -> SourceUnit:
        try:
            return self.units[program.upper()]
        except KeyError:
            raise CobrexError(f"program {program} is not in the workspace") from None

    def cfg(self, program: str) -> Cfg:
        return self.cfgs[program.upper()]

    def region(self, selector: str) -> CodeRegion:
        m = re.match(r"^([A-Za-z0-9-]+):(\d+)-(\d+)$", selector)
        if not m:
            raise CobrexError(f"bad region selector {selector!r}; expected PROG:start-end")
        unit = self.unit(m.group(1))
        return make_region(unit, int(m.group(2)), int(m.group(3)))


def load_workspace(config: WorkspaceConfig) -> Workspace:
    ws = Workspace(config)
    resolver = _copybook_resolver(config.copybook_dirs)

    paths = []
    for d in config.source_dirs:
        paths.extend(f for f in sorted(Path(d).iterdir())
                     if f.suffix.lower() in SOURCE_SUFFIXES)
    for f in paths:
        unit = parse_source(f.read_text(), resolver)
        if unit.program_id in ws.units:
            raise CobrexError(f"duplicate PROGRAM-ID {unit.program_id} in {f}")
        ws.units[unit.program_id] = unit

    for map_path in config.screen_maps:
        ws.screen_maps[Path(map_path).stem.upper()] = parse_screen_map(Path(map_path).read_text())

    for program, unit in ws.units.items():
        dictionary = DataDictionary(unit)
        ws.dictionaries[program] = dictionary
        apply_read_write_sets(unit, dictionary, ws.screen_maps)
        ws.cfgs[program] = build_cfg(unit)

    ws.call_graph = build_call_graph(ws.units.values())

    if config.transaction_table is not None:
        ws.transactions = _parse_pairs(Path(config.transaction_table), "transaction table")
    if config.partition_file is not None:
        ws.partitions = dict(_parse_pairs(Path(config.partition_file), "partition file"))
    return ws


def _parse_pairs(path: Path, what: str) -> list[tuple[str, str]]:
    pairs = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise CobrexError(f"{what} {path} line {lineno}: expected two columns")
        pairs.append((parts[0].upper(), parts[1].upper()))
    return pairs
