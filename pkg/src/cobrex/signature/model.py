"""Signature-side domain types: use/def sets, field roles, API signatures."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..frontend.model import DataItem, Statement
from ..graphs import CodeRegion

FLOWS = ("fi", "fs", "ps")
HTTP_METHODS = ("get", "post", "put", "delete")

CALL_KINDS = ("call", "cics_link")


@dataclass(frozen=True)
class Variant:
    flow: str
    call_chain: bool

    def as_json(self) -> dict:
        return {"flow": self.flow, "call_chain": self.call_chain}


CallEffects = dict[Statement, tuple[set[DataItem], set[DataItem]]]


class UseDefSets:
    """Per-statement ReqGen (reads), ReqKill and RespGen (writes).

    Kill and generation-of-responses are the same per-statement set, so only
    one map is stored.  Call sites get their effect injected per analysis
    variant through ``call_effects``; the default models the callee as a
    writer of the argument closure and a reader of nothing.
    """

    def __init__(self, statements: Iterable[Statement],
                 call_effects: Optional[CallEffects] = None):
        self.req_gen: dict[Statement, frozenset[DataItem]] = {}
        self._kill: dict[Statement, frozenset[DataItem]] = {}
        effects = call_effects or {}
        for stmt in statements:
            if stmt.kind in CALL_KINDS:
                reads, writes = effects.get(stmt, (set(), _argument_closure(stmt)))
                self.req_gen[stmt] = frozenset(reads)
                self._kill[stmt] = frozenset(writes)
            else:
                self.req_gen[stmt] = frozenset(stmt.reads)
                self._kill[stmt] = frozenset(stmt.writes)

    @property
    def req_kill(self) -> dict[Statement, frozenset[DataItem]]:
        return self._kill

    @property
    def resp_gen(self) -> dict[Statement, frozenset[DataItem]]:
        return self._kill

    def gen(self, stmt: Statement) -> frozenset[DataItem]:
        return self.req_gen.get(stmt, frozenset())

    def kill(self, stmt: Statement) -> frozenset[DataItem]:
        return self._kill.get(stmt, frozenset())


def _argument_closure(stmt: Statement) -> set[DataItem]:
    out: set[DataItem] = set()
    for arg in stmt.call_arguments:
        out |= arg.storage_closure()
    return out


def build_use_def_sets(statements: Iterable[Statement],
                       call_effects: Optional[CallEffects] = None) -> UseDefSets:
    return UseDefSets(statements, call_effects)


@dataclass
class FieldRole:
    item: DataItem
    qualified_name: str
    role: str              # request / response / both
    optional: bool
    section: str

    def as_json(self) -> dict:
        return {
            "field": self.item.name,
            "qualified": self.qualified_name,
            "section": self.section,
            "picture": self.item.picture,
            "optional": self.optional,
        }


@dataclass
class ApiSignature:
    region: CodeRegion
    variant: Variant
    requests: list[FieldRole]
    responses: list[FieldRole]
    http_method: str
    degraded: bool = False
    stats: dict = field(default_factory=dict)

    def request_items(self) -> set[DataItem]:
        return {fr.item for fr in self.requests}

    def response_items(self) -> set[DataItem]:
        return {fr.item for fr in self.responses}


def make_signature(region: CodeRegion, variant: Variant,
                   request_items: set[DataItem], response_items: set[DataItem],
                   http_method: str, degraded: bool = False,
                   stats: Optional[dict] = None) -> ApiSignature:
    """Assemble sorted FieldRole lists; every flag starts conservative (optional)."""
    both = request_items & response_items

    def roles(items: set[DataItem], role: str) -> list[FieldRole]:
        out = [FieldRole(item=i, qualified_name=i.qualified_name,
                         role="both" if i in both else role,
                         optional=True, section=i.section)
               for i in items]
        out.sort(key=lambda fr: fr.qualified_name)
        return out

    return ApiSignature(region=region, variant=variant,
                        requests=roles(request_items, "request"),
                        responses=roles(response_items, "response"),
                        http_method=http_method, degraded=degraded,
                        stats=dict(stats or {}))


def signature_to_json(signature: ApiSignature, name: str, seed_kind: str,
                      include_sqlcode: bool = False,
                      with_stats: bool = False) -> dict:
    """Canonical signature document; arrays sorted by qualified name."""

    def fields(frs: list[FieldRole]) -> list[dict]:
        out = []
        for fr in frs:
            if not include_sqlcode and fr.item.name == "SQLCODE":
                continue
            out.append(fr.as_json())
        return out

    doc = {
        "api": {
            "name": name,
            "seed_kind": seed_kind,
            "method": signature.http_method,
            "region": {
                "program": signature.region.program,
                "start_line": signature.region.start_line,
                "end_line": signature.region.end_line,
            },
        },
        "variant": signature.variant.as_json(),
        "degraded": signature.degraded,
        "requests": fields(signature.requests),
        "responses": fields(signature.responses),
    }
    if with_stats:
        doc["stats"] = dict(sorted(signature.stats.items()))
    return doc
