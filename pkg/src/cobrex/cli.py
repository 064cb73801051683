"""Command-line surface.

Subcommands: identify, signature, refactor, export, oracle, verify.
Exit codes: 0 success, 2 parse/config errors, 3 unresolved selector,
4 path budget exceeded, 5 property violation.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional

from .discovery import ApiCandidate, discover_candidates, dynamic_query_candidates
from .errors import CobrexError, PathBudgetExceeded
from .frontend.parser import picture_is_numeric
from .graphs import CodeRegion, call_graph_to_dot, cfg_to_dot
from .oracle import enumerate_paths, oracle_signature
from .refactor import caller_mapping_report, refactor_report, slice_copybook
from .signature.interproc import interprocedural_signature
from .signature.model import ApiSignature, UseDefSets, signature_to_json
from .verify import run_verification
from .workspace import Workspace, WorkspaceConfig, load_workspace


class SelectorError(Exception):
    pass


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")


def _load(args) -> Workspace:
    if not args.config:
        raise CobrexError("--config PATH is required for this command")
    return load_workspace(WorkspaceConfig.from_file(args.config))


def all_candidates(ws: Workspace) -> list[ApiCandidate]:
    out = list(discover_candidates(ws))
    seen = {(c.seed_kind, c.region.program, c.region.start_line, c.region.end_line)
            for c in out}
    for cand in dynamic_query_candidates(ws):
        key = (cand.seed_kind, cand.region.program,
               cand.region.start_line, cand.region.end_line)
        if key not in seen:
            out.append(cand)
    out.sort(key=lambda c: (c.region.program, c.region.start_line,
                            c.region.end_line, c.seed_kind, c.suggested_name))
    return out


def _select(ws: Workspace, args) -> tuple[CodeRegion, str, str, Optional[dict]]:
    if getattr(args, "region", None):
        try:
            region = ws.region(args.region)
        except CobrexError as exc:
            raise SelectorError(str(exc)) from exc
        name = f"{region.program}:{region.start_line}-{region.end_line}"
        return region, name, "user_region", None
    if getattr(args, "candidate", None):
        for cand in all_candidates(ws):
            if cand.suggested_name == args.candidate:
                return cand.region, cand.suggested_name, cand.seed_kind, cand.fixed_signature
        raise SelectorError(f"no candidate named {args.candidate!r}")
    raise SelectorError("pass --candidate NAME or --region PROG:start-end")


def compute_signature(ws: Workspace, region: CodeRegion, flow: str,
                      call_chain: bool, ps_bound: int,
                      strict: bool = False) -> ApiSignature:
    return interprocedural_signature(
        region, ws.units, ws.call_graph, flow=flow, with_call_chain=call_chain,
        cfgs=ws.cfgs, strict=strict, ps_bound=ps_bound)


def _drop_sqlcode(sig: ApiSignature) -> ApiSignature:
    trimmed = ApiSignature(
        region=sig.region, variant=sig.variant,
        requests=[fr for fr in sig.requests if fr.item.name != "SQLCODE"],
        responses=[fr for fr in sig.responses if fr.item.name != "SQLCODE"],
        http_method=sig.http_method, degraded=sig.degraded, stats=dict(sig.stats))
    return trimmed


def _variant_args(ws: Workspace, args) -> tuple[str, bool, int, bool]:
    d = ws.config.defaults
    flow = args.flow or d.flow
    if args.call_chain is None:
        call_chain = d.call_chain
    else:
        call_chain = args.call_chain
    ps_bound = args.ps_bound or d.ps_bound
    include_sqlcode = args.include_sqlcode or d.include_sqlcode
    return flow, call_chain, ps_bound, include_sqlcode


def _signature_doc(ws: Workspace, args, region: CodeRegion, name: str,
                   seed_kind: str, fixed: Optional[dict]) -> dict:
    flow, call_chain, ps_bound, include_sqlcode = _variant_args(ws, args)
    if fixed is not None:
        return {
            "api": {"name": name, "seed_kind": seed_kind, "method": "post",
                    "region": {"program": region.program,
                               "start_line": region.start_line,
                               "end_line": region.end_line}},
            "variant": {"flow": "fixed", "call_chain": False},
            "degraded": False,
            "requests": fixed["requests"],
            "responses": fixed["responses"],
        }
    started = time.perf_counter()
    sig = compute_signature(ws, region, flow, call_chain, ps_bound,
                            strict=getattr(args, "strict", False))
    doc = signature_to_json(sig, name, seed_kind, include_sqlcode,
                            with_stats=args.stats)
    if args.stats:
        doc["stats"]["wall_ms"] = round((time.perf_counter() - started) * 1000.0, 3)
    return doc


# -- subcommands ------------------------------------------------------------------

def cmd_identify(args) -> int:
    ws = _load(args)
    candidates = all_candidates(ws)
    if args.dump_dot:
        dot_dir = Path(args.dump_dot)
        dot_dir.mkdir(parents=True, exist_ok=True)
        for program in sorted(ws.units):
            (dot_dir / f"{program}.dot").write_text(cfg_to_dot(ws.cfgs[program]))
        (dot_dir / "callgraph.dot").write_text(call_graph_to_dot(ws.call_graph))
    _emit([c.as_json() for c in candidates])
    return 0


def cmd_signature(args) -> int:
    ws = _load(args)
    region, name, seed_kind, fixed = _select(ws, args)
    _emit(_signature_doc(ws, args, region, name, seed_kind, fixed))
    return 0


def cmd_refactor(args) -> int:
    ws = _load(args)
    region, name, seed_kind, fixed = _select(ws, args)
    if fixed is not None:
        raise SelectorError(f"candidate {name} has a fixed conventional signature; "
                            f"there is nothing to refactor")
    flow, call_chain, ps_bound, include_sqlcode = _variant_args(ws, args)
    sig = compute_signature(ws, region, flow, call_chain, ps_bound)
    exported = sig if include_sqlcode else _drop_sqlcode(sig)
    report = refactor_report(region, sig)
    unit = ws.unit(region.program)
    try:
        req_text, resp_text = slice_copybook(unit.data_items, exported)
    except CobrexError:
        req_text = resp_text = None
    mappings = []
    for caller, stmt, callee in sorted(ws.call_graph.edges,
                                       key=lambda e: (e[0], e[1].line)):
        if callee != region.program:
            continue
        mappings.append(caller_mapping_report(stmt, exported, unit, caller).as_json())
    doc = {
        "api": name,
        "seed_kind": seed_kind,
        "report": [s.as_json() for s in report],
        "slices": {"request": req_text, "response": resp_text},
        "caller_mappings": mappings,
    }
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if req_text:
            (out_dir / f"{name}-REQ.cpy").write_text(req_text)
        if resp_text:
            (out_dir / f"{name}-RESP.cpy").write_text(resp_text)
    _emit(doc)
    return 0


def _schema_for(fields: list[dict]) -> dict:
    properties = {}
    required = []
    names_seen = set()
    for f in sorted(fields, key=lambda d: d["qualified"]):
        key = f["field"] if f["field"] not in names_seen else f["qualified"]
        names_seen.add(f["field"])
        prop = {"type": "string"}
        picture = f.get("picture")
        if picture:
            from .frontend.parser import picture_size
            prop["maxLength"] = picture_size(picture)
            if picture_is_numeric(picture):
                prop["pattern"] = "^[0-9]*$"
        properties[key] = prop
        if not f.get("optional", True):
            required.append(key)
    schema = {"type": "object", "properties": properties}
    if required:
        schema["required"] = sorted(required)
    return schema


def cmd_export(args) -> int:
    ws = _load(args)
    if args.all:
        picks = all_candidates(ws)
    else:
        region, name, seed_kind, fixed = _select(ws, args)
        picks = [cand for cand in all_candidates(ws) if cand.suggested_name == name] or [
            ApiCandidate(seed_kind, region, name, "selected region")]
    paths = {}
    for cand in picks:
        doc = _signature_doc(ws, args, cand.region, cand.suggested_name,
                             cand.seed_kind, cand.fixed_signature)
        method = doc["api"]["method"]
        body = {
            "operationId": cand.suggested_name,
            "requestBody": {
                "required": True,
                "content": {"application/json": {"schema": _schema_for(doc["requests"])}},
            },
            "responses": {
                "200": {
                    "description": "OK",
                    "content": {"application/json": {"schema": _schema_for(doc["responses"])}},
                },
            },
        }
        paths[f"/apis/{cand.suggested_name}"] = {method: body}
    _emit({
        "openapi": "3.0.3",
        "info": {"title": "cobrex extracted APIs", "version": "0.1.0"},
        "paths": dict(sorted(paths.items())),
    })
    return 0


def cmd_oracle(args) -> int:
    ws = _load(args)
    region, name, _, _ = _select(ws, args)
    cfg = ws.cfg(region.program)
    stats: dict = {}
    paths = enumerate_paths(region, cfg, bound=args.unroll, budget=args.budget,
                            stats=stats)
    sets = UseDefSets(region.statements)
    result = oracle_signature(region, paths, sets)
    _emit({
        "region": {"program": region.program, "start_line": region.start_line,
                   "end_line": region.end_line},
        "unroll_bound": args.unroll,
        "paths": len(paths),
        "forced_branches": stats.get("forced_branches", 0),
        "per_path": [
            {
                "statements": [s.line for s in ep.statements],
                "requests": sorted(i.qualified_name for i in req),
                "responses": sorted(i.qualified_name for i in resp),
            }
            for ep, req, resp in result.per_path
        ],
        "union_requests": sorted(i.qualified_name for i in result.union_req),
        "union_responses": sorted(i.qualified_name for i in result.union_resp),
    })
    return 0


def _parse_seed_range(text: str) -> range:
    m = text.split("..")
    if len(m) != 2:
        raise CobrexError(f"bad seed range {text!r}; expected A..B")
    return range(int(m[0]), int(m[1]) + 1)


def cmd_verify(args) -> int:
    seeds = _parse_seed_range(args.seeds)
    summary = run_verification(seeds, size=args.size, vars=args.vars,
                               unroll=args.unroll, budget=args.budget)
    print(f"{summary.passed} passed, {summary.failed} failed"
          + (f", {summary.skipped} skipped" if summary.skipped else ""))
    if summary.violations:
        for line in summary.violations[:20]:
            print(line, file=sys.stderr)
        print("first counterexample program:", file=sys.stderr)
        print(summary.counterexample, file=sys.stderr)
        return 5
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cobrex",
        description="Discover candidate APIs in COBOL programs and compute "
                    "request/response signatures.")
    parser.add_argument("--config", help="workspace config JSON")
    parser.add_argument("--stats", action="store_true",
                        help="include analysis statistics in signature output")
    parser.add_argument("--include-sqlcode", action="store_true",
                        help="keep SQLCODE in exported request/response lists")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identify", help="list candidate APIs")
    p.add_argument("--dump-dot", metavar="DIR",
                   help="write CFG and call-graph DOT files")
    p.set_defaults(func=cmd_identify)

    def add_variant_flags(p):
        p.add_argument("--candidate", help="candidate name from identify")
        p.add_argument("--region", help="PROG:start-end line range")
        p.add_argument("--flow", choices=("fi", "fs", "ps"))
        chain = p.add_mutually_exclusive_group()
        chain.add_argument("--call-chain", dest="call_chain", action="store_true",
                           default=None)
        chain.add_argument("--no-call-chain", dest="call_chain", action="store_false",
                           default=None)
        p.add_argument("--ps-bound", type=int, default=None,
                       help="path budget for the path-sensitive variant")

    p = sub.add_parser("signature", help="compute one API signature")
    add_variant_flags(p)
    p.add_argument("--strict", action="store_true",
                   help="fail on missing callees in call-chain mode")
    p.set_defaults(func=cmd_signature)

    p = sub.add_parser("refactor", help="refactoring report and copybook slices")
    add_variant_flags(p)
    p.add_argument("--out-dir", help="directory for generated .cpy slices")
    p.set_defaults(func=cmd_refactor)

    p = sub.add_parser("export", help="OpenAPI-style document")
    add_variant_flags(p)
    p.add_argument("--all", action="store_true", help="export every candidate")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("oracle", help="execution-semantics path enumeration")
    p.add_argument("--region", required=True)
    p.add_argument("--unroll", type=int, default=3)
    p.add_argument("--budget", type=int, default=4096)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="property checks over generated programs")
    p.add_argument("--seeds", required=True, help="inclusive range, e.g. 0..999")
    p.add_argument("--size", type=int, default=30)
    p.add_argument("--vars", type=int, default=10)
    p.add_argument("--unroll", type=int, default=3)
    p.add_argument("--budget", type=int, default=4096)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PathBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except SelectorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except CobrexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
