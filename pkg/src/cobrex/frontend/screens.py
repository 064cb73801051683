"""Screen-map file parsing.

One field per line: ``name ROW r COL c LEN n (IN|OUT|INOUT)``.
Lines starting with ``*`` are comments; blank lines are skipped.
"""

from __future__ import annotations

import re

from ..errors import MapSyntaxError
from .model import ScreenField

_FIELD_RE = re.compile(
    r"^\s*(?P<name>[A-Za-z][A-Za-z0-9-]*)\s+ROW\s+(?P<row>\d+)\s+COL\s+(?P<col>\d+)"
    r"\s+LEN\s+(?P<len>\d+)\s+(?P<dir>IN|OUT|INOUT)\s*$",
    re.I,
)

_DIRECTIONS = {"IN": "input", "OUT": "output", "INOUT": "both"}


def parse_screen_map(text: str) -> list[ScreenField]:
    fields = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        m = _FIELD_RE.match(raw)
        if not m:
            raise MapSyntaxError(lineno, f"cannot parse map field: {raw.strip()!r}")
        length = int(m.group("len"))
        if length <= 0:
            raise MapSyntaxError(lineno, "field length must be positive")
        fields.append(ScreenField(
            name=m.group("name").upper(),
            direction=_DIRECTIONS[m.group("dir").upper()],
            position=(int(m.group("row")), int(m.group("col"))),
            length=length,
        ))
    return fields
