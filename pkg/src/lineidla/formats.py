"""Line-oriented ASCII persistence and SVG rendering.

Both file kinds open with a format-tag line, a parameter echo, and a column
list, all prefixed '#'.  Data rows are whitespace-separated; absent values
(birth times outside the clock variant, parents of roots) are written as a
single '-' so every row keeps its full column count.  Parsers are strict:
wrong tag or version, malformed rows, out-of-order birth indices, or text
after the data block all raise FormatError.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .forest import Forest
from .growth import Aggregate
from .lattice import Site

AGGREGATE_TAG = "lineidla-aggregate"
FOREST_TAG = "lineidla-forest"
FORMAT_VERSION = 1

AGGREGATE_COLUMNS = "x y birth_index source_level birth_time"
FOREST_COLUMNS = "x y parent_x parent_y birth_index source_level birth_time"


class FormatError(ValueError):
    pass


def _header(tag: str, params: Mapping[str, object], columns: str) -> list[str]:
    echo = " ".join(f"{k}={v}" for k, v in params.items())
    return [f"# {tag} v{FORMAT_VERSION}", f"# {echo}", f"# columns: {columns}"]


def _time_token(birth_time, i: int) -> str:
    return "-" if birth_time is None else repr(float(birth_time[i]))


def aggregate_text(agg: Aggregate, params: Mapping[str, object]) -> str:
    lines = _header(AGGREGATE_TAG, params, AGGREGATE_COLUMNS)
    for i, (x, y) in enumerate(agg.sites):
        lines.append(
            f"{x} {y} {i} {agg.source_level[i]} {_time_token(agg.birth_time, i)}"
        )
    return "\n".join(lines) + "\n"


def forest_text(forest: Forest, params: Mapping[str, object]) -> str:
    lines = _header(FOREST_TAG, params, FOREST_COLUMNS)
    for i, s in enumerate(forest.sites):
        p = forest.parent[s]
        px, py = ("-", "-") if p is None else (p.x, p.y)
        lines.append(
            f"{s.x} {s.y} {px} {py} {i} {forest.source_level[i]}"
            f" {_time_token(forest.birth_time, i)}"
        )
    return "\n".join(lines) + "\n"


def _split_header(text: str, tag: str) -> tuple[dict[str, str], list[str]]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].startswith(f"# {tag} v"):
        raise FormatError(f"not a {tag} file")
    version = lines[0][len(f"# {tag} v"):]
    if version != str(FORMAT_VERSION):
        raise FormatError(f"unsupported {tag} version {version!r}")
    params: dict[str, str] = {}
    body_at = 1
    for line in lines[1:]:
        if not line.startswith("#"):
            break
        body_at += 1
        stripped = line[1:].strip()
        if stripped.startswith("columns:"):
            continue
        for tok in stripped.split():
            if "=" in tok:
                k, _, v = tok.partition("=")
                params[k] = v
    body = lines[body_at:]
    if any(line.startswith("#") for line in body):
        raise FormatError("comment lines are only allowed in the header")
    return params, body


def _parse_times(tokens: list[str]) -> Optional[np.ndarray]:
    if all(t == "-" for t in tokens):
        return None
    if any(t == "-" for t in tokens):
        raise FormatError("birth times must be all present or all absent")
    return np.array([float(t) for t in tokens], dtype=np.float64)


@dataclass(frozen=True)
class ParsedAggregate:
    params: dict[str, str]
    sites: list[Site]
    source_level: np.ndarray
    birth_time: Optional[np.ndarray]


def parse_aggregate(text: str) -> ParsedAggregate:
    params, body = _split_header(text, AGGREGATE_TAG)
    sites: list[Site] = []
    levels: list[int] = []
    times: list[str] = []
    for i, line in enumerate(body):
        fields = line.split()
        if len(fields) != 5:
            raise FormatError(f"row {i}: expected 5 fields, got {len(fields)}")
        try:
            x, y, bi, sl = (int(f) for f in fields[:4])
        except ValueError as e:
            raise FormatError(f"row {i}: {e}") from None
        if bi != i:
            raise FormatError(f"row {i}: birth_index {bi} out of order")
        sites.append(Site(x, y))
        levels.append(sl)
        times.append(fields[4])
    return ParsedAggregate(
        params=params,
        sites=sites,
        source_level=np.array(levels, dtype=np.int64),
        birth_time=_parse_times(times),
    )


def parse_forest(text: str) -> Forest:
    params, body = _split_header(text, FOREST_TAG)
    sites: list[Site] = []
    parent: dict[Site, Optional[Site]] = {}
    levels: list[int] = []
    times: list[str] = []
    for i, line in enumerate(body):
        fields = line.split()
        if len(fields) != 7:
            raise FormatError(f"row {i}: expected 7 fields, got {len(fields)}")
        try:
            x, y = int(fields[0]), int(fields[1])
            if (fields[2] == "-") != (fields[3] == "-"):
                raise FormatError(f"row {i}: half-empty parent")
            p = None if fields[2] == "-" else Site(int(fields[2]), int(fields[3]))
            bi, sl = int(fields[4]), int(fields[5])
        except ValueError as e:
            raise FormatError(f"row {i}: {e}") from None
        if bi != i:
            raise FormatError(f"row {i}: birth_index {bi} out of order")
        s = Site(x, y)
        sites.append(s)
        parent[s] = p
        levels.append(sl)
        times.append(fields[6])
    return Forest(
        variant=params.get("variant", "unknown"),
        n=int(params.get("n", 0)),
        half_height=int(params.get("half_height", 0)),
        master_seed=int(params.get("seed", 0)),
        sites=sites,
        parent=parent,
        source_level=np.array(levels, dtype=np.int64),
        birth_time=_parse_times(times),
    )


# ---------------------------------------------------------------------------
# SVG


def svg_document(
    sites: Sequence[Site],
    edges: Iterable[tuple[Site, Site]] = (),
    strip_half_height: Optional[int] = None,
) -> str:
    """Occupied sites as unit squares, directed edges as arrowed lines.

    The lattice y-axis points up, so rows are negated for SVG space.  Edge
    count is machine-checkable: exactly one <line> element per edge.
    """
    edges = list(edges)
    xs = [s.x for s in sites] or [0]
    ys = [-s.y for s in sites] or [0]
    pad = 2
    x0, y0 = min(xs) - pad, min(ys) - pad
    w, h = max(xs) + pad - x0 + 1, max(ys) + pad - y0 + 1
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{8 * w}" height="{8 * h}" '
        f'viewBox="{x0 - 0.5} {y0 - 0.5} {w} {h}">',
        "<defs>",
        '<marker id="ah" viewBox="0 0 6 6" refX="5" refY="3" markerWidth="4" '
        'markerHeight="4" orient="auto-start-reverse">'
        '<path d="M0,0 L6,3 L0,6 z" fill="#b03a2e"/></marker>',
        "</defs>",
    ]
    if strip_half_height is not None:
        k = strip_half_height + 0.5
        style = 'stroke="#888888" stroke-width="0.08" stroke-dasharray="0.4,0.3"'
        out.append(f'<path d="M {x0 - 0.5} {-k} h {w}" {style}/>')
        out.append(f'<path d="M {x0 - 0.5} {k} h {w}" {style}/>')
    out.append('<g fill="#a6bddb" stroke="#2b5d8a" stroke-width="0.06">')
    for s in sites:
        out.append(f'<rect x="{s.x - 0.5}" y="{-s.y - 0.5}" width="1" height="1"/>')
    out.append("</g>")
    if edges:
        out.append(
            '<g stroke="#b03a2e" stroke-width="0.12" marker-end="url(#ah)">'
        )
        for p, c in edges:
            out.append(
                f'<line x1="{p.x}" y1="{-p.y}" x2="{c.x}" y2="{-c.y}"/>'
            )
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
