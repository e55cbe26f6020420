"""Text formats for instances, matchings and nibble traces.

Instance::

    rainbow-instance v1
    colors 3
    class 0 clique 0 1 2
    class 1 clique 0 1

``#`` starts a comment; blank lines are ignored. Serialized instances list
cliques sorted by (colour, smallest vertex) with ascending vertices, so
serialize(parse(text)) is a canonical form.

Matching::

    rainbow-matching v1
    0 4 7

one ``colour u v`` line per matched colour, sorted by colour.
"""

from __future__ import annotations

import csv
import io as _io
from typing import Iterable

import numpy as np

from .graph import ColouredMultigraph, GraphError, RainbowMatching, from_arrays

INSTANCE_HEADER = "rainbow-instance v1"
MATCHING_HEADER = "rainbow-matching v1"
TRACE_COLUMNS = ("i", "p_i", "c_i", "phi", "killed", "zapped", "e_dev", "d_dev")


class ParseError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


def _lines(text: str) -> Iterable[tuple[int, list[str]]]:
    for no, raw in enumerate(text.split("\n"), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield no, body.split()


def _int(tok: str, no: int, what: str) -> int:
    try:
        return int(tok, 10)
    except ValueError:
        raise ParseError(no, f"{what} {tok!r} is not a decimal integer") from None


def parse_instance(text: str) -> ColouredMultigraph:
    lines = iter(_lines(text))
    try:
        no, head = next(lines)
    except StopIteration:
        raise ParseError(1, "empty document") from None
    if " ".join(head) != INSTANCE_HEADER:
        raise ParseError(no, f"expected header {INSTANCE_HEADER!r}")
    try:
        no, toks = next(lines)
    except StopIteration:
        raise ParseError(no + 1, "missing 'colors <n>' line") from None
    if len(toks) != 2 or toks[0] != "colors":
        raise ParseError(no, "expected 'colors <n>'")
    n_colours = _int(toks[1], no, "colour count")
    if n_colours < 0:
        raise ParseError(no, "colour count must be non-negative")

    colours, sizes, members, origin = [], [], [], []
    for no, toks in lines:
        if len(toks) < 3 or toks[0] != "class" or toks[2] != "clique":
            raise ParseError(no, "expected 'class <colour> clique <v1> <v2> ...'")
        colours.append(_int(toks[1], no, "colour"))
        verts = [_int(t, no, "vertex") for t in toks[3:]]
        sizes.append(len(verts))
        members.extend(verts)
        origin.append(no)
    try:
        return from_arrays(n_colours, colours, sizes, members)
    except GraphError as err:
        k = err.clique_index
        raise ParseError(origin[k] if k is not None else 0, str(err)) from err


def serialize_instance(g: ColouredMultigraph) -> str:
    out = [INSTANCE_HEADER, f"colors {g.n_colours}"]
    ptr, members = g.clique_ptr, g.members
    for c in range(g.n_colours):
        ks = list(g.clique_range(c))
        ks.sort(key=lambda k: int(members[ptr[k]]))
        for k in ks:
            vs = " ".join(str(int(v)) for v in members[ptr[k]:ptr[k + 1]])
            out.append(f"class {c} clique {vs}")
    return "\n".join(out) + "\n"


def parse_matching(text: str) -> RainbowMatching:
    lines = iter(_lines(text))
    try:
        no, head = next(lines)
    except StopIteration:
        raise ParseError(1, "empty document") from None
    if " ".join(head) != MATCHING_HEADER:
        raise ParseError(no, f"expected header {MATCHING_HEADER!r}")
    entries = {}
    for no, toks in lines:
        if len(toks) != 3:
            raise ParseError(no, "expected 'colour u v'")
        c, u, v = (_int(t, no, "field") for t in toks)
        if c in entries:
            raise ParseError(no, f"colour {c} matched twice")
        entries[c] = (u, v)
    return RainbowMatching(entries)


def serialize_matching(m: RainbowMatching) -> str:
    out = [MATCHING_HEADER] + [f"{c} {u} {v}" for c, (u, v) in m]
    return "\n".join(out) + "\n"


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def serialize_trace(trace, per_colour: bool = False) -> str:
    """CSV with one row per iteration 1..τ-1; ``i`` is the 0-based index of p_i.

    ``e_dev``/``d_dev`` are the deviations after the iteration. With
    ``per_colour`` each row also carries the edge count of every colour.
    """
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(TRACE_COLUMNS)
    if per_colour:
        header += [f"e_{c}" for c in range(trace.n)]
    w.writerow(header)
    for r in trace.records:
        row = [r.i, r.p, r.c, r.phi, r.killed, r.zapped, r.e_dev, r.d_dev]
        if per_colour:
            row += list(r.edge_counts)
        w.writerow([_num(x) for x in row])
    return buf.getvalue()


def serialize(artifact, **kw) -> str:
    """Dispatch on the artifact type (instance, matching or nibble trace)."""
    if isinstance(artifact, ColouredMultigraph):
        return serialize_instance(artifact)
    if isinstance(artifact, RainbowMatching):
        return serialize_matching(artifact)
    if hasattr(artifact, "records"):
        return serialize_trace(artifact, **kw)
    raise TypeError(f"cannot serialize {type(artifact).__name__}")


def read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
