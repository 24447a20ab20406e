"""Line-based N-Triples subset: IRIs in angle brackets, plain string literals."""

from __future__ import annotations

import re

from .graph import Graph
from .terms import Triple, ValidationError, iri, literal

_IRI = r"<([^<>\s]+)>"
_LIT = r'"((?:[^"\\]|\\.)*)"'
_LINE = re.compile(rf"^\s*{_IRI}\s+{_IRI}\s+(?:{_IRI}|{_LIT})\s*\.\s*$")
_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}


class NTriplesError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _unescape(text: str, line_no: int) -> str:
    out = []
    it = iter(text)
    for c in it:
        if c == "\\":
            nxt = next(it, "")
            if nxt not in _UNESCAPES:
                raise NTriplesError(line_no, f"bad escape \\{nxt}")
            out.append(_UNESCAPES[nxt])
        else:
            out.append(c)
    return "".join(out)


def parse_line(line: str, line_no: int = 1) -> Triple | None:
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    m = _LINE.match(line)
    if m is None:
        raise NTriplesError(line_no, f"malformed triple: {stripped[:80]!r}")
    s, p, o_iri, o_lit = m.groups()
    try:
        obj = iri(o_iri) if o_iri is not None else literal(_unescape(o_lit, line_no))
        return Triple(iri(s), iri(p), obj)
    except ValidationError as exc:
        raise NTriplesError(line_no, str(exc)) from exc


def load_ntriples(text: str) -> Graph:
    g = Graph()
    for n, line in enumerate(text.split("\n"), start=1):
        t = parse_line(line, n)
        if t is not None:
            g.add(t)
    return g


def serialize_ntriples(graph) -> str:
    """Sorted, newline-terminated serialization (byte-stable across runs)."""
    return "".join(t.n3() + "\n" for t in sorted(graph))


def read_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return load_ntriples(fh.read())


def write_graph(graph: Graph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_ntriples(graph))
