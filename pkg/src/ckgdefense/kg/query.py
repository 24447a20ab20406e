"""SELECT / DISTINCT / basic-graph-pattern subset of SPARQL.

Supported::

    PREFIX ex: <http://example.org/>
    SELECT DISTINCT ?x ?y WHERE { ?x a ex:Malware ; ex:uses ?y , ex:z . }

No OPTIONAL, FILTER, UNION or property paths.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .graph import Graph
from .ontology import RDF_TYPE
from .terms import Term, ValidationError, iri, literal, var


class QuerySyntaxError(ValidationError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class TriplePattern:
    subject: Term
    predicate: Term
    object: Term

    def __iter__(self):
        yield self.subject
        yield self.predicate
        yield self.object

    def variables(self) -> list[str]:
        return [t.value for t in self if t.is_variable]


@dataclass(frozen=True)
class SelectQuery:
    projected: tuple[str, ...]
    patterns: tuple[TriplePattern, ...]
    distinct: bool = False

    def __post_init__(self):
        if not self.patterns:
            raise ValidationError("query needs at least one triple pattern")
        seen = {v for p in self.patterns for v in p.variables()}
        missing = [v for v in self.projected if v not in seen]
        if missing:
            raise ValidationError(f"projected variable(s) not in any pattern: {', '.join('?' + m for m in missing)}")
        if not self.projected:
            raise ValidationError("query projects no variables")


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^<>\s]*>)
  | (?P<var>[?$][A-Za-z_][\w]*)
  | (?P<lit>"(?:[^"\\\n]|\\.)*")
  | (?P<pname>[A-Za-z_][\w\-]*(?:\.[\w\-]+)*:(?:[\w\-]+(?:\.[\w\-]+)*)?|:[\w\-]*)
  | (?P<kw>[A-Za-z]+)
  | (?P<punct>[{}.;,*])
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, prefixes: Mapping[str, str] | None):
        self.toks = _tokenize(text)
        self.i = 0
        self.prefixes = dict(prefixes or {})

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_punct(self, value: str):
        kind, text, pos = self.take()
        if kind != "punct" or text != value:
            raise QuerySyntaxError(f"expected {value!r}, found {text or 'end of query'!r}", pos)

    def is_kw(self, word: str) -> bool:
        kind, text, _ = self.peek()
        return kind == "kw" and text.upper() == word

    def parse(self) -> SelectQuery:
        while self.is_kw("PREFIX"):
            self.take()
            kind, text, pos = self.take()
            if kind != "pname" or not text.endswith(":"):
                raise QuerySyntaxError("expected prefix name ending in ':'", pos)
            kind2, ns, pos2 = self.take()
            if kind2 != "iri":
                raise QuerySyntaxError("expected <namespace> after prefix", pos2)
            self.prefixes[text[:-1]] = ns[1:-1]
        if not self.is_kw("SELECT"):
            raise QuerySyntaxError("expected SELECT", self.peek()[2])
        self.take()
        distinct = False
        if self.is_kw("DISTINCT"):
            self.take()
            distinct = True
        projected: list[str] = []
        star = False
        while True:
            kind, text, pos = self.peek()
            if kind == "var":
                self.take()
                projected.append(text[1:])
            elif kind == "punct" and text == "*" and not projected and not star:
                self.take()
                star = True
            else:
                break
        if not projected and not star:
            raise QuerySyntaxError("expected projected variables", self.peek()[2])
        if self.is_kw("WHERE"):
            self.take()
        self.expect_punct("{")
        patterns = self.group()
        self.expect_punct("}")
        kind, text, pos = self.peek()
        if kind != "eof":
            raise QuerySyntaxError(f"unexpected trailing input {text!r}", pos)
        if not patterns:
            raise QuerySyntaxError("empty group pattern", pos)
        if star:
            order: list[str] = []
            for p in patterns:
                for v in p.variables():
                    if v not in order:
                        order.append(v)
            projected = order
        start = self.toks[0][2]
        try:
            return SelectQuery(tuple(projected), tuple(patterns), distinct)
        except ValidationError as exc:
            raise QuerySyntaxError(str(exc), start) from exc

    def group(self) -> list[TriplePattern]:
        patterns: list[TriplePattern] = []
        while True:
            kind, text, _ = self.peek()
            if kind == "punct" and text == "}":
                return patterns
            subject = self.term("subject")
            patterns.extend(self.predicate_object_list(subject))
            kind, text, pos = self.peek()
            if kind == "punct" and text == ".":
                self.take()
                continue
            if kind == "punct" and text == "}":
                return patterns
            raise QuerySyntaxError(f"expected '.' or '}}', found {text or 'end of query'!r}", pos)

    def predicate_object_list(self, subject: Term) -> list[TriplePattern]:
        out = []
        while True:
            kind, text, _ = self.peek()
            if kind == "kw" and text == "a":
                self.take()
                pred = iri(RDF_TYPE)
            else:
                pred = self.term("predicate")
                if pred.is_literal:
                    raise QuerySyntaxError("literal in predicate position", self.toks[self.i - 1][2])
            while True:
                obj = self.term("object")
                out.append(TriplePattern(subject, pred, obj))
                kind, text, _ = self.peek()
                if kind == "punct" and text == ",":
                    self.take()
                    continue
                break
            kind, text, _ = self.peek()
            if kind == "punct" and text == ";":
                self.take()
                # dangling ';' before '.' or '}'
                kind, text, _ = self.peek()
                if kind == "punct" and text in ".}":
                    return out
                continue
            return out

    def term(self, role: str) -> Term:
        kind, text, pos = self.take()
        try:
            if kind == "var":
                return var(text[1:])
            if kind == "iri":
                return iri(text[1:-1])
            if kind == "lit":
                body = text[1:-1]
                return literal(re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t", "r": "\r"}.get(m.group(1), m.group(1)), body))
            if kind == "pname":
                prefix, _, local = text.partition(":")
                if prefix in self.prefixes:
                    return iri(self.prefixes[prefix] + local)
                return iri(text)
        except ValidationError as exc:
            raise QuerySyntaxError(str(exc), pos) from exc
        raise QuerySyntaxError(f"expected {role}, found {text or 'end of query'!r}", pos)


# prefixes the bundled listings use for the graph namespace
NAMESPACE_ALIASES = ("ckg", "FusedCKG", "FusedKG")


def prefix_aliases(namespace: str = "ckg:") -> dict[str, str]:
    """Pre-declared prefixes that all expand to ``namespace``."""
    return {alias: namespace for alias in NAMESPACE_ALIASES}


def parse_query(text: str, prefixes: Mapping[str, str] | None = None) -> SelectQuery:
    """Parse query text; ``prefixes`` pre-declares prefix -> namespace mappings."""
    return _Parser(text, prefixes).parse()


def _row_key(row: dict, projected) -> tuple:
    return tuple((row[v].value, row[v].kind) for v in projected)


def evaluate(graph: Graph, q: SelectQuery | str, prefixes: Mapping[str, str] | None = None) -> list[dict[str, Term]]:
    """Evaluate a conjunctive query, returning projected rows in sorted order."""
    if isinstance(q, str):
        q = parse_query(q, prefixes)
    solutions: list[dict[str, Term]] = [{}]
    for pat in q.patterns:
        nxt: list[dict[str, Term]] = []
        for sol in solutions:
            bound = [sol.get(t.value) if t.is_variable else t for t in pat]
            for t in graph.match(*bound):
                ext = dict(sol)
                ok = True
                for pt, val in zip(pat, t):
                    if pt.is_variable:
                        prev = ext.get(pt.value)
                        if prev is None:
                            ext[pt.value] = val
                        elif prev != val:
                            ok = False
                            break
                if ok:
                    nxt.append(ext)
        solutions = nxt
        if not solutions:
            break
    rows = [{v: sol[v] for v in q.projected} for sol in solutions]
    if q.distinct:
        uniq = {}
        for r in rows:
            uniq.setdefault(_row_key(r, q.projected), r)
        rows = list(uniq.values())
    rows.sort(key=lambda r: _row_key(r, q.projected))
    return rows
