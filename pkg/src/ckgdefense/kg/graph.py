"""In-memory triple store with subject/predicate/object indexes.

Reads may happen from many threads at once; writers need exclusive access.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from typing import Iterable, Iterator

from .terms import Term, Triple, ValidationError


class Graph:
    def __init__(self, triples: Iterable[Triple] = ()):
        self._triples: set[Triple] = set()
        self._spo = defaultdict(lambda: defaultdict(set))
        self._pos = defaultdict(lambda: defaultdict(set))
        self._osp = defaultdict(lambda: defaultdict(set))
        self._iri_counts: Counter = Counter()
        for t in triples:
            self.add(t)

    def add(self, t: Triple) -> bool:
        """Assert ``t``; returns False when it was already present."""
        if not isinstance(t, Triple):
            raise ValidationError(f"expected Triple, got {type(t).__name__}")
        if t in self._triples:
            return False
        self._triples.add(t)
        s, p, o = t.subject, t.predicate, t.object
        self._spo[s][p].add(o)
        self._pos[p][o].add(s)
        self._osp[o][s].add(p)
        for term in t:
            if term.is_iri:
                self._iri_counts[term] += 1
        return True

    def update(self, triples: Iterable[Triple]) -> int:
        return sum(self.add(t) for t in triples)

    def __contains__(self, t) -> bool:
        return t in self._triples

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self._triples == other._triples

    def __repr__(self) -> str:
        return f"Graph({len(self)} triples)"

    @property
    def vocabulary(self) -> set[Term]:
        return set(self._iri_counts)

    def has_term(self, term: Term) -> bool:
        return term in self._iri_counts

    def copy(self) -> Graph:
        return Graph(self._triples)

    def sorted(self) -> list[Triple]:
        return sorted(self._triples)

    def match(self, s: Term | None = None, p: Term | None = None, o: Term | None = None) -> Iterator[Triple]:
        """Yield stored triples agreeing with the bound positions (None = wildcard)."""
        if s is not None:
            by_p = self._spo.get(s)
            if not by_p:
                return
            preds = [p] if p is not None else list(by_p)
            for pp in preds:
                for oo in by_p.get(pp, ()):
                    if o is None or oo == o:
                        yield Triple(s, pp, oo)
        elif p is not None:
            by_o = self._pos.get(p)
            if not by_o:
                return
            objs = [o] if o is not None else list(by_o)
            for oo in objs:
                for ss in by_o.get(oo, ()):
                    yield Triple(ss, p, oo)
        elif o is not None:
            for ss, preds in self._osp.get(o, {}).items():
                for pp in preds:
                    yield Triple(ss, pp, o)
        else:
            yield from self._triples

    def objects(self, s: Term, p: Term) -> set[Term]:
        by_p = self._spo.get(s)
        return set(by_p.get(p, ())) if by_p else set()

    def subjects(self, p: Term, o: Term) -> set[Term]:
        by_o = self._pos.get(p)
        return set(by_o.get(o, ())) if by_o else set()

    def out_edges(self, s: Term) -> Iterator[tuple[Term, Term]]:
        for p, objs in self._spo.get(s, {}).items():
            for o in objs:
                yield p, o

    def in_edges(self, o: Term) -> Iterator[tuple[Term, Term]]:
        for s, preds in self._osp.get(o, {}).items():
            for p in preds:
                yield s, p


def assert_triple(graph: Graph, t: Triple) -> Graph:
    graph.add(t)
    return graph
