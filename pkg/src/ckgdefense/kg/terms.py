"""RDF-style terms and triples used by the knowledge graph."""

from __future__ import annotations

from dataclasses import dataclass

IRI = "iri"
LITERAL = "literal"
VARIABLE = "variable"

_KINDS = (IRI, LITERAL, VARIABLE)


class ValidationError(ValueError):
    """Raised when a term, triple or query violates its invariants."""


@dataclass(frozen=True, order=True, slots=True)
class Term:
    kind: str
    value: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown term kind {self.kind!r}")
        if self.kind == IRI:
            if not self.value or any(c.isspace() for c in self.value):
                raise ValidationError(f"malformed IRI {self.value!r}")
        elif self.kind == VARIABLE:
            if not self.value or self.value.startswith("?"):
                raise ValidationError(f"malformed variable name {self.value!r}")

    @property
    def is_iri(self) -> bool:
        return self.kind == IRI

    @property
    def is_literal(self) -> bool:
        return self.kind == LITERAL

    @property
    def is_variable(self) -> bool:
        return self.kind == VARIABLE

    def n3(self) -> str:
        if self.kind == IRI:
            return f"<{self.value}>"
        if self.kind == LITERAL:
            return '"' + escape_literal(self.value) + '"'
        return "?" + self.value

    def __str__(self) -> str:
        return self.value


def iri(value: str) -> Term:
    return Term(IRI, value)


def literal(value) -> Term:
    return Term(LITERAL, str(value))


def var(name: str) -> Term:
    return Term(VARIABLE, name.lstrip("?"))


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def escape_literal(text: str) -> str:
    return "".join(_ESCAPES.get(c, c) for c in text)


@dataclass(frozen=True, order=True, slots=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self):
        if not self.subject.is_iri:
            raise ValidationError(f"subject must be an IRI, got {self.subject.kind}")
        if not self.predicate.is_iri:
            raise ValidationError(f"predicate must be an IRI, got {self.predicate.kind}")
        if self.object.is_variable:
            raise ValidationError("stored triples cannot contain variables")

    def __iter__(self):
        yield self.subject
        yield self.predicate
        yield self.object

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."


def triple(s, p, o) -> Triple:
    """Build a triple from strings; objects that are Terms are kept as given."""
    s = s if isinstance(s, Term) else iri(s)
    p = p if isinstance(p, Term) else iri(p)
    o = o if isinstance(o, Term) else iri(o)
    return Triple(s, p, o)
