"""STIX-flavoured vocabulary for the cybersecurity knowledge graph."""

from __future__ import annotations

from dataclasses import dataclass

from .terms import Term, iri

DEFAULT_NAMESPACE = "ckg:"
RDF_TYPE = "rdf:type"

CLASSES = {
    "Malware": "Malware",
    "AttackPattern": "Attack-Pattern",
    "Indicator": "Indicator",
    "Tool": "Tool",
    "Vulnerability": "Vulnerability",
    "CourseOfAction": "Course-Of-Action",
    "SystemParameter": "SystemParameter",
    "Observation": "Observation",
}
PROPERTIES = ("uses", "hasHash", "indicates", "mitigates", "targets", "parameterchange")
# annotation properties carried alongside the core relations
ANNOTATIONS = ("name", "protocol", "port", "windowStart", "windowEnd", "observes", "mean", "baselineMean")
CHANGE_VALUES = ("increases_meanchange", "decreases_meanchange", "no_meanchange")


@dataclass(frozen=True)
class Ontology:
    namespace: str = DEFAULT_NAMESPACE

    def __post_init__(self):
        if not self.namespace or any(c.isspace() for c in self.namespace):
            raise ValueError(f"bad namespace prefix {self.namespace!r}")

    def term(self, local: str) -> Term:
        return iri(self.namespace + local)

    def cls(self, name: str) -> Term:
        return self.term(CLASSES[name])

    def prop(self, name: str) -> Term:
        if name not in PROPERTIES and name not in ANNOTATIONS:
            raise KeyError(name)
        return self.term(name)

    def change(self, value: str) -> Term:
        if value not in CHANGE_VALUES:
            raise KeyError(value)
        return self.term(value)

    @property
    def type(self) -> Term:
        return iri(RDF_TYPE)

    def hash_individual(self, digest: str) -> Term:
        return self.term("hash-" + digest.lower())

    def local(self, term: Term) -> str:
        """Strip the namespace from an IRI when present."""
        v = term.value
        return v[len(self.namespace):] if v.startswith(self.namespace) else v

    def vocabulary(self) -> set[Term]:
        out = {self.cls(c) for c in CLASSES}
        out.update(self.term(p) for p in PROPERTIES)
        out.update(self.term(c) for c in CHANGE_VALUES)
        return out


DEFAULT = Ontology()
