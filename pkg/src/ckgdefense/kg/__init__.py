from .graph import Graph, assert_triple
from .ntriples import NTriplesError, load_ntriples, read_graph, serialize_ntriples, write_graph
from .ontology import CHANGE_VALUES, DEFAULT, DEFAULT_NAMESPACE, RDF_TYPE, Ontology
from .query import QuerySyntaxError, SelectQuery, TriplePattern, evaluate, parse_query, prefix_aliases
from .terms import IRI, LITERAL, VARIABLE, Term, Triple, ValidationError, iri, literal, triple, var

__all__ = [
    "CHANGE_VALUES",
    "DEFAULT",
    "DEFAULT_NAMESPACE",
    "Graph",
    "IRI",
    "LITERAL",
    "NTriplesError",
    "Ontology",
    "QuerySyntaxError",
    "RDF_TYPE",
    "SelectQuery",
    "Term",
    "Triple",
    "TriplePattern",
    "VARIABLE",
    "ValidationError",
    "assert_triple",
    "evaluate",
    "iri",
    "literal",
    "load_ntriples",
    "parse_query",
    "prefix_aliases",
    "read_graph",
    "serialize_ntriples",
    "triple",
    "var",
    "write_graph",
]
