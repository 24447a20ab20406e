"""STIX 2.1 bundle parsing and mapping onto knowledge-graph triples.

Only malware, attack-pattern, indicator and relationship objects are
mapped; everything else is parsed as ``other`` and skipped.  Collections
are fetched through :func:`fetch_collection`, which reads local files or
TAXII 2.1 ``objects`` endpoints over HTTP.
"""

from __future__ import annotations

import json
import logging
import re
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .kg import Ontology, Triple, literal
from .kg.ontology import DEFAULT
from .kg.terms import ValidationError, iri

logger = logging.getLogger(__name__)

NODE_TYPES = {"malware": "Malware", "attack-pattern": "AttackPattern", "indicator": "Indicator"}
RELATIONSHIPS = ("uses", "indicates", "mitigates", "targets")
TAXII_CONTENT_TYPE = "application/taxii+json;version=2.1"

_HASH_RE = re.compile(r"file:hashes\.(?:'[^']+'|\"[^\"]+\"|[\w-]+)\s*=\s*'([0-9A-Fa-f]{8,128})'")


class StixParseError(ValueError):
    pass


class FetchError(RuntimeError):
    pass


@dataclass(frozen=True)
class StixObject:
    id: str
    type: str
    name: str | None = None
    source_ref: str | None = None
    target_ref: str | None = None
    relationship_type: str | None = None
    pattern: str | None = None
    raw_type: str | None = None

    @property
    def hash_value(self) -> str | None:
        if not self.pattern:
            return None
        m = _HASH_RE.search(self.pattern)
        return m.group(1).lower() if m else None


@dataclass
class Bundle:
    objects: list[StixObject] = field(default_factory=list)

    def __len__(self):
        return len(self.objects)

    def ids(self) -> set[str]:
        return {o.id for o in self.objects}


@dataclass
class StixMapping:
    """Result of mapping a bundle: emitted triples plus the skipped-object report."""

    triples: list[Triple]
    skipped: list[dict]
    warnings: list[str]

    def report(self) -> dict:
        return {"triples": len(self.triples), "skipped": self.skipped, "warnings": self.warnings}


def _parse_object(i: int, obj) -> StixObject:
    if not isinstance(obj, dict):
        raise StixParseError(f"objects[{i}]: expected an object, got {type(obj).__name__}")
    oid = obj.get("id")
    if not isinstance(oid, str) or not oid:
        raise StixParseError(f"objects[{i}]: missing 'id'")
    raw_type = obj.get("type")
    kind = raw_type if raw_type in NODE_TYPES or raw_type == "relationship" else "other"
    name = obj.get("name")
    if kind == "relationship":
        missing = [k for k in ("source_ref", "target_ref", "relationship_type") if not obj.get(k)]
        if missing:
            raise StixParseError(f"objects[{i}] ({oid}): relationship missing {', '.join(missing)}")
    return StixObject(
        id=oid,
        type=kind,
        name=name if isinstance(name, str) and name else None,
        source_ref=obj.get("source_ref"),
        target_ref=obj.get("target_ref"),
        relationship_type=obj.get("relationship_type"),
        pattern=obj.get("pattern"),
        raw_type=raw_type if isinstance(raw_type, str) else None,
    )


def parse_bundle(json_text: str | bytes) -> Bundle:
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise StixParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("objects"), list):
        raise StixParseError("bundle must be a JSON object with an 'objects' array")
    return Bundle([_parse_object(i, o) for i, o in enumerate(doc["objects"])])


def object_iri(stix_id: str, ontology: Ontology = DEFAULT):
    try:
        return iri(ontology.namespace + stix_id)
    except ValidationError as exc:
        raise StixParseError(f"unusable STIX id {stix_id!r}") from exc


def map_to_triples(bundle: Bundle, ontology: Ontology = DEFAULT) -> StixMapping:
    """Map bundle objects to triples in bundle order.

    Mapping table: each node object gets a type triple, plus a name triple
    when named; indicators with a file-hash pattern also get
    ``(indicator, hasHash, hash-<hex>)``; ``uses``/``indicates``/
    ``mitigates``/``targets`` relationships become one triple each.
    """
    triples: list[Triple] = []
    skipped: list[dict] = []
    warnings: list[str] = []
    known = bundle.ids()
    for obj in bundle.objects:
        if obj.type in NODE_TYPES:
            node = object_iri(obj.id, ontology)
            triples.append(Triple(node, ontology.type, ontology.cls(NODE_TYPES[obj.type])))
            if obj.name is not None:
                triples.append(Triple(node, ontology.prop("name"), literal(obj.name)))
            if obj.type == "indicator" and obj.hash_value:
                triples.append(Triple(node, ontology.prop("hasHash"), ontology.hash_individual(obj.hash_value)))
        elif obj.type == "relationship":
            if obj.relationship_type not in RELATIONSHIPS:
                msg = f"{obj.id}: relationship type {obj.relationship_type!r} not mapped"
                logger.warning(msg)
                warnings.append(msg)
                skipped.append({"id": obj.id, "type": "relationship", "reason": "unmapped relationship type"})
                continue
            for ref in (obj.source_ref, obj.target_ref):
                if ref not in known:
                    msg = f"{obj.id}: reference {ref} not present in bundle"
                    logger.warning(msg)
                    warnings.append(msg)
            triples.append(
                Triple(
                    object_iri(obj.source_ref, ontology),
                    ontology.prop(obj.relationship_type),
                    object_iri(obj.target_ref, ontology),
                )
            )
        else:
            skipped.append({"id": obj.id, "type": obj.raw_type, "reason": "unsupported object type"})
    return StixMapping(triples, skipped, warnings)


class CollectionSource(Protocol):
    def fetch(self) -> Bundle: ...


@dataclass(frozen=True)
class FileCollection:
    path: Path

    def fetch(self) -> Bundle:
        try:
            text = Path(self.path).read_text(encoding="utf-8")
        except OSError as exc:
            raise FetchError(f"cannot read collection {self.path}: {exc}") from exc
        try:
            return parse_bundle(text)
        except StixParseError as exc:
            raise FetchError(f"malformed collection {self.path}: {exc}") from exc


@dataclass(frozen=True)
class TaxiiCollection:
    """HTTP(S) source; ``url`` is a TAXII 2.1 objects endpoint or a bundle URL."""

    url: str
    timeout: float = 10.0
    headers: tuple = (("Accept", TAXII_CONTENT_TYPE),)

    def fetch(self) -> Bundle:
        req = urllib.request.Request(self.url, headers=dict(self.headers))
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = resp.read()
        except (urllib.error.URLError, OSError) as exc:
            raise FetchError(f"cannot reach {self.url}: {exc}") from exc
        try:
            return parse_bundle(payload)
        except StixParseError as exc:
            raise FetchError(f"malformed payload from {self.url}: {exc}") from exc


def fetch_collection(source) -> Bundle:
    """Fetch a bundle from a path, URL, or any object with a ``fetch()`` method."""
    if hasattr(source, "fetch"):
        return source.fetch()
    text = str(source)
    if text.startswith(("http://", "https://")):
        return TaxiiCollection(text).fetch()
    return FileCollection(Path(text)).fetch()
