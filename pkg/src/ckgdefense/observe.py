"""Flow parsing, policy classification and mean-change observations.

Flows arrive as CSV (``timestamp,src,dst,src_port,dst_port,protocol,bytes,packets``),
are labelled by administrator policies, and are aggregated per time window
into observations of the form ``(parameter, parameterchange, direction)``.
Observations only reach the graph after a term-overlap alignment check.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .kg import Graph, Ontology, Term, Triple, literal
from .kg.ontology import DEFAULT
from .kg.terms import ValidationError, iri

FLOW_FIELDS = ("timestamp", "src", "dst", "src_port", "dst_port", "protocol", "bytes", "packets")
PROTOCOLS = ("tcp", "udp", "icmp", "other")
OPERATORS = ("eq", "neq", "lt", "gt", "in-range")
UNCLASSIFIED = "unclassified"

INCREASES = "increases_meanchange"
DECREASES = "decreases_meanchange"
NO_CHANGE = "no_meanchange"


class FlowParseError(ValueError):
    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class FlowRecord:
    timestamp: float
    src: str
    dst: str
    src_port: int
    dst_port: int
    protocol: str
    bytes: int
    packets: int

    def __post_init__(self):
        if not (self.timestamp >= 0 and math.isfinite(self.timestamp)):
            raise ValidationError(f"bad timestamp {self.timestamp}")
        for name in ("src_port", "dst_port"):
            port = getattr(self, name)
            if not 0 <= port <= 65535:
                raise ValidationError(f"{name} {port} out of range 0-65535")
        if self.protocol not in PROTOCOLS:
            raise ValidationError(f"unknown protocol {self.protocol!r}")
        if self.bytes < 0:
            raise ValidationError(f"bytes must be >= 0, got {self.bytes}")
        if self.packets < 1:
            raise ValidationError(f"packets must be >= 1, got {self.packets}")

    @property
    def bytes_per_packet(self) -> float:
        return self.bytes / self.packets


def _int_field(row: dict, name: str, row_no: int) -> int:
    raw = (row.get(name) or "").strip()
    try:
        return int(raw)
    except ValueError:
        raise FlowParseError(row_no, f"{name} is not an integer: {raw!r}") from None


def parse_flows(csv_text: str) -> list[FlowRecord]:
    reader = csv.DictReader(io.StringIO(csv_text))
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [f for f in FLOW_FIELDS if f not in header]
    if missing:
        raise FlowParseError(1, f"missing column(s): {', '.join(missing)}")
    reader.fieldnames = header
    records = []
    # row 1 is the header
    for row_no, row in enumerate(reader, start=2):
        if not any((v or "").strip() for v in row.values() if isinstance(v, str)):
            continue
        try:
            ts = float(row["timestamp"])
        except (TypeError, ValueError):
            raise FlowParseError(row_no, f"timestamp is not numeric: {row['timestamp']!r}") from None
        try:
            rec = FlowRecord(
                timestamp=ts,
                src=(row["src"] or "").strip(),
                dst=(row["dst"] or "").strip(),
                src_port=_int_field(row, "src_port", row_no),
                dst_port=_int_field(row, "dst_port", row_no),
                protocol=(row["protocol"] or "").strip().lower(),
                bytes=_int_field(row, "bytes", row_no),
                packets=_int_field(row, "packets", row_no),
            )
        except ValidationError as exc:
            raise FlowParseError(row_no, str(exc)) from None
        records.append(rec)
    return records


@dataclass(frozen=True)
class Condition:
    field: str
    op: str
    value: object

    def __post_init__(self):
        if self.field not in FLOW_FIELDS:
            raise ValidationError(f"unknown flow field {self.field!r}")
        if self.op not in OPERATORS:
            raise ValidationError(f"unknown operator {self.op!r}")
        if self.op == "in-range":
            if not (isinstance(self.value, (list, tuple)) and len(self.value) == 2):
                raise ValidationError("in-range needs a [low, high] pair")

    def matches(self, record: FlowRecord) -> bool:
        actual = getattr(record, self.field)
        op, value = self.op, self.value
        if op == "eq":
            return actual == value
        if op == "neq":
            return actual != value
        if op == "lt":
            return actual < value
        if op == "gt":
            return actual > value
        lo, hi = value
        return lo <= actual <= hi


@dataclass(frozen=True)
class AdminPolicy:
    id: str
    match: tuple[Condition, ...]
    label: str
    priority: int = 0

    def matches(self, record: FlowRecord) -> bool:
        return all(c.matches(record) for c in self.match)

    @classmethod
    def from_dict(cls, d: dict) -> AdminPolicy:
        conds = d.get("match", [])
        if isinstance(conds, dict):
            conds = [conds]
        return cls(
            id=str(d["id"]),
            match=tuple(Condition(c["field"], c["op"], c["value"]) for c in conds),
            label=str(d["label"]),
            priority=int(d.get("priority", 0)),
        )


def load_policies(json_text: str) -> list[AdminPolicy]:
    data = json.loads(json_text)
    if not isinstance(data, list):
        raise ValidationError("policy file must hold a JSON array")
    try:
        policies = [AdminPolicy.from_dict(d) for d in data]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad policy entry: {exc}") from exc
    seen = set()
    for p in policies:
        if (p.priority, p.id) in seen:
            raise ValidationError(f"duplicate policy id {p.id!r} at priority {p.priority}")
        seen.add((p.priority, p.id))
    return policies


def classify(record: FlowRecord, policies: Iterable[AdminPolicy]) -> str:
    """Label of the highest-priority matching policy; ties go to the smallest id."""
    best = None
    for p in policies:
        if not p.matches(record):
            continue
        if best is None or (-p.priority, p.id) < (-best.priority, best.id):
            best = p
    return best.label if best is not None else UNCLASSIFIED


@dataclass(frozen=True)
class ParameterSpec:
    """A system parameter computed as the per-window mean of one flow field."""

    parameter: str
    field: str = "bytes"
    traffic_class: str | None = None
    baseline_mean: float | None = None

    def value(self, record: FlowRecord) -> float:
        return float(getattr(record, self.field))

    def __post_init__(self):
        if self.field not in ("bytes", "packets", "bytes_per_packet", "src_port", "dst_port"):
            raise ValidationError(f"parameter field {self.field!r} is not numeric")


@dataclass(frozen=True)
class Observation:
    parameter: Term
    direction: str
    window_start: float
    window_end: float
    mean: float
    baseline_mean: float

    def __post_init__(self):
        if not self.window_end > self.window_start:
            raise ValidationError("window_end must exceed window_start")

    def direction_term(self, ontology: Ontology = DEFAULT) -> Term:
        return ontology.change(self.direction)

    def terms(self, ontology: Ontology = DEFAULT) -> tuple[Term, Term, Term]:
        return self.parameter, ontology.prop("parameterchange"), self.direction_term(ontology)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["parameter"] = self.parameter.value
        return d


def mean_change(mean: float, baseline: float, eps: float) -> str:
    if mean > baseline * (1 + eps):
        return INCREASES
    if mean < baseline * (1 - eps):
        return DECREASES
    return NO_CHANGE


def construct_observations(
    records: Sequence[FlowRecord],
    spec: ParameterSpec,
    window: float,
    baseline_mean: float | None = None,
    eps: float = 0.1,
    policies: Sequence[AdminPolicy] = (),
    origin: float = 0.0,
) -> list[Observation]:
    """One observation per non-empty window ``[origin + k*window, origin + (k+1)*window)``."""
    baseline = spec.baseline_mean if baseline_mean is None else baseline_mean
    if baseline is None or baseline <= 0:
        raise ValidationError(f"baseline_mean must be > 0, got {baseline}")
    if not eps > 0:
        raise ValidationError(f"eps must be > 0, got {eps}")
    if not window > 0:
        raise ValidationError(f"window must be > 0, got {window}")
    buckets: dict[int, list[float]] = {}
    for rec in records:
        if spec.traffic_class is not None and classify(rec, policies) != spec.traffic_class:
            continue
        k = math.floor((rec.timestamp - origin) / window)
        buckets.setdefault(k, []).append(spec.value(rec))
    param = iri(spec.parameter)
    out = []
    for k in sorted(buckets):
        values = buckets[k]
        m = math.fsum(values) / len(values)
        out.append(
            Observation(
                parameter=param,
                direction=mean_change(m, baseline, eps),
                window_start=origin + k * window,
                window_end=origin + (k + 1) * window,
                mean=m,
                baseline_mean=baseline,
            )
        )
    return out


def verify_alignment(obs: Observation, graph: Graph, ontology: Ontology = DEFAULT) -> float:
    """Fraction of the observation's triple terms already in the graph vocabulary."""
    terms = set(obs.terms(ontology))
    return sum(graph.has_term(t) for t in terms) / len(terms)


@dataclass(frozen=True)
class Rejection:
    observation: Observation
    score: float
    threshold: float

    def to_json(self) -> str:
        return json.dumps(
            {"observation": self.observation.to_dict(), "score": self.score, "threshold": self.threshold},
            sort_keys=True,
        )


def observation_triples(obs: Observation, ontology: Ontology = DEFAULT) -> list[Triple]:
    node = ontology.term(f"obs-{ontology.local(obs.parameter)}-{obs.window_start:g}-{obs.window_end:g}")
    return [
        Triple(*obs.terms(ontology)),
        Triple(node, ontology.type, ontology.cls("Observation")),
        Triple(node, ontology.prop("observes"), obs.parameter),
        Triple(node, ontology.prop("parameterchange"), obs.direction_term(ontology)),
        Triple(node, ontology.prop("windowStart"), literal(repr(float(obs.window_start)))),
        Triple(node, ontology.prop("windowEnd"), literal(repr(float(obs.window_end)))),
    ]


def assert_observation(obs: Observation, graph: Graph, threshold: float = 0.5, ontology: Ontology = DEFAULT):
    """Assert ``obs`` plus provenance when aligned; otherwise return a :class:`Rejection`."""
    if not 0.0 <= threshold <= 1.0:
        raise ValidationError(f"threshold must lie in [0, 1], got {threshold}")
    score = verify_alignment(obs, graph, ontology)
    if score < threshold:
        return Rejection(obs, score, threshold)
    graph.update(observation_triples(obs, ontology))
    return graph


@dataclass
class ObservationRun:
    accepted: list[Observation] = field(default_factory=list)
    rejected: list[Rejection] = field(default_factory=list)
