"""Hypothesis extraction, entailment scoring and SNORT-style rule emission."""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

from .kg import Graph, Ontology, Term, Triple
from .kg.ontology import DEFAULT
from .kg.terms import ValidationError
from .observe import NO_CHANGE, Observation

START = "[START]"
SEP = "[SEP]"
LINK_PREDICATES = ("indicates", "targets", "parameterchange")
FIRST_LOCAL_SID = 1000001
DEFAULT_WEIGHTS = (0.5, 0.25, 0.25)


@dataclass(frozen=True)
class Target:
    """Port descriptor (protocol/port) or, when no port is known, a parameter."""

    iri: Term
    protocol: str | None = None
    port: int | None = None

    def token(self) -> str:
        return self.iri.value


@dataclass(frozen=True)
class Hypothesis:
    id: str
    malware: Term
    attack_pattern: Term
    parameter: Term
    evidence_terms: frozenset
    action: str
    target: Target

    def tokens(self, ontology: Ontology = DEFAULT) -> list[str]:
        return [
            self.malware.value,
            ontology.prop("uses").value,
            self.attack_pattern.value,
            self.action,
            self.target.token(),
        ]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "malware": self.malware.value,
            "attack_pattern": self.attack_pattern.value,
            "parameter": self.parameter.value,
            "evidence_terms": sorted(t.value for t in self.evidence_terms),
            "action": self.action,
            "target": self.target.token(),
        }


def hypothesis_id(malware: Term, attack_pattern: Term, parameter: Term) -> str:
    digest = hashlib.sha256(f"{malware.value}|{attack_pattern.value}|{parameter.value}".encode()).hexdigest()
    return "h-" + digest[:12]


def _linked(graph: Graph, a: Term, b: Term, preds: Sequence[Term]) -> bool:
    return any(Triple(a, p, b) in graph or Triple(b, p, a) in graph for p in preds)


def _port_target(graph: Graph, ap: Term, ontology: Ontology) -> Target | None:
    proto_p, port_p = ontology.prop("protocol"), ontology.prop("port")
    for t in sorted(graph.objects(ap, ontology.prop("targets"))):
        protos = sorted(o.value for o in graph.objects(t, proto_p))
        ports = sorted(o.value for o in graph.objects(t, port_p))
        if not protos and not ports:
            continue
        port = int(ports[0]) if ports and ports[0].isdigit() else None
        return Target(t, protos[0] if protos else None, port)
    return None


def extract_hypotheses(graph: Graph, observations: Iterable[Observation], ontology: Ontology = DEFAULT) -> list[Hypothesis]:
    """One hypothesis per (malware, attack pattern, observed parameter), sorted by id."""
    uses = ontology.prop("uses")
    link_preds = [ontology.prop(p) for p in LINK_PREDICATES]
    ap_class = ontology.cls("AttackPattern")
    out: dict[str, Hypothesis] = {}
    for obs in observations:
        if obs.direction == NO_CHANGE:
            continue
        param = obs.parameter
        candidates = set()
        for p in link_preds:
            candidates.update(graph.subjects(p, param))
            candidates.update(graph.objects(param, p))
        for ap in sorted(candidates):
            if not (ap.is_iri and Triple(ap, ontology.type, ap_class) in graph):
                continue
            if not _linked(graph, ap, param, link_preds):
                continue
            mitigated = bool(graph.subjects(ontology.prop("mitigates"), ap))
            target = _port_target(graph, ap, ontology) or Target(param)
            indicators = graph.subjects(ontology.prop("indicates"), ap)
            for malware in sorted(graph.subjects(uses, ap)):
                hid = hypothesis_id(malware, ap, param)
                if hid in out:
                    continue
                evidence = {param, *indicators, *graph.objects(malware, ontology.prop("hasHash"))}
                out[hid] = Hypothesis(
                    id=hid,
                    malware=malware,
                    attack_pattern=ap,
                    parameter=param,
                    evidence_terms=frozenset(evidence),
                    action="block" if mitigated else "alert",
                    target=target,
                )
    return [out[k] for k in sorted(out)]


@dataclass(frozen=True)
class Entailment:
    tokens: tuple[str, ...]
    hypothesis_id: str

    def __post_init__(self):
        toks = self.tokens
        if not toks or toks[0] != START:
            raise ValidationError("entailment must begin with [START]")
        if toks.count(SEP) != 1:
            raise ValidationError("entailment needs exactly one [SEP]")
        if toks.count(START) != 1:
            raise ValidationError("[START] may only appear first")
        i = toks.index(SEP)
        if i == 1 or i == len(toks) - 1:
            raise ValidationError("entailment segments must be non-empty")
        if any(not t for t in toks):
            raise ValidationError("empty token")

    @property
    def hypothesis_tokens(self) -> tuple[str, ...]:
        return self.tokens[1 : self.tokens.index(SEP)]

    @property
    def observation_tokens(self) -> tuple[str, ...]:
        return self.tokens[self.tokens.index(SEP) + 1 :]


def form_entailment(h: Hypothesis, obs_seq: Sequence[Observation], ontology: Ontology = DEFAULT) -> Entailment:
    if not obs_seq:
        raise ValidationError("observation sequence is empty")
    tokens = [START, *h.tokens(ontology), SEP]
    for obs in sorted(obs_seq, key=lambda o: (o.window_start, o.window_end, o.parameter.value)):
        tokens.extend([obs.parameter.value, obs.direction_term(ontology).value])
    return Entailment(tuple(tokens), h.id)


@dataclass(frozen=True)
class ScoredEntailment:
    entailment: Entailment
    hypothesis_id: str
    score: float
    score_parts: tuple[float, float, float]

    def to_dict(self) -> dict:
        cosine, support, match = self.score_parts
        return {
            "hypothesis_id": self.hypothesis_id,
            "score": self.score,
            "score_parts": {"cosine": cosine, "support": support, "match_rate": match},
        }


class Scorer(Protocol):
    def score(self, e: Entailment, graph: Graph) -> ScoredEntailment: ...


def combine(parts: Sequence[float], weights: Sequence[float] = DEFAULT_WEIGHTS) -> float:
    """Weighted sum of the score parts, clamped to [0, 1]."""
    return min(1.0, max(0.0, math.fsum(w * p for w, p in zip(weights, parts))))


def bag_cosine(a: Sequence[str], b: Sequence[str]) -> float:
    ca, cb = Counter(a), Counter(b)
    dot = sum(ca[t] * cb[t] for t in ca.keys() & cb.keys())
    if dot == 0:
        return 0.0
    norm = math.sqrt(sum(v * v for v in ca.values())) * math.sqrt(sum(v * v for v in cb.values()))
    return min(1.0, dot / norm)


@dataclass
class CorrelationScorer:
    """Deterministic scorer: weighted token cosine, graph support and neighbourhood match."""

    weights: tuple[float, float, float] = DEFAULT_WEIGHTS
    ontology: Ontology = field(default=DEFAULT)

    def __post_init__(self):
        self.weights = tuple(float(w) for w in self.weights)
        if len(self.weights) != 3 or any(w < 0 for w in self.weights) or not math.isclose(sum(self.weights), 1.0):
            raise ValidationError(f"scorer weights must be three non-negative numbers summing to 1, got {self.weights}")

    def hypothesis_triples(self, e: Entailment) -> list[Triple]:
        if len(e.hypothesis_tokens) != 5:
            raise ValidationError("expected five hypothesis tokens: malware, uses, attack pattern, action, target")
        malware, uses, ap, _action, target = e.hypothesis_tokens
        out = [Triple(Term("iri", malware), Term("iri", uses), Term("iri", ap))]
        out.append(Triple(Term("iri", ap), self.ontology.prop("targets"), Term("iri", target)))
        return out

    def neighbourhood(self, e: Entailment, graph: Graph) -> set[str]:
        malware, _uses, ap = e.hypothesis_tokens[:3]
        seen = {malware, ap}
        for node in (malware, ap):
            t = Term("iri", node)
            seen.update(o.value for _p, o in graph.out_edges(t))
            seen.update(s.value for s, _p in graph.in_edges(t))
        return seen

    def score(self, e: Entailment, graph: Graph) -> ScoredEntailment:
        cosine = bag_cosine(e.hypothesis_tokens, e.observation_tokens)
        triples = self.hypothesis_triples(e)
        support = sum(t in graph for t in triples) / len(triples)
        hood = self.neighbourhood(e, graph)
        obs = e.observation_tokens
        match = sum(t in hood for t in obs) / len(obs)
        parts = (cosine, support, match)
        return ScoredEntailment(e, e.hypothesis_id, combine(parts, self.weights), parts)


def score(e: Entailment, graph: Graph, scorer: Scorer | None = None) -> ScoredEntailment:
    return (scorer or CorrelationScorer()).score(e, graph)


def rank(scored: Iterable[ScoredEntailment]) -> list[ScoredEntailment]:
    return sorted(scored, key=lambda s: (-s.score, s.hypothesis_id))


def rank_and_select(scored: Sequence[ScoredEntailment]) -> str:
    if not scored:
        raise ValidationError("nothing to rank")
    return rank(scored)[0].hypothesis_id


@dataclass(frozen=True)
class Rule:
    action: str
    protocol: str
    src: str
    src_port: str
    dst: str
    dst_port: str
    options: tuple[tuple[str, str], ...]

    def render(self) -> str:
        opts = " ".join(f"{k}:{v};" for k, v in self.options)
        return f"{self.action} {self.protocol} {self.src} {self.src_port} -> {self.dst} {self.dst_port} ({opts})"


def _msg_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace(";", "\\;")


def build_rule(h: Hypothesis, sid: int) -> Rule:
    if sid < FIRST_LOCAL_SID:
        raise ValidationError(f"local rule sids start at {FIRST_LOCAL_SID}, got {sid}")
    action = "drop" if h.action == "block" else "alert"
    proto = h.target.protocol if h.target.protocol in ("tcp", "udp", "icmp", "ip") else "ip"
    dport = str(h.target.port) if h.target.port is not None else "any"
    msg = f'"{_msg_escape(h.malware.value)} via {_msg_escape(h.attack_pattern.value)}"'
    return Rule(action, proto, "any", "any", "any", dport, (("msg", msg), ("sid", str(sid)), ("rev", "1")))


def emit_rule(h: Hypothesis, sid: int) -> str:
    return build_rule(h, sid).render()
