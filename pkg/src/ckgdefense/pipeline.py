"""Flows to rules: observe, verify, hypothesize, score, rank, emit."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .kg import Graph
from .observe import (
    NO_CHANGE,
    AdminPolicy,
    FlowRecord,
    Observation,
    Rejection,
    assert_observation,
    construct_observations,
)
from .rules import (
    FIRST_LOCAL_SID,
    CorrelationScorer,
    Hypothesis,
    Scorer,
    ScoredEntailment,
    emit_rule,
    extract_hypotheses,
    form_entailment,
    rank,
)

STAGES = ("observe", "verify", "hypothesize", "score", "rank", "emit")


class PipelineError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass
class PipelineResult:
    observations: list[Observation] = field(default_factory=list)
    accepted: list[Observation] = field(default_factory=list)
    rejected: list[Rejection] = field(default_factory=list)
    hypotheses: list[Hypothesis] = field(default_factory=list)
    ranked: list[ScoredEntailment] = field(default_factory=list)
    rules: list[str] = field(default_factory=list)

    def rules_text(self) -> str:
        return "".join(r + "\n" for r in self.rules)

    def ranked_json(self) -> str:
        by_id = {h.id: h for h in self.hypotheses}
        rows = []
        for i, s in enumerate(self.ranked, 1):
            row = {"rank": i, "sid": FIRST_LOCAL_SID + i - 1, **s.to_dict(), "hypothesis": by_id[s.hypothesis_id].to_dict()}
            rows.append(row)
        return json.dumps(rows, indent=2, sort_keys=True) + "\n"


def run_pipeline(
    graph: Graph,
    records: Sequence[FlowRecord],
    policies: Sequence[AdminPolicy],
    config,
    scorer: Scorer | None = None,
) -> PipelineResult:
    """Run every stage; the input graph is left untouched."""
    ont = config.ontology()
    res = PipelineResult()
    stage = "observe"
    try:
        for spec in config.parameters:
            res.observations.extend(
                construct_observations(records, spec, config.window, eps=config.eps, policies=policies)
            )

        stage = "verify"
        work = graph.copy()
        for obs in res.observations:
            out = assert_observation(obs, work, config.threshold, ont)
            if isinstance(out, Rejection):
                res.rejected.append(out)
            else:
                res.accepted.append(obs)

        stage = "hypothesize"
        res.hypotheses = extract_hypotheses(work, res.accepted, ont)

        stage = "score"
        scorer = scorer or CorrelationScorer(config.scorer_weights, ont)
        scored = []
        for h in res.hypotheses:
            seq = [o for o in res.accepted if o.parameter == h.parameter and o.direction != NO_CHANGE]
            scored.append(scorer.score(form_entailment(h, seq, ont), work))

        stage = "rank"
        res.ranked = rank(scored)

        stage = "emit"
        by_id = {h.id: h for h in res.hypotheses}
        res.rules = [emit_rule(by_id[s.hypothesis_id], FIRST_LOCAL_SID + i) for i, s in enumerate(res.ranked)]
    except PipelineError:
        raise
    except (ValueError, KeyError) as exc:
        raise PipelineError(stage, str(exc)) from exc
    return res
