"""Greedy rollouts and the metrics report."""

from __future__ import annotations

import json
import random
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .game import Game
from .qlearning import QTable
from .scenario import NetworkScenario

# (game, state, legal action indices, rng) -> action index
Policy = Callable


def greedy_policy(q: QTable, view: str = "attacker", seen_only: bool = False) -> Policy:
    """Greedy policy over ``q``; ``view`` picks the state key the table was trained on.

    With ``seen_only`` the choice is limited to actions that have an entry
    in the table for that state (when there are any), as offline-trained
    tables know nothing about the others.
    """

    def act(game, state, legal, rng):
        key = game.defender_key(state) if view == "defender" else game.state_key(state)
        if seen_only:
            row = q.rows.get(key)
            if row:
                seen = [a for a in legal if a in row]
                if seen:
                    return q.greedy(key, seen, rng)
        return q.greedy(key, legal, rng)

    return act


def _as_policy(p, view: str) -> Policy:
    return greedy_policy(p, view) if isinstance(p, QTable) else p


def rollout(game: Game, defender: Policy, attacker: Policy, seed: int) -> dict:
    rng = random.Random(seed)
    state = game.sample_initial(rng)
    attempted = detected = detections = 0
    while True:
        legal = game.legal_attacker(state)
        d = defender(game, state, game.legal_defender(state), rng)
        a = attacker(game, state, legal, rng)
        res = game.step(state, a, d)
        ev = res.events
        attempted += ev["attempted_intrusions"]
        detected += ev["detected_intrusions"]
        detections += ev["detections"]
        state = res.state
        if res.terminal:
            break
    return {
        "seed": seed,
        "availability": game.availability(state),
        "episode_length": state.step,
        "attempted_intrusions": attempted,
        "detected_intrusions": detected,
        "detections": detections,
        "detection_rate": detected / attempted if attempted else None,
    }


def _summary(values: list[float]) -> dict | None:
    if not values:
        return None
    return {"mean": statistics.fmean(values), "std": statistics.pstdev(values) if len(values) > 1 else 0.0}


@dataclass
class MetricsReport:
    per_seed: list[dict]
    label: str = ""
    wall_clock_s: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def availability(self) -> dict:
        return _summary([r["availability"] for r in self.per_seed])

    @property
    def episode_length(self) -> dict:
        return _summary([r["episode_length"] for r in self.per_seed])

    @property
    def detection_rate(self) -> dict | None:
        return _summary([r["detection_rate"] for r in self.per_seed if r["detection_rate"] is not None])

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "label": self.label,
            "availability": self.availability,
            "episode_length": self.episode_length,
            "detection_rate": self.detection_rate,
            "per_seed": self.per_seed,
        }
        if self.extra:
            d["config"] = self.extra
        if include_timing and self.wall_clock_s is not None:
            d["wall_clock_s"] = self.wall_clock_s
        return d

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> MetricsReport:
        return cls(per_seed=list(d["per_seed"]), label=d.get("label", ""), wall_clock_s=d.get("wall_clock_s"), extra=d.get("config", {}))


def evaluate(
    defender,
    attacker,
    scenario: NetworkScenario | Game,
    seeds: Sequence[int],
    label: str = "",
) -> MetricsReport:
    """Greedy rollout per seed; ties between equal action values are broken by the seeded RNG."""
    if not seeds:
        raise ValueError("seeds must be non-empty")
    game = scenario if isinstance(scenario, Game) else Game(scenario)
    t0 = time.perf_counter()
    rows = [rollout(game, _as_policy(defender, "defender"), _as_policy(attacker, "attacker"), s) for s in seeds]
    return MetricsReport(rows, label, time.perf_counter() - t0)
