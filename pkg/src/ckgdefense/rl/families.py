"""Scripted attacker behaviour profiles ("families").

A family picks its move by walking a priority list of action kinds and
taking the first kind with a legal move, preferring listed target hosts.
With probability ``noise`` it plays a uniformly random legal move instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .game import ATTACKER_VERBS, Game


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class AttackerFamily:
    name: str
    entry_points: tuple[str, ...]
    priority: tuple[str, ...]
    targets: tuple[str, ...] = ()
    noise: float = 0.1

    def __post_init__(self):
        if not self.entry_points:
            raise FamilyError(f"family {self.name!r} has no entry points")
        for verb in self.priority:
            if verb not in ATTACKER_VERBS:
                raise FamilyError(f"family {self.name!r}: unknown action kind {verb!r}")
        if not 0 <= self.noise <= 1:
            raise FamilyError(f"family {self.name!r}: noise must lie in [0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> AttackerFamily:
        try:
            return cls(
                name=str(d["name"]),
                entry_points=tuple(d["entry_points"]),
                priority=tuple(d["priority"]),
                targets=tuple(d.get("targets", ())),
                noise=float(d.get("noise", 0.1)),
            )
        except KeyError as exc:
            raise FamilyError(f"family is missing field {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "entry_points": list(self.entry_points),
            "priority": list(self.priority),
            "targets": list(self.targets),
            "noise": self.noise,
        }

    def check(self, game: Game) -> None:
        known = set(game.scenario.host_ids)
        for h in self.entry_points + self.targets:
            if h not in known:
                raise FamilyError(f"family {self.name!r} names unknown host {h!r}")

    def initial_state(self, game: Game, rng):
        return game.initial_state(rng.choice(self.entry_points))

    def policy(self, game: Game):
        """Attacker policy callable ``(game, state, legal, rng) -> action index``."""
        self.check(game)
        ids = game.scenario.host_ids
        rank = {h: i for i, h in enumerate(self.targets)}
        kinds = [ATTACKER_VERBS.index(v) for v in self.priority]

        def target_rank(action: int) -> int:
            kind, a, b = game.attacker_actions[action]
            host = ids[b] if kind == 3 else ids[a]
            return rank.get(host, len(rank))

        def act(game_, state, legal, rng):
            if rng.random() < self.noise:
                return rng.choice(legal)
            for kind in kinds:
                cands = [a for a in legal if game.attacker_actions[a][0] == kind]
                if cands:
                    best = min(target_rank(a) for a in cands)
                    cands = [a for a in cands if target_rank(a) == best]
                    return cands[0] if len(cands) == 1 else rng.choice(cands)
            return 0

        return act


def load_families(path) -> list[AttackerFamily]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    items = data["families"] if isinstance(data, dict) else data
    fams = [AttackerFamily.from_dict(d) for d in items]
    names = [f.name for f in fams]
    if len(set(names)) != len(names):
        raise FamilyError("duplicate family names")
    return fams
