"""Tabular Q-learning self-play with optional knowledge-graph shaping."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field

from ..kg import Graph
from .game import Game, GameState
from .scenario import NetworkScenario
from .shaping import KnowledgeAligner, ShapingConfig


class QTable:
    """Sparse action-value table keyed by (state key, action index); missing entries read as 0."""

    def __init__(self, n_actions: int):
        self.n_actions = n_actions
        self.rows: dict[str, dict[int, float]] = {}

    def get(self, key: str, action: int) -> float:
        row = self.rows.get(key)
        return row.get(action, 0.0) if row else 0.0

    def set(self, key: str, action: int, value: float) -> None:
        self.rows.setdefault(key, {})[action] = value

    def best_value(self, key: str, actions) -> float:
        row = self.rows.get(key)
        if not row:
            return 0.0
        get = row.get
        return max(get(a, 0.0) for a in actions)

    def greedy(self, key: str, actions, rng: random.Random) -> int:
        row = self.rows.get(key)
        if not row:
            return actions[0] if len(actions) == 1 else rng.choice(actions)
        get = row.get
        vals = [get(a, 0.0) for a in actions]
        m = max(vals)
        best = [a for a, v in zip(actions, vals) if v == m]
        return best[0] if len(best) == 1 else rng.choice(best)

    def items(self):
        for key in sorted(self.rows):
            row = self.rows[key]
            for a in sorted(row):
                yield (key, a), row[a]

    def __len__(self) -> int:
        return sum(len(r) for r in self.rows.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, QTable) and self.n_actions == other.n_actions and self.rows == other.rows

    def max_abs(self) -> float:
        return max((abs(v) for r in self.rows.values() for v in r.values()), default=0.0)

    def to_dict(self) -> dict:
        return {"n_actions": self.n_actions, "entries": [[k, a, v] for (k, a), v in self.items()]}

    @classmethod
    def from_dict(cls, d: dict) -> QTable:
        q = cls(int(d["n_actions"]))
        for k, a, v in d["entries"]:
            q.set(k, int(a), float(v))
        return q


@dataclass
class EpisodeRecord:
    length: int
    availability: float
    detections: int
    attempted: int
    detected: int
    defender_return: float

    @property
    def detection_rate(self) -> float | None:
        return self.detected / self.attempted if self.attempted else None


@dataclass
class TrainingMetrics:
    episodes: list[EpisodeRecord] = field(default_factory=list)
    trajectories: list[list[tuple[int, int]]] | None = None
    updates: dict = field(default_factory=lambda: {"defender": 0, "attacker": 0})

    @property
    def lengths(self) -> list[int]:
        return [e.length for e in self.episodes]

    @property
    def availabilities(self) -> list[float]:
        return [e.availability for e in self.episodes]

    def to_dict(self) -> dict:
        return {"episodes": [asdict(e) for e in self.episodes], "updates": dict(self.updates)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _choose(q: QTable, key: str, actions, eps: float, rng: random.Random, aligned=None) -> int:
    if rng.random() < eps:
        if aligned:
            row = q.rows.get(key, ())
            untried = [a for a in aligned if a not in row]
            if untried:
                return rng.choice(untried)
        return rng.choice(actions)
    return q.greedy(key, actions, rng)


def train_selfplay(
    scenario: NetworkScenario | Game,
    shaping: ShapingConfig | None = None,
    graph: Graph | None = None,
    episodes: int = 500,
    seed: int = 0,
    record_trajectories: bool = False,
) -> tuple[QTable, QTable, TrainingMetrics]:
    """Train defender and attacker tables by ε-greedy self-play.

    With a graph and ``beta > 0`` the defender's reward becomes
    ``r + beta * align_bonus`` and its exploratory moves are drawn from the
    knowledge-aligned actions when any exist.  ``beta == 0`` reproduces the
    unguided run exactly.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    cfg = shaping or ShapingConfig()
    game = scenario if isinstance(scenario, Game) else Game(scenario)
    rng = random.Random(seed)
    guided = graph is not None and cfg.beta > 0
    aligner = KnowledgeAligner(game, graph, cfg.hops) if guided else None
    beta, gamma, alpha, eps = cfg.beta, cfg.gamma, cfg.alpha, cfg.epsilon

    dq = QTable(len(game.defender_actions))
    aq = QTable(len(game.attacker_actions))
    metrics = TrainingMetrics(trajectories=[] if record_trajectories else None)
    key_of, dkey_of = game.state_key, game.defender_key
    for _ in range(episodes):
        state = game.sample_initial(rng)
        key, dkey = key_of(state), dkey_of(state)
        legal_att = game.legal_attacker(state)
        traj = [] if record_trajectories else None
        detections = attempted = detected = 0
        ret = 0.0
        while True:
            aligned = aligner.aligned_list(state) if guided else None
            legal_def = game.legal_defender(state)
            d = _choose(dq, dkey, legal_def, eps, rng, aligned)
            a = _choose(aq, key, legal_att, eps, rng)
            res = game.step(state, a, d)
            r = res.defender_reward
            nxt = res.state
            nkey, ndkey = key_of(nxt), dkey_of(nxt)
            next_legal = game.legal_attacker(nxt)
            shaped = r + beta * aligner.bonus(state, d) if guided else r
            if res.terminal:
                d_target, a_target = shaped, -r
            else:
                d_target = shaped + gamma * dq.best_value(ndkey, game.legal_defender(nxt))
                a_target = -r + gamma * aq.best_value(nkey, next_legal)
            old = dq.get(dkey, d)
            dq.set(dkey, d, old + alpha * (d_target - old))
            old = aq.get(key, a)
            aq.set(key, a, old + alpha * (a_target - old))
            metrics.updates["defender"] += 1
            metrics.updates["attacker"] += 1
            ev = res.events
            detections += ev["detections"]
            attempted += ev["attempted_intrusions"]
            detected += ev["detected_intrusions"]
            ret += r
            if traj is not None:
                traj.append((a, d))
            state, key, dkey, legal_att = nxt, nkey, ndkey, next_legal
            if res.terminal:
                break
        metrics.episodes.append(EpisodeRecord(state.step, game.availability(state), detections, attempted, detected, ret))
        if traj is not None:
            metrics.trajectories.append(traj)
    return dq, aq, metrics
