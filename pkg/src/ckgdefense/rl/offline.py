"""Offline training from logged defender transitions.

Transitions are keyed on the defender's view of the game.  The log format
is one JSON object per line::

    {"state": "p0|m0|i0", "action": "monitor(fs)", "reward": 0.0, "next_state": "p0|m1|i0", "done": false}

``done`` is optional and defaults to false.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..kg import Graph
from .evaluate import MetricsReport, greedy_policy
from .families import AttackerFamily
from .game import Game
from .qlearning import QTable
from .shaping import KnowledgeAligner, ShapingConfig


class TransitionError(ValueError):
    pass


@dataclass(frozen=True)
class Transition:
    state: str
    action: int
    reward: float
    next_state: str
    done: bool = False


def collect_transitions(game: Game, family: AttackerFamily, episodes: int, seed: int) -> list[Transition]:
    """Log a uniformly random legal defender playing against ``family``."""
    rng = random.Random(seed)
    attacker = family.policy(game)
    out: list[Transition] = []
    for _ in range(episodes):
        state = family.initial_state(game, rng)
        while True:
            d = rng.choice(game.legal_defender(state))
            a = attacker(game, state, game.legal_attacker(state), rng)
            res = game.step(state, a, d)
            out.append(Transition(game.defender_key(state), d, res.defender_reward, game.defender_key(res.state), res.terminal))
            state = res.state
            if res.terminal:
                break
    return out


def write_transitions(path, transitions: Iterable[Transition], game: Game) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in transitions:
            row = {
                "state": t.state,
                "action": game.defender_names[t.action],
                "reward": t.reward,
                "next_state": t.next_state,
                "done": t.done,
            }
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_transitions(path, game: Game) -> list[Transition]:
    out = []
    text = Path(path).read_text(encoding="utf-8")
    for n, line in enumerate(text.split("\n"), 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            out.append(
                Transition(
                    str(row["state"]),
                    game.defender_index(row["action"]),
                    float(row["reward"]),
                    str(row["next_state"]),
                    bool(row.get("done", False)),
                )
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise TransitionError(f"line {n}: {exc}") from None
    return out


def train_offline(
    transitions: Sequence[Transition],
    graph: Graph | None = None,
    shaping: ShapingConfig | None = None,
    iterations: int = 25,
    game: Game | None = None,
) -> QTable:
    """Fitted tabular Q-iteration over the logged (state, action) pairs.

    The initial value Q0(s, a) is zero, or ``beta * align_bonus(s, a)``
    when a graph is given and ``beta > 0``.  Each sweep sets

        Q(s, a) = (Q0(s, a) + sum of r + gamma * max_a' Q(s', a')) / (n + 1)

    over the ``n`` logged transitions of the pair, so the initial value
    counts as one pseudo-observation and keeps weight where data is thin.
    The max runs over actions logged at ``s'``.
    """
    if not transitions:
        raise TransitionError("transitions must be non-empty")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    cfg = shaping or ShapingConfig()
    n_actions = len(game.defender_actions) if game is not None else 1 + max(t.action for t in transitions)

    # pairs sorted by (state, action) so each state's actions are contiguous
    pairs = sorted({(t.state, t.action) for t in transitions})
    pair_ix = {p: i for i, p in enumerate(pairs)}
    states = sorted({s for s, _ in pairs})
    state_ix = {s: i for i, s in enumerate(states)}
    starts = np.searchsorted(np.array([state_ix[s] for s, _ in pairs]), np.arange(len(states)))

    t_pair = np.array([pair_ix[(t.state, t.action)] for t in transitions])
    t_reward = np.array([t.reward for t in transitions], dtype=float)
    # next-state index, or -1 when the episode ended or the state was never acted in
    t_next = np.array([-1 if t.done or t.next_state not in state_ix else state_ix[t.next_state] for t in transitions])
    live = t_next >= 0
    counts = np.bincount(t_pair, minlength=len(pairs)).astype(float)

    prior = graph is not None and cfg.beta > 0
    if prior and game is None:
        raise ValueError("a game is needed to align logged actions with the graph")
    if prior:
        aligner = KnowledgeAligner(game, graph, cfg.hops)
        init = np.array([cfg.beta * aligner.bonus(game.parse_defender_key(s), a) for s, a in pairs], dtype=float)
    else:
        init = np.zeros(len(pairs))

    values = init.copy()
    gamma = cfg.gamma
    for _ in range(iterations):
        best = np.maximum.reduceat(values, starts)
        boot = np.zeros(len(transitions))
        boot[live] = best[t_next[live]]
        totals = np.bincount(t_pair, weights=t_reward + gamma * boot, minlength=len(pairs))
        values = (init + totals) / (counts + 1.0)

    q = QTable(n_actions)
    for (s, a), v in zip(pairs, values.tolist()):
        q.set(s, a, v)
    return q


def family_rollout(game: Game, defender, family: AttackerFamily, seed: int) -> dict:
    """One greedy episode of ``defender`` (policy or QTable) against a scripted family."""
    if isinstance(defender, QTable):
        defender = greedy_policy(defender, "defender", seen_only=True)
    rng = random.Random(seed)
    attacker = family.policy(game)
    state = family.initial_state(game, rng)
    attempted = detected = 0
    while True:
        d = defender(game, state, game.legal_defender(state), rng)
        a = attacker(game, state, game.legal_attacker(state), rng)
        res = game.step(state, a, d)
        attempted += res.events["attempted_intrusions"]
        detected += res.events["detected_intrusions"]
        state = res.state
        if res.terminal:
            break
    return {
        "seed": seed,
        "availability": game.availability(state),
        "episode_length": state.step,
        "attempted_intrusions": attempted,
        "detected_intrusions": detected,
        "detections": detected,
        "detection_rate": detected / attempted if attempted else None,
    }


def offline_protocol(
    game: Game,
    family: AttackerFamily,
    graph: Graph | None,
    shaping: ShapingConfig | None = None,
    log_episodes: int = 200,
    iterations: int = 25,
    seeds: Sequence[int] = tuple(range(50)),
    log_seed: int = 0,
) -> dict[str, MetricsReport]:
    """Zero-initialised versus knowledge-prior offline training on the same log."""
    log = collect_transitions(game, family, log_episodes, log_seed)
    out = {}
    for label, g in (("zero", None), ("prior", graph)):
        q = train_offline(log, g, shaping, iterations, game)
        rows = [family_rollout(game, q, family, s) for s in seeds]
        out[label] = MetricsReport(rows, f"{family.name}/{label}", extra={"transitions": len(log), "iterations": iterations})
    return out
