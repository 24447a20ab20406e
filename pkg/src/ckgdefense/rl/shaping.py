"""Knowledge-graph alignment of defender actions.

A defender action is aligned when the IRI it targets (a host's vulnerable
attack pattern for ``patch``, an edge's port for ``block``, a host's
monitored parameter for ``monitor``) can be reached from an observed
indicator by following at most ``k`` outgoing graph edges.  Actions that
would change nothing (re-patching, re-blocking, monitoring an isolated
host) have no target.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..kg import Graph, Term
from ..kg.terms import IRI
from .game import Game, GameState


@dataclass(frozen=True)
class ShapingConfig:
    beta: float = 0.3
    hops: int = 2
    gamma: float = 0.95
    alpha: float = 0.1
    epsilon: float = 0.2

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if int(self.hops) != self.hops or self.hops < 1:
            raise ValueError(f"hops must be an integer >= 1, got {self.hops}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 <= self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")


def reachable_within(graph: Graph, sources, k: int) -> set[str]:
    """IRIs (as strings) reachable from ``sources`` in at most ``k`` outgoing hops."""
    frontier = {s for s in sources}
    seen = set(frontier)
    for _ in range(k):
        nxt = set()
        for node in frontier:
            for _p, o in graph.out_edges(Term(IRI, node)):
                if o.is_iri and o.value not in seen:
                    nxt.add(o.value)
        if not nxt:
            break
        seen |= nxt
        frontier = nxt
    return seen


class KnowledgeAligner:
    """Caches the aligned defender actions for each observed-indicator set."""

    def __init__(self, game: Game, graph: Graph, hops: int = 2):
        self.game = game
        self.graph = graph
        self.hops = hops
        self._targets = [game.defender_target(a) for a in game.all_defender]
        self._cache: dict[int, frozenset] = {}

    def aligned(self, indicators: int) -> frozenset:
        hit = self._cache.get(indicators)
        if hit is None:
            if indicators == 0:
                hit = frozenset()
            else:
                reach = reachable_within(self.graph, self.game.observed_indicators(GameState((), 0, 0, indicators)), self.hops)
                hit = frozenset(a for a, t in enumerate(self._targets) if t is not None and t in reach)
            self._cache[indicators] = hit
        return hit

    def aligned_list(self, state: GameState) -> list[int]:
        return [a for a in sorted(self.aligned(state.indicators)) if not self.game.is_noop(state, a)]

    def bonus(self, state: GameState, action: int) -> int:
        return 1 if action in self.aligned(state.indicators) and not self.game.is_noop(state, action) else 0


def align_bonus(state: GameState, action, graph: Graph, k: int, game: Game) -> int:
    """1 when the defender action's target is within ``k`` hops of an observed indicator."""
    idx = game.defender_index(action)
    target = game.defender_target(idx)
    if target is None or not state.indicators or game.is_noop(state, idx):
        return 0
    return 1 if target in reachable_within(graph, game.observed_indicators(state), k) else 0
