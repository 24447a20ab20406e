"""Two-player zero-sum attacker/defender game over a host network.

Moves are simultaneous; inside a tick the defender's action is applied
first, so a block or isolate can pre-empt the attacker's move.  The
defender is paid the change in availability, minus a penalty per newly
compromised host, plus a bonus per detection; the attacker is paid the
exact negation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import kernels as default_kernels
from .scenario import NetworkScenario

STATUS_CHARS = "hcx"  # healthy, compromised, isolated
STATUS_NAMES = ("healthy", "compromised", "isolated")
ATTACKER_VERBS = ("wait", "scan", "exploit", "lateral_move", "exfiltrate")
DEFENDER_VERBS = ("wait", "monitor", "block", "isolate", "patch")

_DKEY_RE = re.compile(r"^p([0-9a-f]+)\|m([0-9a-f]+)\|i([0-9a-f]+)$")
_KEY_RE = re.compile(r"^([hcx]+)\|b([0-9a-f]+)\|p([0-9a-f]+)\|m([0-9a-f]+)\|i([0-9a-f]+)$")


class GameError(ValueError):
    pass


@dataclass(frozen=True)
class RewardConfig:
    compromise_penalty: float = 0.1
    detection_bonus: float = 0.5

    @property
    def r_max(self) -> float:
        """Bound on |reward| for a single tick."""
        return max(1.0 + self.compromise_penalty, 1.0 + self.detection_bonus)


@dataclass(frozen=True)
class GameState:
    status: tuple[int, ...]
    blocked: int = 0
    patched: int = 0
    indicators: int = 0
    step: int = 0
    monitored: int = 0


@dataclass
class StepResult:
    state: GameState
    defender_reward: float
    attacker_reward: float
    events: dict = field(default_factory=dict)
    terminal: bool = False


class Game:
    def __init__(self, scenario: NetworkScenario, rewards: RewardConfig | None = None, kernels=None):
        self.scenario = scenario
        self.rewards = rewards or RewardConfig()
        self.k = kernels or default_kernels
        sc = scenario
        n = sc.n_hosts
        self.n = n
        self.edges = [(sc.index(e.a), sc.index(e.b)) for e in sc.edges]
        if n > 62 or len(self.edges) > 62:
            raise GameError("scenarios are limited to 62 hosts and 62 edges")
        self.universe = sc.indicator_universe()
        if len(self.universe) > 62:
            raise GameError("too many distinct indicators")
        bit = {iri: i for i, iri in enumerate(self.universe)}
        lateral_mask = 0
        for s in sc.lateral_signatures:
            lateral_mask |= 1 << bit[s]
        sig_mask = []
        for h in sc.hosts:
            ap = sc.vulnerable.get(h.id)
            sigs = sc.signatures.get(ap, ()) if ap else ()
            m = 0
            for s in sigs:
                m |= 1 << bit[s]
            sig_mask.append(m if sigs else lateral_mask)

        ids = sc.host_ids
        att = [(0, 0, 0), (1, 0, 0)]
        att += [(2, h, 0) for h in range(n)]
        for a, b in self.edges:
            att += [(3, a, b), (3, b, a)]
        att += [(4, h, 0) for h in range(n)]
        self.attacker_actions = att
        self.attacker_names = [self._att_name(k, a, b, ids) for k, a, b in att]

        dfn = [(0, 0, 0)]
        dfn += [(1, h, 0) for h in range(n)]
        dfn += [(2, e, 0) for e in range(len(self.edges))]
        dfn += [(3, h, 0) for h in range(n)]
        dfn += [(4, h, 0) for h in range(n)]
        self.defender_actions = dfn
        self.defender_names = [self._def_name(k, a, ids) for k, a, _ in dfn]
        self.all_defender = list(range(len(dfn)))
        self._att_index = {name: i for i, name in enumerate(self.attacker_names)}
        self._def_index = {name: i for i, name in enumerate(self.defender_names)}

        self.layout = self.k.make_layout(
            n,
            sc.index(sc.gateway),
            [h.weight for h in sc.hosts],
            [1 if h.id in sc.vulnerable else 0 for h in sc.hosts],
            [a for a, _ in self.edges],
            [b for _, b in self.edges],
            sig_mask,
            lateral_mask,
            [k for k, _, _ in att],
            [a for _, a, _ in att],
            [b for _, _, b in att],
        )

    def _att_name(self, kind, a, b, ids):
        if kind == 2:
            return f"exploit({ids[a]})"
        if kind == 3:
            return f"lateral_move({ids[a]},{ids[b]})"
        if kind == 4:
            return f"exfiltrate({ids[a]})"
        return ATTACKER_VERBS[kind]

    def _def_name(self, kind, a, ids):
        if kind == 2:
            ea, eb = self.edges[a]
            return f"block({ids[ea]},{ids[eb]})"
        if kind == 0:
            return "wait"
        return f"{DEFENDER_VERBS[kind]}({ids[a]})"

    def attacker_index(self, action) -> int:
        if isinstance(action, int):
            return action
        if action not in self._att_index:
            raise GameError(f"unknown attacker action {action!r}")
        return self._att_index[action]

    def defender_index(self, action) -> int:
        if isinstance(action, int):
            return action
        if action not in self._def_index:
            raise GameError(f"unknown defender action {action!r}")
        return self._def_index[action]

    def initial_state(self, entry: str | None = None) -> GameState:
        status = [0] * self.n
        for h in self.scenario.initial_compromised:
            status[self.scenario.index(h)] = 1
        if entry is not None:
            status[self.scenario.index(entry)] = 1
        return GameState(tuple(status))

    def sample_initial(self, rng) -> GameState:
        """Initial state with one entry point drawn from ``rng`` (if the scenario lists any)."""
        entries = self.scenario.entry_points
        return self.initial_state(rng.choice(entries) if entries else None)

    def availability(self, state: GameState) -> float:
        return self.k.availability(self.layout, state.status, state.blocked)

    def legal_attacker(self, state: GameState) -> list[int]:
        return self.k.legal_attacker(self.layout, state.status, state.blocked, state.patched)

    def is_terminal(self, state: GameState) -> bool:
        return state.step >= self.scenario.horizon or 1 not in state.status

    def observed_indicators(self, state: GameState) -> set[str]:
        return {iri for i, iri in enumerate(self.universe) if (state.indicators >> i) & 1}

    def step(self, state: GameState, attacker_action, defender_action) -> StepResult:
        if state.step >= self.scenario.horizon:
            raise GameError(f"step {state.step} is past the horizon {self.scenario.horizon}")
        ai = self.attacker_index(attacker_action)
        di = self.defender_index(defender_action)
        ak, aa, ab = self.attacker_actions[ai]
        dk, da, db = self.defender_actions[di]
        before = self.k.availability(self.layout, state.status, state.blocked)
        status, blocked, patched, monitored, indicators, newly, detections, attempted, detected, legal, succeeded = self.k.resolve(
            self.layout, state.status, state.blocked, state.patched, state.monitored, state.indicators, ak, aa, ab, dk, da, db
        )
        after = self.k.availability(self.layout, status, blocked)
        rc = self.rewards
        reward = after - before - rc.compromise_penalty * newly + rc.detection_bonus * detections
        nxt = GameState(status, blocked, patched, indicators, state.step + 1, monitored)
        events = {
            "attacker_action": self.attacker_names[ai],
            "defender_action": self.defender_names[di],
            "attacker_legal": bool(legal),
            "newly_compromised": newly,
            "detections": detections,
            "attempted_intrusions": attempted,
            "detected_intrusions": detected,
            "intrusion_succeeded": succeeded,
            "availability": after,
        }
        return StepResult(nxt, reward, -reward, events, self.is_terminal(nxt))

    def state_key(self, state: GameState) -> str:
        """Full-information key (the attacker's view)."""
        chars = "".join(STATUS_CHARS[s] for s in state.status)
        return f"{chars}|b{state.blocked:x}|p{state.patched:x}|m{state.monitored:x}|i{state.indicators:x}"

    def defender_key(self, state: GameState) -> str:
        """The defender's view: compromise is hidden, only its own effects and indicators show."""
        return f"p{state.patched:x}|m{state.monitored:x}|i{state.indicators:x}"

    def parse_state_key(self, key: str) -> GameState:
        m = _KEY_RE.match(key)
        if m is None or len(m.group(1)) != self.n:
            raise GameError(f"bad state key {key!r}")
        status = tuple(STATUS_CHARS.index(c) for c in m.group(1))
        return GameState(status, int(m.group(2), 16), int(m.group(3), 16), int(m.group(5), 16), monitored=int(m.group(4), 16))

    def legal_defender(self, state: GameState) -> list[int]:
        """Defender actions that would change something (``wait`` is always legal)."""
        return [d for d in self.all_defender if not self.is_noop(state, d)]

    def parse_defender_key(self, key: str) -> GameState:
        """Rebuild what the defender's view records; hidden fields come back as defaults."""
        m = _DKEY_RE.match(key)
        if m is None:
            raise GameError(f"bad defender key {key!r}")
        return GameState((0,) * self.n, 0, int(m.group(1), 16), int(m.group(3), 16), monitored=int(m.group(2), 16))

    def is_noop(self, state: GameState, action: int) -> bool:
        """True when the defender action cannot change ``state``."""
        kind, a, _ = self.defender_actions[action]
        if kind == 3:
            return state.status[a] == 2
        if kind == 2:
            return bool((state.blocked >> a) & 1)
        if kind == 4:
            return bool((state.patched >> a) & 1) and state.status[a] == 0
        if kind == 1:
            return bool((state.monitored >> a) & 1) or state.status[a] == 2
        return False

    def defender_target(self, action: int) -> str | None:
        """CKG IRI a defender action is aimed at, if it has one."""
        kind, a, _ = self.defender_actions[action]
        sc = self.scenario
        if kind == 1:
            return sc.hosts[a].parameter
        if kind == 2:
            return sc.edges[a].port
        if kind == 4:
            return sc.vulnerable.get(sc.hosts[a].id)
        return None

    def describe(self, state: GameState) -> dict:
        return {
            "hosts": {h: STATUS_NAMES[s] for h, s in zip(self.scenario.host_ids, state.status)},
            "blocked": [self.defender_names[1 + self.n + e] for e in range(len(self.edges)) if (state.blocked >> e) & 1],
            "patched": [h for i, h in enumerate(self.scenario.host_ids) if (state.patched >> i) & 1],
            "observed_indicators": sorted(self.observed_indicators(state)),
            "step": state.step,
        }


def game_for(scenario: NetworkScenario) -> Game:
    g = getattr(scenario, "_game", None)
    if g is None:
        g = Game(scenario)
        scenario._game = g
    return g


def step(state: GameState, scenario: NetworkScenario, attacker_action, defender_action):
    """Functional form: returns ``(next_state, defender_reward, events)``."""
    res = game_for(scenario).step(state, attacker_action, defender_action)
    return res.state, res.defender_reward, res.events
