"""Network scenarios for the attacker/defender game."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Host:
    id: str
    services: tuple[tuple[str, float], ...]
    parameter: str | None = None

    @property
    def weight(self) -> float:
        return math.fsum(w for _, w in self.services)


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    port: str | None = None


@dataclass
class NetworkScenario:
    hosts: list[Host]
    edges: list[Edge]
    vulnerable: dict[str, str]
    initial_compromised: frozenset
    horizon: int
    gateway: str | None = None
    signatures: dict[str, tuple[str, ...]] = field(default_factory=dict)
    lateral_signatures: tuple[str, ...] = ()
    name: str = "scenario"
    # one of these is compromised at the start of each episode, in addition to initial_compromised
    entry_points: tuple[str, ...] = ()

    def __post_init__(self):
        ids = [h.id for h in self.hosts]
        if not ids:
            raise ScenarioError("scenario has no hosts")
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate host ids")
        if self.gateway is None:
            self.gateway = ids[0]
        known = set(ids)
        if self.gateway not in known:
            raise ScenarioError(f"unknown gateway {self.gateway!r}")
        for e in self.edges:
            if e.a not in known or e.b not in known or e.a == e.b:
                raise ScenarioError(f"bad edge {e.a}-{e.b}")
        pairs = [frozenset((e.a, e.b)) for e in self.edges]
        if len(set(pairs)) != len(pairs):
            raise ScenarioError("duplicate edges")
        for h, ap in self.vulnerable.items():
            if h not in known:
                raise ScenarioError(f"vulnerable map names unknown host {h!r}")
        for h in self.initial_compromised:
            if h not in known:
                raise ScenarioError(f"unknown initially compromised host {h!r}")
        for h in self.entry_points:
            if h not in known:
                raise ScenarioError(f"unknown entry point {h!r}")
        if self.horizon < 1:
            raise ScenarioError("horizon must be >= 1")
        for hst in self.hosts:
            if any(w < 0 for _, w in hst.services):
                raise ScenarioError(f"negative service weight on {hst.id}")
        total = math.fsum(h.weight for h in self.hosts)
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ScenarioError(f"service availability weights sum to {total}, expected 1")
        if not self._connected():
            raise ScenarioError("host graph is not connected")
        self._index = {h: i for i, h in enumerate(ids)}

    def _connected(self) -> bool:
        adj: dict[str, set] = {h.id: set() for h in self.hosts}
        for e in self.edges:
            adj[e.a].add(e.b)
            adj[e.b].add(e.a)
        seen = {self.hosts[0].id}
        stack = [self.hosts[0].id]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(self.hosts)

    @property
    def n_hosts(self) -> int:
        return len(self.hosts)

    def index(self, host_id: str) -> int:
        return self._index[host_id]

    @property
    def host_ids(self) -> list[str]:
        return [h.id for h in self.hosts]

    def indicator_universe(self) -> list[str]:
        """All indicator IRIs the game can reveal, in bit order."""
        out = set(self.lateral_signatures)
        for sigs in self.signatures.values():
            out.update(sigs)
        return sorted(out)

    @classmethod
    def from_dict(cls, d: dict) -> NetworkScenario:
        try:
            hosts = []
            for h in d["hosts"]:
                services = tuple(
                    (s["name"], float(s["weight"])) if isinstance(s, dict) else (str(s[0]), float(s[1]))
                    for s in h.get("services", [])
                )
                hosts.append(Host(h["id"], services, h.get("parameter")))
            edges = []
            for e in d["edges"]:
                if isinstance(e, dict):
                    a, b = e["hosts"]
                    edges.append(Edge(a, b, e.get("port")))
                else:
                    edges.append(Edge(e[0], e[1], e[2] if len(e) > 2 else None))
            return cls(
                hosts=hosts,
                edges=edges,
                vulnerable=dict(d.get("vulnerable", {})),
                initial_compromised=frozenset(d.get("initial_compromised", [])),
                horizon=int(d["horizon"]),
                gateway=d.get("gateway"),
                signatures={k: tuple(v) for k, v in d.get("signatures", {}).items()},
                lateral_signatures=tuple(d.get("lateral_signatures", [])),
                name=d.get("name", "scenario"),
                entry_points=tuple(d.get("entry_points", [])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"malformed scenario: {exc!r}") from exc

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "gateway": self.gateway,
            "hosts": [
                {"id": h.id, "services": [{"name": n, "weight": w} for n, w in h.services], **({"parameter": h.parameter} if h.parameter else {})}
                for h in self.hosts
            ],
            "edges": [{"hosts": [e.a, e.b], **({"port": e.port} if e.port else {})} for e in self.edges],
            "vulnerable": dict(self.vulnerable),
            "signatures": {k: list(v) for k, v in self.signatures.items()},
            "lateral_signatures": list(self.lateral_signatures),
            "initial_compromised": sorted(self.initial_compromised),
            "entry_points": list(self.entry_points),
            "horizon": self.horizon,
        }


def load_scenario(path) -> NetworkScenario:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot load scenario {path}: {exc}") from exc
    return NetworkScenario.from_dict(data)
