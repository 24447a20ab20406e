"""Train-then-evaluate protocols behind the guided/unguided comparisons."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

from ..kg import Graph
from .evaluate import MetricsReport, rollout, greedy_policy
from .game import Game, RewardConfig
from .qlearning import train_selfplay
from .scenario import NetworkScenario
from .shaping import ShapingConfig


def _one_seed(args) -> dict:
    scenario, shaping, graph, episodes, seed, rewards = args
    game = Game(scenario, rewards)
    t0 = time.perf_counter()
    dq, aq, metrics = train_selfplay(game, shaping, graph, episodes, seed)
    row = rollout(game, greedy_policy(dq, "defender"), greedy_policy(aq, "attacker"), seed)
    lengths = metrics.lengths
    row["train_mean_episode_length"] = sum(lengths) / len(lengths)
    row["train_wall_clock_s"] = time.perf_counter() - t0
    return row


def selfplay_protocol(
    scenario: NetworkScenario,
    shaping: ShapingConfig,
    graph: Graph | None,
    episodes: int,
    seeds: Sequence[int],
    label: str = "",
    rewards: RewardConfig | None = None,
    workers: int = 1,
) -> MetricsReport:
    """For each seed: self-play training, then one greedy evaluation rollout."""
    if not seeds:
        raise ValueError("seeds must be non-empty")
    t0 = time.perf_counter()
    jobs = [(scenario, shaping, graph, episodes, s, rewards) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_one_seed, jobs))
    else:
        rows = [_one_seed(j) for j in jobs]
    timings = [r.pop("train_wall_clock_s") for r in rows]
    report = MetricsReport(rows, label, time.perf_counter() - t0)
    report.extra = {
        "episodes": episodes,
        "seeds": list(seeds),
        "guided": graph is not None and shaping.beta > 0,
        "beta": shaping.beta,
        "hops": shaping.hops,
        "gamma": shaping.gamma,
        "alpha": shaping.alpha,
        "epsilon": shaping.epsilon,
    }
    report.train_timings = timings
    return report
