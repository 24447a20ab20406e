"""Compare the compiled and pure-Python game kernels.

Two workloads on the bundled scenario:

* ``kernel``: raw ``resolve`` + ``legal_attacker`` + ``availability`` calls
  over a pre-generated random trajectory;
* ``train``: one short self-play training run through ``Game``.

Usage::

    python benchmarks/bench_kernels.py --steps 20000 --episodes 200 --repeat 3
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time

from ckgdefense import fixture_path
from ckgdefense.rl import _kernels_py
from ckgdefense.rl.game import Game
from ckgdefense.rl.qlearning import train_selfplay
from ckgdefense.rl.scenario import load_scenario
from ckgdefense.rl.shaping import ShapingConfig
from ckgdefense.kg import read_graph

try:
    from ckgdefense.rl import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def _trajectory(game: Game, steps: int, seed: int):
    """Random (state, attacker, defender) triples visited by uniform play."""
    rng = random.Random(seed)
    out = []
    state = game.sample_initial(rng)
    while len(out) < steps:
        a = rng.choice(game.legal_attacker(state))
        d = rng.choice(game.legal_defender(state))
        out.append((state, a, d))
        res = game.step(state, a, d)
        state = game.sample_initial(rng) if res.terminal else res.state
    return out


def bench_kernel(mod, scenario, traj) -> float:
    game = Game(scenario, kernels=mod)
    L = game.layout
    att = [game.attacker_actions[a] for _, a, _ in traj]
    dfn = [game.defender_actions[d] for _, _, d in traj]
    t0 = time.perf_counter()
    for (s, _, _), (ak, aa, ab), (dk, da, db) in zip(traj, att, dfn):
        mod.legal_attacker(L, s.status, s.blocked, s.patched)
        mod.availability(L, s.status, s.blocked)
        mod.resolve(L, s.status, s.blocked, s.patched, s.monitored, s.indicators, ak, aa, ab, dk, da, db)
    return time.perf_counter() - t0


def bench_train(mod, scenario, graph, episodes: int) -> float:
    game = Game(scenario, kernels=mod)
    t0 = time.perf_counter()
    train_selfplay(game, ShapingConfig(), graph, episodes, 0)
    return time.perf_counter() - t0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--episodes", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true", help="print results as JSON")
    args = ap.parse_args(argv)

    scenario = load_scenario(fixture_path("scenario.json"))
    graph = read_graph(fixture_path("ckg.nt"))
    traj = _trajectory(Game(scenario, kernels=_kernels_py), args.steps, args.seed)

    impls = [("python", _kernels_py)]
    if _kernels_c is not None:
        impls.append(("cython", _kernels_c))
    else:
        print("compiled kernels not built; timing the fallback only", file=sys.stderr)

    results = {}
    for name, mod in impls:
        k = min(bench_kernel(mod, scenario, traj) for _ in range(args.repeat))
        t = min(bench_train(mod, scenario, graph, args.episodes) for _ in range(args.repeat))
        results[name] = {"kernel_s": k, "kernel_us_per_step": 1e6 * k / args.steps, "train_s": t}

    if args.json:
        print(json.dumps(results, indent=2, sort_keys=True))
        return 0
    print(f"{'impl':<8}{'kernel s':>10}{'us/step':>10}{'train s':>10}")
    for name, r in results.items():
        print(f"{name:<8}{r['kernel_s']:>10.3f}{r['kernel_us_per_step']:>10.2f}{r['train_s']:>10.3f}")
    if "cython" in results:
        py, cy = results["python"], results["cython"]
        print(f"speed-up: kernel x{py['kernel_s'] / cy['kernel_s']:.1f}, training x{py['train_s'] / cy['train_s']:.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
