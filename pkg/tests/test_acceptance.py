"""End-to-end acceptance checks; each prints one PASS/FAIL line to the terminal."""

import random
import statistics
import time

import pytest

from oracles import bfs_reachable, nested_loop_join, predicted_triple_count, reachable_availability

from ckgdefense import fixture_path
from ckgdefense.cli import main
from ckgdefense.kg import Graph, SelectQuery, TriplePattern, evaluate, iri, literal, parse_query, prefix_aliases, triple, var
from ckgdefense.rl.families import load_families
from ckgdefense.rl.game import Game, GameState
from ckgdefense.rl.offline import offline_protocol
from ckgdefense.rl.protocol import selfplay_protocol
from ckgdefense.rl.qlearning import train_selfplay
from ckgdefense.rl.shaping import ShapingConfig, align_bonus
from ckgdefense.stix import fetch_collection, map_to_triples

QUERY_ONE = "SELECT ?x WHERE { ?x a FusedCKG:Malware ; FusedCKG:uses FusedCKG:hash-588f41bbc2d94e7a1b3c5d6e7f809a1b . }"
QUERY_TWO = (
    "SELECT DISTINCT ?x ?y ?z WHERE { ?x a FusedKG:Malware ; "
    "FusedKG:hasHash FusedKG:hash-b9d3a1c07e5f2b84d6e0a9c1f3b5d7e9 ; FusedKG:uses ?y . "
    "?y a FusedKG:Attack-Pattern . ?z FusedKG:parameterchange FusedKG:increases_meanchange . }"
)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {n:>2}] {'PASS' if ok else 'FAIL'}: {detail}")
        return ok

    return emit


def _raw(t):
    return (t.kind, t.value)


def _oracle_rows(graph, q):
    raw = [tuple(_raw(x) for x in t) for t in graph]
    pats = [tuple(("var", x.value) if x.is_variable else _raw(x) for x in p) for p in q.patterns]
    return nested_loop_join(raw, pats, q.projected, q.distinct)


def _rows(result, q):
    return [tuple(_raw(r[v]) for v in q.projected) for r in result]


def _random_case(rng):
    nodes = [iri(f"ex:n{i}") for i in range(8)]
    preds = [iri("ex:p"), iri("ex:q"), iri("rdf:type")]
    objs = nodes + [literal(s) for s in ("a", "b c")]
    g = Graph(triple(rng.choice(nodes), rng.choice(preds), rng.choice(objs)) for _ in range(rng.randint(0, 200)))
    names = ["x", "y", "z"][: rng.randint(1, 3)]

    def pick(pool):
        return var(rng.choice(names)) if rng.random() < 0.5 else rng.choice(pool)

    pats = [TriplePattern(pick(nodes), pick(preds), pick(objs)) for _ in range(rng.randint(1, 4))]
    used = sorted({v for p in pats for v in p.variables()})
    if not used:
        pats[0] = TriplePattern(var(names[0]), pats[0].predicate, pats[0].object)
        used = [names[0]]
    projected = tuple(rng.sample(used, rng.randint(1, len(used))))
    return g, SelectQuery(projected, tuple(pats), rng.random() < 0.5)


def test_criterion_01_query_oracle_equivalence(report):
    rng = random.Random(2024)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(100):
        g, q = _random_case(rng)
        if _rows(evaluate(g, q), q) != _oracle_rows(g, q):
            mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 10
    report(1, ok, f"{100 - mismatches}/100 cases match the nested-loop oracle in {elapsed:.2f} s (limit 10 s)")
    assert ok


def test_criterion_02_listed_queries(report, ckg):
    counts = []
    ok = True
    for text in (QUERY_ONE, QUERY_TWO):
        q = parse_query(text, prefix_aliases())
        got = _rows(evaluate(ckg, q), q)
        expected = _oracle_rows(ckg, q)
        ok &= bool(expected) and got == expected
        counts.append(len(got))
    report(2, ok, f"both listings parse; rows {counts} equal the oracle's")
    assert ok


@pytest.fixture(scope="module")
def selfplay_runs(scenario, ckg):
    seeds = range(20)
    t0 = time.perf_counter()
    guided = selfplay_protocol(scenario, ShapingConfig(), ckg, 500, seeds, "guided")
    unguided = selfplay_protocol(scenario, ShapingConfig(), None, 500, seeds, "unguided")
    return guided, unguided, time.perf_counter() - t0


def test_criterion_03_guided_availability(report, selfplay_runs):
    guided, unguided, elapsed = selfplay_runs
    g, u = guided.availability["mean"], unguided.availability["mean"]
    diff = 100 * (g - u)
    ok = diff >= 20 and elapsed < 120
    report(3, ok, f"availability guided {g:.3f} vs unguided {u:.3f}: {diff:+.1f} pp (need >= 20), {elapsed:.1f} s (limit 120 s)")
    assert ok


def test_criterion_04_episode_length(report, selfplay_runs):
    guided, unguided, _ = selfplay_runs
    g, u = guided.episode_length["mean"], unguided.episode_length["mean"]
    drop = 100 * (u - g) / u
    ok = drop >= 5
    report(4, ok, f"episode length guided {g:.2f} vs unguided {u:.2f}: {drop:.1f}% shorter (need >= 5%)")
    assert ok


def _mean_rate(reports, label):
    rates = [r["detection_rate"] for rep in reports for r in rep[label].per_seed if r["detection_rate"] is not None]
    return statistics.fmean(rates)


def test_criterion_05_offline_prior_detection(report, game, ckg):
    lines, improved = [], 0
    for fam in load_families(fixture_path("families.json")):
        runs = [offline_protocol(game, fam, ckg, ShapingConfig(), 200, 25, range(20), log_seed) for log_seed in range(40)]
        zero, prior = _mean_rate(runs, "zero"), _mean_rate(runs, "prior")
        gain = 100 * (prior - zero)
        improved += gain >= 2
        lines.append(f"{fam.name} {gain:+.1f} pp")
    ok = improved >= 2
    report(5, ok, f"detection gain with knowledge prior on {improved}/3 families (need >= 2): {', '.join(lines)}")
    assert ok


def test_criterion_06_beta_zero_neutral(report, game, ckg):
    cfg = ShapingConfig(beta=0.0)
    same = 0
    for seed in range(50):
        g = train_selfplay(game, cfg, ckg, 30, seed, record_trajectories=True)
        u = train_selfplay(game, cfg, None, 30, seed, record_trajectories=True)
        same += g[2].trajectories == u[2].trajectories and g[0] == u[0] and g[1] == u[1]
    ok = same == 50
    report(6, ok, f"beta=0 trajectories identical with and without the graph on {same}/50 seeds")
    assert ok


def test_criterion_07_zero_sum_and_availability(report, game, scenario):
    edges = [(scenario.index(e.a), scenario.index(e.b)) for e in scenario.edges]
    weights = [h.weight for h in scenario.hosts]
    gw = scenario.index(scenario.gateway)
    rng = random.Random(7)
    state = game.sample_initial(rng)
    bad_sum = bad_av = 0
    for _ in range(10_000):
        res = game.step(state, rng.randrange(len(game.attacker_actions)), rng.randrange(len(game.defender_actions)))
        bad_sum += res.attacker_reward + res.defender_reward != 0
        av = game.availability(res.state)
        expected = reachable_availability(game.n, gw, weights, edges, res.state.status, res.state.blocked)
        bad_av += not (0.0 <= av <= 1.0 + 1e-12) or abs(av - expected) > 1e-12
        state = game.sample_initial(rng) if res.terminal else res.state
    ok = bad_sum == 0 and bad_av == 0
    report(7, ok, f"10000 steps: {bad_sum} zero-sum violations, {bad_av} availability violations")
    assert ok


def test_criterion_08_rules_deterministic(report, tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("CKG_CONFIG", raising=False)
    outs = []
    for name in ("first.rules", "second.rules"):
        code = main(["--config", str(fixture_path("config.json")), "rules", "--flows", str(fixture_path("flows.csv")), "--out", str(tmp_path / name)])
        assert code == 0
        outs.append((tmp_path / name).read_bytes())
    capsys.readouterr()
    golden = fixture_path("golden/rules.txt").read_bytes()
    ok = outs[0] == outs[1] == golden and golden != b""
    report(8, ok, f"two runs byte-identical to the frozen golden rule file ({len(golden.splitlines())} rules)")
    assert ok


def test_criterion_09_align_bonus_bfs(report, game):
    rng = random.Random(9)
    nodes = list(game.universe) + [game.defender_target(a) for a in game.all_defender if game.defender_target(a)]
    nodes += [f"ex:x{i}" for i in range(5)]
    mismatches = 0
    for _ in range(100):
        ts = [(rng.choice(nodes), "ex:p", rng.choice(nodes)) for _ in range(rng.randint(0, 50))]
        g = Graph(triple(iri(s), iri(p), iri(o)) for s, p, o in ts)
        state = GameState(tuple(rng.randint(0, 2) for _ in range(game.n)), indicators=rng.randrange(1 << len(game.universe)))
        k = rng.randint(1, 3)
        sources = [u for i, u in enumerate(game.universe) if (state.indicators >> i) & 1]
        reach = bfs_reachable([(s, o) for s, _, o in ts], sources, k)
        for a in game.all_defender:
            t = game.defender_target(a)
            expected = 0 if t is None or game.is_noop(state, a) else int(t in reach)
            mismatches += align_bonus(state, a, g, k, game) != expected
    ok = mismatches == 0
    report(9, ok, f"align_bonus vs breadth-first oracle on 100 graphs: {mismatches} mismatches")
    assert ok


def test_criterion_10_stix_counts(report):
    path = fixture_path("bundle.json")
    m = map_to_triples(fetch_collection(path))
    expected = predicted_triple_count(path.read_text())
    got = (len(m.triples), len(m.skipped))
    ok = got == expected
    report(10, ok, f"fixture bundle: {got[0]} triples, {got[1]} skipped; mapping table predicts {expected[0]}, {expected[1]}")
    assert ok
