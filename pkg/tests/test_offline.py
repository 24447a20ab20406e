import json

import pytest

from ckgdefense import fixture_path
from ckgdefense.kg import Graph, iri, triple
from ckgdefense.rl.families import AttackerFamily, FamilyError, load_families
from ckgdefense.rl.offline import (
    Transition,
    TransitionError,
    collect_transitions,
    family_rollout,
    offline_protocol,
    read_transitions,
    train_offline,
    write_transitions,
)
from ckgdefense.rl.qlearning import QTable
from ckgdefense.rl.shaping import ShapingConfig, align_bonus


@pytest.fixture(scope="module")
def families():
    return {f.name: f for f in load_families(fixture_path("families.json"))}


def test_fixture_families(families, game):
    assert set(families) == {"smb-worm", "web-shell", "credential-thief"}
    for f in families.values():
        f.check(game)
        assert AttackerFamily.from_dict(f.to_dict()) == f


def test_family_validation(game):
    with pytest.raises(FamilyError):
        AttackerFamily("x", (), ("exploit",))
    with pytest.raises(FamilyError):
        AttackerFamily("x", ("ws1",), ("teleport",))
    with pytest.raises(FamilyError):
        AttackerFamily("x", ("nowhere",), ("exploit",)).check(game)
    with pytest.raises(FamilyError):
        AttackerFamily.from_dict({"name": "x"})


def test_duplicate_family_names(tmp_path):
    p = tmp_path / "f.json"
    fam = {"name": "a", "entry_points": ["ws1"], "priority": ["exploit"]}
    p.write_text(json.dumps({"families": [fam, fam]}))
    with pytest.raises(FamilyError):
        load_families(p)


def test_family_prefers_priority_and_targets(game, families):
    import random

    fam = AttackerFamily("t", ("ws1",), ("exploit", "lateral_move"), ("fs",), noise=0.0)
    act = fam.policy(game)
    s = game.initial_state("ws1")
    legal = game.legal_attacker(s)
    assert game.attacker_names[act(game, s, legal, random.Random(0))] == "exploit(fs)"


def test_empty_transitions_rejected():
    with pytest.raises(TransitionError):
        train_offline([])


def test_zero_iterations_no_graph_all_zero():
    ts = [Transition("p0|m0|i0", 1, 0.5, "p0|m2|i0"), Transition("p0|m2|i0", 3, -0.2, "p0|m2|i1", True)]
    q = train_offline(ts, iterations=0)
    assert dict(q.items()) == {("p0|m0|i0", 1): 0.0, ("p0|m2|i0", 3): 0.0}


def test_zero_iterations_prior_initialises_aligned_pair(game, ckg):
    # indicator bit 0 observed; find a defender action aligned with it
    s = game.parse_defender_key("p0|m0|i1")
    aligned = [a for a in game.legal_defender(s) if align_bonus(s, a, ckg, 2, game)]
    unaligned = [a for a in game.legal_defender(s) if not align_bonus(s, a, ckg, 2, game)]
    assert aligned and unaligned
    ts = [Transition("p0|m0|i1", aligned[0], 0.0, "p0|m0|i1"), Transition("p0|m0|i1", unaligned[0], 0.0, "p0|m0|i1")]
    q = train_offline(ts, ckg, ShapingConfig(beta=1.0), iterations=0, game=game)
    assert q.get("p0|m0|i1", aligned[0]) == 1.0
    assert q.get("p0|m0|i1", unaligned[0]) == 0.0


def test_prior_needs_game(ckg):
    with pytest.raises(ValueError):
        train_offline([Transition("p0|m0|i0", 1, 0.0, "p0|m0|i0")], ckg, ShapingConfig(beta=1.0), 1)


def test_single_pair_fixed_point():
    # Q = (0 + n*(r + gamma*Q)) / (n + 1) with n = 1 self-loop: Q = r / (2 - gamma)
    ts = [Transition("s", 0, 1.0, "s")]
    q = train_offline(ts, shaping=ShapingConfig(gamma=0.5), iterations=200)
    assert q.get("s", 0) == pytest.approx(1.0 / 1.5)


def test_terminal_transitions_do_not_bootstrap():
    ts = [Transition("s", 0, 1.0, "s", True)]
    q = train_offline(ts, iterations=10)
    assert q.get("s", 0) == pytest.approx(0.5)


def test_offline_deterministic(game, families, ckg):
    log = collect_transitions(game, families["web-shell"], 20, 3)
    a = train_offline(log, ckg, ShapingConfig(), 10, game)
    b = train_offline(log, ckg, ShapingConfig(), 10, game)
    assert a == b and len(a) > 0


def test_transition_log_round_trip(tmp_path, game, families):
    log = collect_transitions(game, families["smb-worm"], 5, 1)
    p = tmp_path / "t.jsonl"
    write_transitions(p, log, game)
    assert read_transitions(p, game) == log


def test_bad_transition_line(tmp_path, game):
    p = tmp_path / "t.jsonl"
    p.write_text('{"state": "p0|m0|i0", "action": "wait", "reward": 0, "next_state": "p0|m0|i0"}\n{"state": 1}\n')
    with pytest.raises(TransitionError, match="line 2"):
        read_transitions(p, game)


def test_family_rollout_fields(game, families):
    row = family_rollout(game, QTable(len(game.defender_actions)), families["credential-thief"], 0)
    assert set(row) >= {"availability", "episode_length", "detection_rate"}


def test_offline_protocol_shape(game, families, ckg):
    out = offline_protocol(game, families["web-shell"], ckg, ShapingConfig(), log_episodes=10, iterations=3, seeds=[0, 1])
    assert set(out) == {"zero", "prior"}
    assert len(out["zero"].per_seed) == 2 and out["zero"].extra["transitions"] == out["prior"].extra["transitions"]
