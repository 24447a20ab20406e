import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import reachable_availability

from ckgdefense.rl import _kernels_py
from ckgdefense.rl.game import Game, GameError, GameState, RewardConfig, step
from ckgdefense.rl.scenario import Edge, Host, NetworkScenario, ScenarioError

try:
    from ckgdefense.rl import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def compromised(game, *hosts, **kw):
    status = [0] * game.n
    for h in hosts:
        status[game.scenario.index(h)] = 1
    return GameState(tuple(status), **kw)


def test_weights_sum_to_one(scenario):
    assert math.isclose(math.fsum(h.weight for h in scenario.hosts), 1.0)


def test_both_wait_on_healthy_state(game):
    s = GameState((0,) * game.n)
    res = game.step(s, "wait", "wait")
    assert res.defender_reward == 0.0
    assert res.state == GameState((0,) * game.n, step=1)


def test_isolate_preempts_exploit(game, scenario):
    s = compromised(game, "ws1")
    res = game.step(s, "exploit(fs)", "isolate(fs)")
    fs = scenario.index("fs")
    assert res.state.status[fs] == 2
    assert res.events["newly_compromised"] == 0 and res.events["attempted_intrusions"] == 1
    before, after = game.availability(s), game.availability(res.state)
    # ws2 and ws1 still reach the gateway through mail
    assert before - after == pytest.approx(scenario.hosts[fs].weight)


def test_monitor_detects_exploit(game):
    s = compromised(game, "ws1", monitored=0)
    s = game.step(s, "wait", "monitor(fs)").state
    res = game.step(s, "exploit(fs)", "wait")
    ev = res.events
    assert ev["detections"] == 1 and ev["detected_intrusions"] == 1
    fs_weight = game.scenario.hosts[game.scenario.index("fs")].weight
    assert res.defender_reward == pytest.approx(-fs_weight - 0.1 + 0.5)
    assert res.state.indicators != 0


def test_monitor_same_tick_as_exploit(game):
    # the defender moves first, so a fresh monitor already sees this tick's exploit
    res = game.step(compromised(game, "ws1"), "exploit(fs)", "monitor(fs)")
    assert res.events["detections"] == 1


def test_block_preempts_lateral_move(game):
    s = compromised(game, "ws1")
    res = game.step(s, "lateral_move(ws1,ws2)", "block(ws1,ws2)")
    assert res.events["newly_compromised"] == 0


def test_patch_restores_and_immunises(game, scenario):
    s = compromised(game, "ws1", "fs")
    res = game.step(s, "wait", "patch(fs)")
    fs = scenario.index("fs")
    assert res.state.status[fs] == 0 and (res.state.patched >> fs) & 1
    assert game.attacker_index("exploit(fs)") not in game.legal_attacker(res.state)


def test_illegal_attack_becomes_wait(game):
    res = game.step(GameState((0,) * game.n), "exploit(db)", "wait")
    assert res.events["attacker_legal"] is False
    assert res.events["attempted_intrusions"] == 0 and res.defender_reward == 0.0


def test_exploit_needs_adjacent_foothold(game):
    s = compromised(game, "ws1")
    legal = {game.attacker_names[a] for a in game.legal_attacker(s)}
    assert "exploit(fs)" in legal and "exploit(db)" not in legal


def test_step_past_horizon(game, scenario):
    with pytest.raises(GameError):
        game.step(compromised(game, "ws1", step=scenario.horizon), "wait", "wait")


def test_episode_ends_when_clean(game, scenario):
    res = game.step(compromised(game, "ws1"), "wait", "patch(ws1)")
    assert res.terminal


def test_functional_step(scenario):
    nxt, reward, events = step(GameState((0,) * scenario.n_hosts), scenario, "wait", "wait")
    assert nxt.step == 1 and reward == 0.0 and events["defender_action"] == "wait"


def test_state_keys_round_trip(game):
    s = compromised(game, "ws1", "fs", blocked=5, patched=3, indicators=6, monitored=9)
    assert game.parse_state_key(game.state_key(s)) == GameState(s.status, 5, 3, 6, 0, 9)
    d = game.parse_defender_key(game.defender_key(s))
    assert (d.patched, d.monitored, d.indicators) == (3, 9, 6)


def test_noop_defender_actions_illegal(game):
    s = compromised(game, "ws1", monitored=1, blocked=1)
    names = {game.defender_names[a] for a in game.legal_defender(s)}
    assert "monitor(gw)" not in names and "block(gw,web)" not in names and "wait" in names


def test_reward_config_bound():
    assert RewardConfig().r_max == pytest.approx(1.5)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d["hosts"].append(Host("gw", (("x", 0.0),))),
        lambda d: d.update(edges=[Edge("a", "zz")]),
        lambda d: d.update(horizon=0),
        lambda d: d.update(hosts=[Host("a", (("s", 0.5),)), Host("b", (("s", 0.4),))]),
        lambda d: d.update(edges=[]),
    ],
)
def test_scenario_validation(mutate):
    d = dict(hosts=[Host("a", (("s", 0.5),)), Host("b", (("s", 0.5),))], edges=[Edge("a", "b")], vulnerable={}, initial_compromised=frozenset(), horizon=5)
    mutate(d)
    with pytest.raises(ScenarioError):
        NetworkScenario(**d)


def test_scenario_dict_round_trip(scenario):
    assert NetworkScenario.from_dict(scenario.to_dict()).to_dict() == scenario.to_dict()


def _random_walk(game, steps, seed):
    rng = random.Random(seed)
    state = game.sample_initial(rng)
    for _ in range(steps):
        a = rng.randrange(len(game.attacker_actions))
        d = rng.randrange(len(game.defender_actions))
        yield state, a, d
        res = game.step(state, a, d)
        state = game.sample_initial(rng) if res.terminal else res.state


def test_zero_sum_and_availability_10k_steps(game, scenario):
    edges = [(scenario.index(e.a), scenario.index(e.b)) for e in scenario.edges]
    weights = [h.weight for h in scenario.hosts]
    gw = scenario.index(scenario.gateway)
    for state, a, d in _random_walk(game, 10_000, 11):
        res = game.step(state, a, d)
        assert res.attacker_reward + res.defender_reward == 0
        av = game.availability(res.state)
        assert 0.0 <= av <= 1.0 + 1e-12
        assert av == pytest.approx(reachable_availability(game.n, gw, weights, edges, res.state.status, res.state.blocked), abs=1e-12)


@given(st.lists(st.integers(0, 2), min_size=8, max_size=8), st.integers(0, 2**10 - 1))
def test_availability_matches_oracle(game, scenario, status, blocked):
    edges = [(scenario.index(e.a), scenario.index(e.b)) for e in scenario.edges]
    weights = [h.weight for h in scenario.hosts]
    s = GameState(tuple(status), blocked)
    expected = reachable_availability(game.n, scenario.index(scenario.gateway), weights, edges, s.status, blocked)
    assert game.availability(s) == pytest.approx(expected, abs=1e-12)


@pytest.mark.skipif(_kernels_c is None, reason="compiled kernels not built")
def test_compiled_kernel_matches_python(scenario):
    gp, gc = Game(scenario, kernels=_kernels_py), Game(scenario, kernels=_kernels_c)
    for state, a, d in _random_walk(gp, 20_000, 3):
        assert gp.legal_attacker(state) == gc.legal_attacker(state)
        assert gp.availability(state) == gc.availability(state)
        r1, r2 = gp.step(state, a, d), gc.step(state, a, d)
        assert (r1.state, r1.defender_reward, r1.events) == (r2.state, r2.defender_reward, r2.events)


def test_kernel_selection_env(monkeypatch):
    import importlib

    from ckgdefense.rl import kernels

    monkeypatch.setenv("CKG_PURE_PYTHON", "1")
    try:
        assert importlib.reload(kernels).IMPLEMENTATION == "python"
    finally:
        monkeypatch.delenv("CKG_PURE_PYTHON")
        importlib.reload(kernels)
