import json
import subprocess
import sys

import pytest

from ckgdefense import fixture_path
from ckgdefense.cli import main, parse_seeds, render_comparison

QUERY_ONE = "SELECT ?x WHERE { ?x a FusedCKG:Malware ; FusedCKG:uses FusedCKG:hash-588f41bbc2d94e7a1b3c5d6e7f809a1b . }"


@pytest.fixture(autouse=True)
def no_env_config(monkeypatch):
    monkeypatch.delenv("CKG_CONFIG", raising=False)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_ingest_minimal_then_idempotent(tmp_path, capsys):
    g = tmp_path / "g.nt"
    code, out, _ = run(capsys, "ingest", str(fixture_path("bundle_minimal.json")), "--graph", str(g))
    assert code == 0 and "added: 5" in out
    code, out, _ = run(capsys, "ingest", str(fixture_path("bundle_minimal.json")), "--graph", str(g))
    assert code == 0 and "added: 0" in out


def test_ingest_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "ingest", str(tmp_path / "none.json"), "--graph", str(tmp_path / "g.nt"))
    assert code == 2 and "error" in err
    assert not (tmp_path / "g.nt").exists()


def test_query_listing_one_row(capsys):
    code, out, _ = run(capsys, "query", "--graph", str(fixture_path("ckg.nt")), QUERY_ONE)
    lines = out.splitlines()
    assert code == 0 and lines[0] == "?x" and lines[1:] == ["<ckg:malware--webskimmer>"]


def test_query_empty_graph(tmp_path, capsys):
    g = tmp_path / "g.nt"
    g.write_text("")
    code, out, _ = run(capsys, "query", "--graph", str(g), "--no-header", "SELECT ?x WHERE { ?x a ckg:Malware }")
    assert code == 0 and out == ""


def test_query_syntax_error(capsys):
    code, _, err = run(capsys, "query", "--graph", str(fixture_path("ckg.nt")), "SELECT ?x WHERE { ?x a }")
    assert code == 2 and "position" in err


def test_query_from_file(tmp_path, capsys):
    q = tmp_path / "q.rq"
    q.write_text(QUERY_ONE)
    code, out, _ = run(capsys, "query", "--graph", str(fixture_path("ckg.nt")), "--file", str(q), "--no-header")
    assert code == 0 and out.strip() == "<ckg:malware--webskimmer>"


def test_observe(capsys, tmp_path):
    rej = tmp_path / "rej.jsonl"
    code, out, _ = run(capsys, "--config", str(fixture_path("config.json")), "observe", "--flows", str(fixture_path("flows.csv")), "--rejections", str(rej))
    rows = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and len(rows) == 12 and all(r["accepted"] for r in rows)
    assert rej.read_text() == ""


def test_rules_golden_twice(tmp_path, capsys):
    cfg = str(fixture_path("config.json"))
    for name in ("a.rules", "b.rules"):
        code, out, _ = run(capsys, "--config", cfg, "rules", "--flows", str(fixture_path("flows.csv")), "--out", str(tmp_path / name), "--check")
        assert code == 0 and "matches golden" in out
    assert (tmp_path / "a.rules").read_bytes() == (tmp_path / "b.rules").read_bytes() == fixture_path("golden/rules.txt").read_bytes()
    ranked = json.loads((tmp_path / "a.ranked.json").read_text())
    assert ranked[0]["rank"] == 1 and {"hypothesis_id", "score", "score_parts"} <= set(ranked[0])


def test_rules_golden_mismatch(tmp_path, capsys):
    golden = tmp_path / "golden.txt"
    golden.write_text("alert ip any any -> any any (msg:\"x\"; sid:1000001; rev:1;)\n")
    code, _, err = run(capsys, "--config", str(fixture_path("config.json")), "rules", "--flows", str(fixture_path("flows.csv")),
                       "--out", str(tmp_path / "r.rules"), "--golden", str(golden))
    assert code == 1 and "differs" in err


def test_rules_bless_to_custom_path(tmp_path, capsys):
    golden = tmp_path / "g" / "rules.txt"
    code, _, _ = run(capsys, "--config", str(fixture_path("config.json")), "rules", "--flows", str(fixture_path("flows.csv")),
                     "--out", str(tmp_path / "r.rules"), "--golden", str(golden), "--bless")
    assert code == 0 and golden.read_text() == fixture_path("golden/rules.txt").read_text()


def test_rules_empty_flows(tmp_path, capsys):
    flows = tmp_path / "f.csv"
    flows.write_text("timestamp,src,dst,src_port,dst_port,protocol,bytes,packets\n")
    code, _, _ = run(capsys, "--config", str(fixture_path("config.json")), "rules", "--flows", str(flows), "--out", str(tmp_path / "r.rules"))
    assert code == 0 and (tmp_path / "r.rules").read_text() == ""


def test_rules_bad_threshold(tmp_path, capsys):
    code, _, err = run(capsys, "--config", str(fixture_path("config.json")), "rules", "--flows", str(fixture_path("flows.csv")),
                       "--out", str(tmp_path / "r.rules"), "--threshold", "1.1")
    assert code == 2 and "threshold" in err


def test_config_from_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("CKG_CONFIG", str(fixture_path("config.json")))
    code, out, _ = run(capsys, "query", "--no-header", QUERY_ONE)
    assert code == 0 and out.strip() == "<ckg:malware--webskimmer>"


def test_simulate_one_seed_deterministic(tmp_path, capsys):
    outs = []
    for name in ("a.json", "b.json"):
        code, _, _ = run(capsys, "simulate", "--seeds", "1", "--episodes", "1", "--out", str(tmp_path / name))
        assert code == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    report = json.loads(outs[0])
    assert len(report["per_seed"]) == 1 and report["label"] == "guided"


def test_simulate_invalid_scenario(tmp_path, capsys):
    bad = tmp_path / "s.json"
    bad.write_text('{"hosts": [], "edges": [], "horizon": 3}')
    code, _, err = run(capsys, "simulate", "--scenario", str(bad), "--seeds", "0", "--episodes", "1")
    assert code == 2 and "scenario" in err


def test_simulate_and_report(tmp_path, capsys):
    for flag in ("--guided", "--unguided"):
        code, _, _ = run(capsys, "simulate", flag, "--seeds", "0-1", "--episodes", "20", "--out", str(tmp_path / f"{flag[2:]}.json"))
        assert code == 0
    code, out, _ = run(capsys, "report", str(tmp_path / "guided.json"), str(tmp_path / "unguided.json"))
    assert code == 0 and "availability" in out and "guided" in out and "unguided" in out


def test_simulate_offline(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "--offline", "--seeds", "0", "--log-episodes", "5", "--iterations", "2", "--out", str(tmp_path / "o.json"))
    doc = json.loads((tmp_path / "o.json").read_text())
    assert code == 0 and set(doc) == {"smb-worm", "web-shell", "credential-thief"}


def test_report_bad_input(tmp_path, capsys):
    p = tmp_path / "x.json"
    p.write_text("{}")
    code, _, _ = run(capsys, "report", str(p), str(p))
    assert code == 2


def test_render_comparison_diff():
    a = {"label": "A", "per_seed": [{"availability": 1.0, "episode_length": 10, "detection_rate": None}]}
    b = {"label": "B", "per_seed": [{"availability": 0.5, "episode_length": 20, "detection_rate": 0.5}]}
    text = render_comparison(a, b)
    assert "+0.5000" in text and "-50.00%" in text


@pytest.mark.parametrize("text,expected", [("0-3", (0, 1, 2, 3)), ("1,4", (1, 4)), ("0-1,7", (0, 1, 7))])
def test_parse_seeds(text, expected):
    assert parse_seeds(text) == expected


def test_bad_seeds_usage_error(capsys):
    code, _, _ = run(capsys, "simulate", "--seeds", "x-y")
    assert code == 2


def test_unknown_command(capsys):
    assert run(capsys, "frobnicate")[0] == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "ckgdefense", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "ingest" in out.stdout
