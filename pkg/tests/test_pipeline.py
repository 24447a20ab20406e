import pytest

from ckgdefense import fixture_path
from ckgdefense.config import Config
from ckgdefense.kg import Graph
from ckgdefense.observe import load_policies, parse_flows
from ckgdefense.pipeline import STAGES, PipelineError, run_pipeline


@pytest.fixture(scope="module")
def inputs():
    return parse_flows(fixture_path("flows.csv").read_text()), load_policies(fixture_path("policies.json").read_text())


def test_fixture_pipeline_matches_golden(ckg, inputs):
    res = run_pipeline(ckg, *inputs, Config())
    assert res.rules_text() == fixture_path("golden/rules.txt").read_text()
    assert res.ranked_json() == fixture_path("golden/ranked.json").read_text()


def test_pipeline_deterministic(ckg, inputs):
    a, b = run_pipeline(ckg, *inputs, Config()), run_pipeline(ckg, *inputs, Config())
    assert a.rules_text() == b.rules_text() and a.ranked_json() == b.ranked_json()


def test_input_graph_untouched(ckg, inputs):
    before = len(ckg)
    run_pipeline(ckg, *inputs, Config())
    assert len(ckg) == before


def test_no_flows_no_rules(ckg, inputs):
    res = run_pipeline(ckg, [], inputs[1], Config())
    assert res.rules == [] and res.rules_text() == ""


def test_empty_graph_rejects_everything(inputs):
    res = run_pipeline(Graph(), *inputs, Config(threshold=0.5))
    assert res.accepted == [] and res.rules == []
    assert len(res.rejected) == len(res.observations) > 0


def test_sids_unique_and_ranked(ckg, inputs):
    res = run_pipeline(ckg, *inputs, Config())
    sids = [line.split("sid:")[1].split(";")[0] for line in res.rules]
    assert len(set(sids)) == len(sids)
    scores = [s.score for s in res.ranked]
    assert scores == sorted(scores, reverse=True)


def test_stage_errors_named(ckg, inputs):
    class Broken:
        def score(self, e, graph):
            raise ValueError("boom")

    with pytest.raises(PipelineError) as exc:
        run_pipeline(ckg, *inputs, Config(), scorer=Broken())
    assert exc.value.stage == "score" and exc.value.stage in STAGES
