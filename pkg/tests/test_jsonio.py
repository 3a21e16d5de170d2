"""JSON codecs: round trips, exact time text, malformed input errors."""

from __future__ import annotations

import json
from dataclasses import replace
from fractions import Fraction

import pytest

from conlab import (
    InterDepGraph,
    InterOrderOptions,
    ModelId,
    TagKind,
    check,
    run,
)
from conlab.fixtures import slow_comment_scenario
from conlab.jsonio import (
    FormatError,
    delay_from_dict,
    delay_to_dict,
    dump_history,
    dump_scenario,
    history_from_dict,
    history_to_dict,
    inter_graph_from_dict,
    inter_graph_to_dict,
    inter_options_from_dict,
    inter_options_to_dict,
    intra_graph_from_dict,
    intra_graph_to_dict,
    load_history,
    load_json,
    load_scenario,
    operation_from_dict,
    operation_to_dict,
    run_result_to_dict,
    scenario_from_dict,
    scenario_to_dict,
    serialization_to_list,
    verdict_to_dict,
)
from helpers import hist, w


class TestRoundTrips:
    def test_history(self, fix_a_history):
        data = history_to_dict(fix_a_history)
        json.dumps(data)  # must be plain JSON types
        assert history_from_dict(data) == fix_a_history

    def test_scenario(self):
        scenario = slow_comment_scenario()
        data = scenario_to_dict(scenario)
        json.dumps(data)
        assert scenario_from_dict(data) == scenario

    def test_scenario_with_inter_structures(self):
        scenario = replace(
            slow_comment_scenario(),
            inter_graph=InterDepGraph.build(
                ["alice", "bob", "calvin"], [("alice", "bob")]
            ),
            inter_opts=InterOrderOptions(d=2, d_by_kind={TagKind.POST: 3}),
        )
        assert scenario_from_dict(scenario_to_dict(scenario)) == scenario

    def test_intra_graphs(self, fix_a_history, fix_a_graphs):
        for graph in fix_a_graphs.values():
            assert intra_graph_from_dict(intra_graph_to_dict(graph)) == graph

    def test_inter_graph_both_orientations(self):
        undirected = InterDepGraph.build(["a", "b", "c"], [("b", "a")])
        directed = InterDepGraph.build(["a", "b"], [("a", "b")], directed=True)
        for graph in (undirected, directed):
            assert inter_graph_from_dict(inter_graph_to_dict(graph)) == graph

    def test_inter_options(self):
        opts = InterOrderOptions(
            d=2, d_by_kind={TagKind.COMMENT: 1, TagKind.POST: 4}, multiplicity=2
        )
        assert inter_options_from_dict(inter_options_to_dict(opts)) == opts

    def test_delay_model(self):
        scenario = slow_comment_scenario()
        assert delay_from_dict(delay_to_dict(scenario.delay)) == scenario.delay

    def test_file_helpers(self, fix_a_history, tmp_path):
        hist_path = tmp_path / "h.json"
        scen_path = tmp_path / "s.json"
        dump_history(fix_a_history, hist_path)
        dump_scenario(slow_comment_scenario(), scen_path)
        assert load_history(hist_path) == fix_a_history
        assert load_scenario(scen_path) == slow_comment_scenario()


class TestTimeText:
    def test_decimal_times_survive_verbatim(self):
        op = w("a", 1, inv=Fraction(181, 20))
        data = operation_to_dict(op)
        assert data["inv"] == "9.05"
        assert operation_from_dict(data).inv == Fraction(181, 20)

    def test_non_decimal_times_use_ratio_text(self):
        op = w("a", 1, inv=Fraction(7, 3))
        data = operation_to_dict(op)
        assert data["inv"] == "7/3"
        assert operation_from_dict(data).inv == Fraction(7, 3)


class TestMalformedInput:
    def op_data(self, **overrides):
        data = operation_to_dict(w("a", 1))
        data.update(overrides)
        return data

    def test_unknown_kind(self):
        with pytest.raises(FormatError, match="unknown kind"):
            operation_from_dict(self.op_data(kind="sync"))

    def test_missing_key(self):
        data = self.op_data()
        del data["inv"]
        with pytest.raises(FormatError, match="missing 'inv'"):
            operation_from_dict(data)

    def test_wall_read_needs_returned_list(self):
        data = self.op_data(kind="wall_read")
        del data["value"]
        with pytest.raises(FormatError, match="no returned list"):
            operation_from_dict(data)
        data["returned"] = "a.1"
        with pytest.raises(FormatError, match="list of ids"):
            operation_from_dict(data)

    def test_object_read_returned_must_be_id(self):
        data = self.op_data(kind="read", returned=3)
        del data["value"]
        with pytest.raises(FormatError, match="an id or null"):
            operation_from_dict(data)

    def test_unknown_tag_kind(self):
        with pytest.raises(FormatError, match="unknown tag kind"):
            operation_from_dict(self.op_data(tag={"kind": "emoji"}))

    def test_history_needs_processes(self):
        with pytest.raises(FormatError, match="non-empty process list"):
            history_from_dict({"processes": [], "operations": []})

    def test_history_friend_pairs(self, fix_a_history):
        data = history_to_dict(fix_a_history)
        data["initial_friends"] = [["alice"]]
        with pytest.raises(FormatError, match="not a pair"):
            history_from_dict(data)

    def test_history_unknown_process(self):
        data = history_to_dict(hist(("a", (w("a", 1),))))
        data["ops"][0]["process"] = "ghost"
        with pytest.raises(FormatError, match="unknown process"):
            history_from_dict(data)

    def test_graph_edges_must_be_pairs(self):
        with pytest.raises(FormatError, match="not a pair"):
            intra_graph_from_dict({"process": "a", "nodes": ["a.1"], "edges": [["a.1"]]})
        with pytest.raises(FormatError, match="not a pair"):
            inter_graph_from_dict({"nodes": ["a"], "edges": [["a", "b", "c"]]})

    def test_options_reject_unknown_tag(self):
        with pytest.raises(FormatError, match="unknown tag kind"):
            inter_options_from_dict({"d": 1, "d_by_kind": {"emoji": 2}})

    def test_delay_link_key_shape(self):
        with pytest.raises(FormatError, match="src->dst"):
            delay_from_dict({"default": "1", "links": {"r1:r2": "2"}})

    def test_delay_jitter_shape(self):
        with pytest.raises(FormatError, match="lo, hi"):
            delay_from_dict({"default": "1", "jitter": ["0"]})

    def test_unknown_protocol(self):
        data = scenario_to_dict(slow_comment_scenario())
        data["protocol"] = "psychic"
        with pytest.raises(FormatError, match="unknown protocol"):
            scenario_from_dict(data)

    def test_unknown_action_kind(self):
        data = scenario_to_dict(slow_comment_scenario())
        data["script"][0]["action"]["kind"] = "poke"
        with pytest.raises(FormatError, match="unknown action kind"):
            scenario_from_dict(data)

    def test_invalid_json_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(FormatError, match="not valid JSON"):
            load_json(path)


class TestResultShapes:
    def test_verdict_with_witnesses(self, fix_a_history, fix_a_graphs):
        verdict = check(fix_a_history, ModelId.INTRA_CAUSAL, graphs=fix_a_graphs)
        data = verdict_to_dict(verdict)
        assert data["model"] == "IntraCausal"
        assert data["consistent"] is True
        assert set(data["witnesses"]) == {"alice", "bob", "calvin"}
        assert all(isinstance(s, list) for s in data["witnesses"].values())
        assert "violation" not in data

    def test_verdict_with_violation(self, fix_a_history):
        verdict = check(fix_a_history, ModelId.CAUSAL)
        data = verdict_to_dict(verdict)
        assert data["consistent"] is False
        assert data["violation"]["kind"]
        assert list(data["violation"]["ops"])
        json.dumps(data)

    def test_witness_list(self, fix_a_history, fix_a_graphs):
        verdict = check(fix_a_history, ModelId.INTRA_CAUSAL, graphs=fix_a_graphs)
        witness = verdict.witnesses["alice"]
        assert serialization_to_list(witness) == list(witness.ops)

    def test_run_result(self):
        result = run(slow_comment_scenario())
        data = run_result_to_dict(result)
        json.dumps(data)
        assert data["protocol"] == "intra-causal"
        assert data["converged"] is True
        assert isinstance(data["mean_latency"], float)
        assert {rec["write"] for rec in data["visibility"]} == set(data["dependencies"])
        assert all(isinstance(rec["latency"], float) for rec in data["visibility"])
