import json
import random
import re
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aogm_lineage import track_io
from aogm_lineage.aogm import evaluate
from aogm_lineage.lineage_graph import TrackRow, TrackingGraph, build_graph, mitosis_events
from aogm_lineage.scenarios import enumerate_inversions, figure1_cases, figure2_pair
from aogm_lineage.mitosis_metrics import match_mitosis, mitosis_pr
from conftest import mitosis_table
from fuzz import LOCATION, fuzz
from gen import random_table


def test_single_record():
    t = track_io.parse_ctc_tracks("1 0 9 0\n")
    assert t.rows == (TrackRow(1, 0, 9, None),)
    assert t.synthetic_geometry
    assert len(build_graph(t).vertices) == 10


def test_mitosis_records():
    t = track_io.parse_ctc_tracks("1 0 1 0\n2 2 3 1\n3 2 3 1")
    assert [r.parent for r in t.rows] == [None, 1, 1]
    events = mitosis_events(build_graph(t))
    assert len(events) == 1 and len(events[0].daughters) == 2


def test_whitespace_variants():
    t = track_io.parse_ctc_tracks("1\t0   1 0\n\n2 2 3\t1\n\n\n")
    assert [r.label for r in t.rows] == [1, 2]


@pytest.mark.parametrize("text,error,location", [
    ("1 5 3 0", track_io.SemanticError, "line 1, column 1"),
    ("1 0 3 0\n1 4 5 0", track_io.SemanticError, "line 2, column 1"),
    ("1 0 3 0\n2 4 5 7", track_io.SemanticError, "line 2, column 1"),
    ("1 0 3 0\n2 3 5 1", track_io.SemanticError, "line 2, column 1"),
    ("1 0 x 0", track_io.TrackSyntaxError, "line 1, column 5"),
    ("1 0 -3 0", track_io.TrackSyntaxError, "line 1, column 5"),
    ("1 0 3", track_io.TrackSyntaxError, "line 1, column 1"),
    ("2 0 3 2", track_io.SemanticError, "line 1, column 1"),
])
def test_ctc_errors(text, error, location):
    with pytest.raises(error) as info:
        track_io.parse_ctc_tracks(text)
    assert info.value.location == location


def test_join_detections():
    csv = "frame,track_id,x,y,w,h\n0,1,0,0,10,10\n1,1,2,0,10,10\n"
    t = track_io.parse_ctc_tracks("1 0 1 0\n", csv)
    assert not t.synthetic_geometry
    assert t.detections[(1, 1)] == ((7.0, 5.0), (2.0, 0.0, 10.0, 10.0))
    with pytest.raises(track_io.JoinError):
        track_io.parse_ctc_tracks("1 0 2 0\n", csv)


@pytest.mark.parametrize("csv,location", [
    ("0,1,0,0,0,10\n", "line 1, column 5"),
    ("0,1,0,0,10\n", "line 1, column 1"),
    ("0,1,0,0,10,10\n0,1,5,5,10,10\n", "line 2, column 1"),
    ("0,a,0,0,10,10\n", "line 1, column 2"),
    ("0,1,nan,0,10,10\n", "line 1, column 3"),
])
def test_detection_errors(csv, location):
    with pytest.raises(track_io.FormatError) as info:
        track_io.parse_detections(csv)
    assert info.value.location == location


def test_ctc_round_trip():
    for text in ["1 0 9 0\n", "1 0 1 0\n2 2 3 1\n3 2 3 1\n"]:
        assert track_io.write_ctc_tracks(track_io.parse_ctc_tracks(text)) == text


def test_detections_round_trip():
    table = mitosis_table()
    csv = track_io.write_detections(table)
    again = track_io.parse_ctc_tracks(track_io.write_ctc_tracks(table), csv)
    assert build_graph(again) == build_graph(table)


def test_shifted_document(shifted):
    g = track_io.parse_graph_document(track_io.write_graph_document(shifted))
    assert len(g.vertices) == 4 and len(g.edges) == 3
    assert g == shifted


def test_empty_document():
    assert track_io.parse_graph_document('{"format_version": 1, "vertices": [], "edges": []}') == TrackingGraph()


@pytest.mark.parametrize("mutation,location", [
    (lambda d: d["edges"].append({"from": 1, "to": 42, "semantics": "track"}), r"edges\[\d+\]\.to"),
    (lambda d: d["vertices"].append(dict(d["vertices"][0])), r"vertices\[\d+\]"),
    (lambda d: d["edges"].append({"from": 3, "to": 2, "semantics": "parent"}), r"elements 3,2"),
    (lambda d: d["vertices"][0].update(frame=-1), r"vertices\[0\]\.frame"),
    (lambda d: d["vertices"][0].update(bbox=[0, 0, 0, 1]), r"vertices\[0\]\.bbox"),
    (lambda d: d.update(colour="red"), r"document"),
])
def test_document_errors(ref, mutation, location):
    doc = json.loads(track_io.write_graph_document(ref))
    mutation(doc)
    with pytest.raises(track_io.SemanticError) as info:
        track_io.parse_graph_document(json.dumps(doc))
    assert re.fullmatch(location, info.value.location)


def test_document_syntax_error():
    with pytest.raises(track_io.TrackSyntaxError) as info:
        track_io.parse_graph_document('{"format_version": 1,\n "vertices": [}')
    assert info.value.location == "line 2, column 15"
    with pytest.raises(track_io.TrackSyntaxError):
        track_io.parse_graph_document('{"format_version": 1, "vertices": [{"x": NaN}], "edges": []}')


def test_scenario_documents_round_trip():
    pairs = figure1_cases() + [figure2_pair()] + enumerate_inversions(4, 3)
    for p in pairs:
        for g in (p.reference, p.computed_with_links, p.computed_without_links):
            text = track_io.write_graph_document(g)
            assert track_io.write_graph_document(track_io.parse_graph_document(text)) == text


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_round_trips(seed):
    table = random_table(random.Random(seed))
    ctc = track_io.write_ctc_tracks(table)
    assert track_io.write_ctc_tracks(track_io.parse_ctc_tracks(ctc)) == ctc
    g = build_graph(table)
    text = track_io.write_graph_document(g)
    assert track_io.parse_graph_document(text) == g
    assert track_io.write_graph_document(track_io.parse_graph_document(text)) == text


def test_report_table(ref, shifted):
    zero = track_io.write_report(evaluate(ref, ref))
    assert "AOGM 0.0" in zero
    text = track_io.write_report(evaluate(ref, shifted))
    assert "ED  2 × 1.0 = 2.0" in text
    assert "AOGM 28.0" in text
    assert text.startswith("weights: NS=5.0 FN=10.0 FP=1.0 ED=1.0 EA=1.5 EC=1.5\n")


def test_report_json(ref, shifted):
    scores = mitosis_pr(match_mitosis(mitosis_events(ref), mitosis_events(shifted)))
    text = track_io.write_report(evaluate(ref, shifted), "json", scores)
    doc = json.loads(text)
    assert doc["format_version"] == 1
    assert doc["total"] == "28.0"
    assert doc["counts"] == {"NS": 0, "FN": 2, "FP": 0, "ED": 2, "EA": 4, "EC": 0}
    assert doc["terms"]["EA"] == "6.0"
    assert doc["mitosis"] == {"precision": "1.0000", "recall": "1.0000", "f1": "1.0000"}
    assert doc["parent_links"] == {"supported": 0, "wrong_semantics": 0, "unsupported": 2}
    assert text == track_io.write_report(evaluate(ref, shifted), "json", scores)


def test_total_display_rounding():
    assert track_io.fmt_total(Decimal("133.5")) == "133.5"
    assert track_io.fmt_total(Decimal("0.25")) == "0.3"
    assert track_io.fmt_decimal(Decimal("100")) == "100.0"


def test_fuzz_smoke():
    accepted, rejected, bad, unlocated = fuzz(1000, seed=7)
    assert accepted and rejected
    assert bad == [] and unlocated == []
    assert LOCATION.match("vertices[3].bbox")
