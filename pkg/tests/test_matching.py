import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aogm_lineage.lineage_graph import Edge, TrackingGraph, Vertex
from aogm_lineage.matching import (
    CentroidInBox,
    ExactId,
    IncomparableGraphs,
    IouThreshold,
    iou,
    match_vertices,
)
from gen import random_pair


def test_identity_exact_id(ref):
    corr = match_vertices(ref, ref, ExactId())
    assert len(corr.pairs) == 6
    assert set(corr.multiplicity.values()) == {1}


def test_shifted_mitosis_leaves_two_unmatched(ref, shifted):
    corr = match_vertices(ref, shifted, ExactId())
    assert len(corr.pairs) == 4
    unmatched = [v for v in ref.vertices if not corr.is_matched(v.vertex_id)]
    assert sorted((v.track_id, v.frame) for v in unmatched) == [(2, 2), (3, 2)]


def test_one_box_covering_two_centroids():
    ref = TrackingGraph.from_parts(
        [Vertex(1, 0, 1, (10.0, 10.0)), Vertex(2, 0, 2, (20.0, 12.0))], []
    )
    comp = TrackingGraph.from_parts([Vertex(7, 0, 5, (15.0, 11.0), (0.0, 0.0, 30.0, 30.0))], [])
    corr = match_vertices(ref, comp, CentroidInBox())
    assert corr.pairs == ((1, 7), (2, 7))
    assert corr.multiplicity[7] == 2


def test_centroid_nearest_then_lowest_id():
    ref = TrackingGraph.from_parts([Vertex(1, 0, 1, (10.0, 10.0))], [])
    box = (0.0, 0.0, 40.0, 40.0)
    comp = TrackingGraph.from_parts(
        [
            Vertex(5, 0, 1, (14.0, 10.0), box),
            Vertex(3, 0, 2, (6.0, 10.0), box),
            Vertex(9, 0, 3, (11.0, 10.0), box),
            Vertex(4, 1, 4, (10.0, 10.0), box),
        ],
        [],
    )
    assert match_vertices(ref, comp, CentroidInBox()).pairs == ((1, 9),)
    comp = TrackingGraph.from_parts([replace(v, centroid=(12.0, 10.0)) for v in comp.vertices[:2]], [])
    assert match_vertices(ref, comp, CentroidInBox()).pairs == ((1, 3),)


def test_iou_is_one_to_one():
    ref = TrackingGraph.from_parts(
        [
            Vertex(1, 0, 1, (10.0, 10.0), (0.0, 0.0, 20.0, 20.0)),
            Vertex(2, 0, 2, (12.0, 10.0), (2.0, 0.0, 20.0, 20.0)),
        ],
        [],
    )
    comp = TrackingGraph.from_parts([Vertex(1, 0, 1, (11.0, 10.0), (1.0, 0.0, 20.0, 20.0))], [])
    corr = match_vertices(ref, comp, IouThreshold(0.5))
    assert len(corr.pairs) == 1
    assert max(corr.multiplicity.values()) == 1


def test_iou_value():
    assert iou((0, 0, 2, 2), (1, 0, 2, 2)) == pytest.approx(2 / 6)
    assert iou((0, 0, 1, 1), (5, 5, 1, 1)) == 0.0


def test_bad_threshold():
    with pytest.raises(ValueError):
        IouThreshold(0.0)
    with pytest.raises(ValueError):
        IouThreshold(1.5)


def test_duplicate_exact_keys(ref):
    dup = TrackingGraph.from_parts(ref.vertices + (replace(ref.vertices[0], vertex_id=99),), [])
    with pytest.raises(IncomparableGraphs):
        match_vertices(ref, dup, ExactId())


def _relabel_ids(graph, offset):
    return TrackingGraph.from_parts(
        [replace(v, vertex_id=v.vertex_id + offset) for v in graph.vertices],
        [Edge(e.source + offset, e.target + offset, e.semantics) for e in graph.edges],
    )


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([ExactId(), CentroidInBox(), IouThreshold(0.3)]))
def test_matching_properties(seed, strategy):
    ref, comp = random_pair(random.Random(seed))
    corr = match_vertices(ref, comp, strategy)
    refs = [r for r, _ in corr.pairs]
    assert len(refs) == len(set(refs))
    assert sum(corr.multiplicity.values()) == len(refs)
    for r, c in corr.pairs:
        assert ref.by_id[r].frame == comp.by_id[c].frame
    if not isinstance(strategy, CentroidInBox):
        assert max(corr.multiplicity.values(), default=1) == 1
    assert match_vertices(ref, comp, strategy) == corr
    if isinstance(strategy, ExactId):
        moved = match_vertices(_relabel_ids(ref, 100), _relabel_ids(comp, 500), strategy)
        assert moved.pairs == tuple(sorted((r + 100, c + 500) for r, c in corr.pairs))


def test_geometric_matching_needs_boxes(ref):
    bare = TrackingGraph.from_parts(tuple(replace(v, bbox=None) for v in ref.vertices), ref.edges)
    with pytest.raises(IncomparableGraphs):
        match_vertices(ref, bare, CentroidInBox())
    with pytest.raises(IncomparableGraphs):
        match_vertices(bare, ref, IouThreshold())
    # centroid-in-box only reads the computed boxes
    assert len(match_vertices(bare, ref, CentroidInBox()).pairs) == 6
