"""Random valid track tables and (reference, computed) graph pairs for property tests."""

from __future__ import annotations

import random

from aogm_lineage.lineage_graph import (
    Edge,
    Semantics,
    TrackingGraph,
    TrackRow,
    TrackTable,
    Vertex,
    build_graph,
    drop_vertices,
    relabel_track,
    validate,
)


def position(label: int, frame: int) -> tuple[float, float]:
    return (30.0 * label + 2.0 * frame, 50.0 + frame)


def geometry(label: int, frame: int, width: float = 20.0):
    x, y = position(label, frame)
    return (x, y), (x - width / 2, y - 10.0, width, 20.0)


def random_rows(rng: random.Random, max_frames: int = 8, max_tracks: int = 8, first_label: int = 1):
    rows = []
    children: dict[int, int] = {}
    for label in range(first_label, first_label + rng.randint(1, max_tracks)):
        begin = rng.randrange(max_frames)
        end = rng.randint(begin, max_frames - 1)
        mothers = [r for r in rows if r.end < begin and children.get(r.label, 0) < 2]
        parent = None
        if mothers and rng.random() < 0.6:
            parent = rng.choice(mothers).label
            children[parent] = children.get(parent, 0) + 1
        rows.append(TrackRow(label, begin, end, parent))
    return rows


def table_of(rows, width: float = 20.0) -> TrackTable:
    detections = {
        (r.label, f): geometry(r.label, f, width) for r in rows for f in range(r.begin, r.end + 1)
    }
    return TrackTable(tuple(rows), detections)


def random_table(rng: random.Random, max_frames: int = 8, max_tracks: int = 8) -> TrackTable:
    return table_of(random_rows(rng, max_frames, max_tracks))


def _mutate_rows(rng: random.Random, rows, max_frames: int, max_tracks: int):
    out = []
    for r in rows:
        if rng.random() < 0.15:
            continue
        begin = min(max(0, r.begin + rng.choice((-1, 0, 0, 1))), max_frames - 1)
        end = min(max(begin, r.end + rng.choice((-1, 0, 0, 1))), max_frames - 1)
        out.append(TrackRow(r.label, begin, end, r.parent))
    if rng.random() < 0.4 and len(out) < max_tracks:
        extra = random_rows(rng, max_frames, 1, first_label=max((r.label for r in rows), default=0) + 1)
        out.extend(extra)
    # repair or randomize parents
    labels = {r.label: r for r in out}
    children: dict[int, int] = {}
    fixed = []
    for r in sorted(out, key=lambda r: r.label):
        parent = r.parent
        if rng.random() < 0.25:
            parent = None
            mothers = [m for m in fixed if m.end < r.begin and children.get(m.label, 0) < 2]
            if mothers and rng.random() < 0.5:
                parent = rng.choice(mothers).label
        if parent is not None and (
            parent not in labels or labels[parent].end >= r.begin or children.get(parent, 0) >= 2
        ):
            parent = None
        if parent is not None:
            children[parent] = children.get(parent, 0) + 1
        fixed.append(TrackRow(r.label, r.begin, r.end, parent))
    return fixed


def _try(graph: TrackingGraph, candidate: TrackingGraph) -> TrackingGraph:
    return graph if validate(candidate) else candidate


def random_pair(
    rng: random.Random, max_frames: int = 8, max_tracks: int = 8
) -> tuple[TrackingGraph, TrackingGraph]:
    """A reference graph and a noisy computed graph over shared positions.

    Computed graphs sometimes use wide boxes (splits under centroid matching),
    lose vertices, continue a mother into a daughter, or gain spurious links.
    """
    ref_rows = random_rows(rng, max_frames, max_tracks)
    ref = build_graph(table_of(ref_rows))
    width = rng.choice((20.0, 20.0, 70.0))
    comp = build_graph(table_of(_mutate_rows(rng, ref_rows, max_frames, max_tracks), width))
    if comp.vertices and rng.random() < 0.5:
        doomed = {v.vertex_id for v in comp.vertices if rng.random() < 0.12}
        comp = drop_vertices(comp, doomed)
    parents = comp.parent_edges()
    if parents and rng.random() < 0.3:
        e = rng.choice(parents)
        mother = comp.by_id[e.source].track_id
        daughter = comp.by_id[e.target].track_id
        trimmed = TrackingGraph(
            comp.vertices,
            tuple(x for x in comp.edges if not (x.source == e.source and x.semantics is Semantics.PARENT and x != e)),
        )
        comp = _try(comp, relabel_track(trimmed, daughter, mother))
    long_tracks = [dets for dets in comp.tracks.values() if len(dets) >= 2]
    if long_tracks and rng.random() < 0.3:
        # cut a track in two and call the cut a division
        dets = rng.choice(long_tracks)
        cut = rng.randrange(1, len(dets))
        fresh = max(comp.tracks) + 1
        tail = {v.vertex_id for v in dets[cut:]}
        vertices = [
            Vertex(v.vertex_id, v.frame, fresh, v.centroid, v.bbox) if v.vertex_id in tail else v
            for v in comp.vertices
        ]
        edges = [
            Edge(e.source, e.target, Semantics.PARENT)
            if e.source == dets[cut - 1].vertex_id and e.target == dets[cut].vertex_id
            else e
            for e in comp.edges
        ]
        comp = _try(comp, TrackingGraph.from_parts(vertices, edges))
    if rng.random() < 0.4 and comp.vertices:
        tracks = comp.tracks
        labels = list(tracks)
        a, b = rng.choice(labels), rng.choice(labels)
        if a != b:
            edge = Edge(tracks[a][-1].vertex_id, tracks[b][0].vertex_id, Semantics.PARENT)
            if (edge.source, edge.target) not in comp.edge_index:
                comp = _try(comp, TrackingGraph.from_parts(comp.vertices, comp.edges + (edge,)))
    return ref, comp
