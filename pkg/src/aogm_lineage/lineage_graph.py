"""Acyclic oriented tracking graphs.

Vertices are per-frame detections; edges either continue a track
(``Semantics.TRACK``) or connect a mother's last detection to a daughter's
first detection (``Semantics.PARENT``). Graphs are immutable: every operation
returns a new graph.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

Point = tuple[float, float]
Box = tuple[float, float, float, float]

MAX_DAUGHTERS = 2


class LineageError(ValueError):
    """Base class for structural errors in track tables and graphs."""


class MissingDetection(LineageError):
    pass


class BadParent(LineageError):
    pass


class Semantics(str, Enum):
    TRACK = "track"
    PARENT = "parent"


@dataclass(frozen=True)
class Vertex:
    vertex_id: int
    frame: int
    track_id: int
    centroid: Point
    bbox: Optional[Box] = None

    def contains(self, point: Point) -> bool:
        """True if ``point`` lies inside this vertex's box (edges inclusive)."""
        if self.bbox is None:
            return False
        x, y, w, h = self.bbox
        return x <= point[0] <= x + w and y <= point[1] <= y + h


@dataclass(frozen=True, order=True)
class Edge:
    source: int
    target: int
    semantics: Semantics = Semantics.TRACK


@dataclass(frozen=True)
class TrackingGraph:
    vertices: tuple[Vertex, ...] = ()
    edges: tuple[Edge, ...] = ()

    @classmethod
    def from_parts(cls, vertices: Iterable[Vertex], edges: Iterable[Edge]) -> TrackingGraph:
        """Build a graph with vertices sorted by id and edges by (source, target)."""
        return cls(
            tuple(sorted(vertices, key=lambda v: v.vertex_id)),
            tuple(sorted(edges, key=lambda e: (e.source, e.target, e.semantics.value))),
        )

    @cached_property
    def by_id(self) -> dict[int, Vertex]:
        return {v.vertex_id: v for v in self.vertices}

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], Edge]:
        return {(e.source, e.target): e for e in self.edges}

    @cached_property
    def out_edges(self) -> dict[int, list[Edge]]:
        out: dict[int, list[Edge]] = defaultdict(list)
        for e in self.edges:
            out[e.source].append(e)
        return out

    @cached_property
    def in_edges(self) -> dict[int, list[Edge]]:
        inc: dict[int, list[Edge]] = defaultdict(list)
        for e in self.edges:
            inc[e.target].append(e)
        return inc

    @cached_property
    def tracks(self) -> dict[int, list[Vertex]]:
        """Detections of every track, ordered by frame then vertex id."""
        out: dict[int, list[Vertex]] = defaultdict(list)
        for v in sorted(self.vertices, key=lambda v: (v.frame, v.vertex_id)):
            out[v.track_id].append(v)
        return dict(sorted(out.items()))

    def parent_edges(self) -> list[Edge]:
        return [e for e in self.edges if e.semantics is Semantics.PARENT]

    def without_edge(self, edge: Edge) -> TrackingGraph:
        return TrackingGraph(self.vertices, tuple(e for e in self.edges if e != edge))

    def next_vertex_id(self) -> int:
        return max((v.vertex_id for v in self.vertices), default=0) + 1


@dataclass(frozen=True)
class TrackRow:
    label: int
    begin: int
    end: int
    parent: Optional[int] = None


@dataclass(frozen=True)
class TrackTable:
    """Per-track records plus per-detection geometry keyed by (label, frame).

    ``synthetic_geometry`` marks tables whose centroids were filled with
    (0, 0) because no detection source was available.
    """

    rows: tuple[TrackRow, ...]
    detections: Mapping[tuple[int, int], tuple[Point, Optional[Box]]] = field(default_factory=dict)
    synthetic_geometry: bool = False

    def row(self, label: int) -> TrackRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def last_frame(self) -> int:
        return max((r.end for r in self.rows), default=0)

    def with_parents(self, parents: Mapping[int, int]) -> TrackTable:
        rows = tuple(
            TrackRow(r.label, r.begin, r.end, parents.get(r.label, r.parent)) for r in self.rows
        )
        return TrackTable(rows, self.detections, self.synthetic_geometry)


@dataclass(frozen=True)
class MitosisEvent:
    mother_track: int
    mother_frame: int
    mother_centroid: Point
    daughters: tuple[tuple[int, int, Point], ...]


def check_table(tracks: TrackTable) -> None:
    """Raise if ``tracks`` breaks a table invariant."""
    labels: dict[int, TrackRow] = {}
    for r in tracks.rows:
        if r.label < 1:
            raise LineageError(f"track {r.label}: label must be positive")
        if r.label in labels:
            raise LineageError(f"track {r.label}: duplicate label")
        if r.begin < 0 or r.begin > r.end:
            raise LineageError(f"track {r.label}: bad frame range {r.begin}..{r.end}")
        labels[r.label] = r
    children: dict[int, int] = defaultdict(int)
    for r in tracks.rows:
        if r.parent is None:
            continue
        mother = labels.get(r.parent)
        if mother is None or r.parent == r.label:
            raise BadParent(f"track {r.label}: unknown parent {r.parent}")
        if mother.end >= r.begin:
            raise BadParent(
                f"track {r.label}: begins at {r.begin} but parent {r.parent} ends at {mother.end}"
            )
        children[r.parent] += 1
        if children[r.parent] > MAX_DAUGHTERS:
            raise BadParent(f"track {r.parent}: more than {MAX_DAUGHTERS} daughters")
    for r in tracks.rows:
        for f in range(r.begin, r.end + 1):
            if (r.label, f) not in tracks.detections:
                raise MissingDetection(f"track {r.label}: no detection at frame {f}")


def build_graph(tracks: TrackTable) -> TrackingGraph:
    """Convert a track table into a graph.

    Vertex ids are assigned from 1 in (frame, label) order.
    """
    check_table(tracks)
    keys = sorted(
        ((f, r.label) for r in tracks.rows for f in range(r.begin, r.end + 1))
    )
    ids = {key: i for i, key in enumerate(keys, start=1)}
    vertices = []
    for (f, label), vid in ids.items():
        centroid, bbox = tracks.detections[(label, f)]
        vertices.append(Vertex(vid, f, label, centroid, bbox))
    edges = []
    for r in tracks.rows:
        for f in range(r.begin, r.end):
            edges.append(Edge(ids[(f, r.label)], ids[(f + 1, r.label)], Semantics.TRACK))
        if r.parent is not None:
            mother = tracks.row(r.parent)
            edges.append(
                Edge(ids[(mother.end, mother.label)], ids[(r.begin, r.label)], Semantics.PARENT)
            )
    return TrackingGraph.from_parts(vertices, edges)


def table_from_graph(graph: TrackingGraph) -> TrackTable:
    """Inverse of :func:`build_graph` for graphs whose tracks are frame-contiguous."""
    rows = []
    detections = {}
    for label, dets in graph.tracks.items():
        frames = [v.frame for v in dets]
        if frames != list(range(frames[0], frames[0] + len(frames))):
            raise LineageError(f"track {label}: not frame-contiguous")
        parents = {
            graph.by_id[e.source].track_id
            for e in graph.in_edges.get(dets[0].vertex_id, [])
            if e.semantics is Semantics.PARENT
        }
        if len(parents) > 1:
            raise BadParent(f"track {label}: several parents {sorted(parents)}")
        rows.append(TrackRow(label, frames[0], frames[-1], parents.pop() if parents else None))
        for v in dets:
            detections[(label, v.frame)] = (v.centroid, v.bbox)
    return TrackTable(tuple(rows), detections)


@dataclass(frozen=True)
class Violation:
    kind: str
    elements: tuple

    def __str__(self) -> str:
        return f"{self.kind}: {', '.join(map(str, self.elements))}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    def __bool__(self) -> bool:
        return bool(self.violations)

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def validate(graph: TrackingGraph) -> ValidationReport:
    """List every broken graph invariant. An empty report means the graph is valid."""
    found: list[Violation] = []

    def bad(kind: str, *elements) -> None:
        found.append(Violation(kind, elements))

    seen: set[int] = set()
    for v in graph.vertices:
        if v.vertex_id in seen:
            bad("duplicate vertex id", v.vertex_id)
        seen.add(v.vertex_id)
        if v.frame < 0:
            bad("negative frame", v.vertex_id)
        if v.track_id < 1:
            bad("non-positive track id", v.vertex_id)
        if not all(math.isfinite(c) for c in v.centroid):
            bad("non-finite centroid", v.vertex_id)
        if v.bbox is not None and (
            not all(math.isfinite(c) for c in v.bbox) or v.bbox[2] <= 0 or v.bbox[3] <= 0
        ):
            bad("invalid bbox", v.vertex_id)

    by_id = graph.by_id
    pairs: set[tuple[int, int]] = set()
    usable: list[Edge] = []
    for e in graph.edges:
        if e.source not in by_id or e.target not in by_id:
            bad("dangling edge", e.source, e.target)
            continue
        if (e.source, e.target) in pairs:
            bad("duplicate edge", e.source, e.target)
            continue
        pairs.add((e.source, e.target))
        a, b = by_id[e.source], by_id[e.target]
        if a.frame >= b.frame:
            bad("non-forward edge", e.source, e.target)
        same = a.track_id == b.track_id
        if same != (e.semantics is Semantics.TRACK):
            bad("semantics mismatch", e.source, e.target)
        usable.append(e)

    track_out: dict[int, int] = defaultdict(int)
    track_in: dict[int, int] = defaultdict(int)
    parent_in: dict[int, int] = defaultdict(int)
    daughters: dict[int, set[int]] = defaultdict(set)
    for e in usable:
        if e.semantics is Semantics.TRACK:
            track_out[e.source] += 1
            track_in[e.target] += 1
        else:
            parent_in[e.target] += 1
            daughters[e.source].add(by_id[e.target].track_id)
    for vid, n in sorted(track_out.items()):
        if n > 1:
            bad("track branching without ParentLink", vid)
    for vid, n in sorted(track_in.items()):
        if n > 1:
            bad("track merge", vid)
    for vid, n in sorted(parent_in.items()):
        if n > 1:
            bad("multiple parents", vid)
    for vid, tracks in sorted(daughters.items()):
        if len(tracks) > MAX_DAUGHTERS:
            bad("too many daughters", vid)

    frames_of: dict[int, list[int]] = defaultdict(list)
    first: dict[int, int] = {}
    last: dict[int, int] = {}
    for v in graph.vertices:
        frames_of[v.track_id].append(v.frame)
        first[v.track_id] = min(first.get(v.track_id, v.frame), v.frame)
        last[v.track_id] = max(last.get(v.track_id, v.frame), v.frame)
    for e in usable:
        a, b = by_id[e.source], by_id[e.target]
        if e.semantics is Semantics.TRACK:
            if a.track_id == b.track_id and any(
                a.frame < f < b.frame for f in frames_of[a.track_id]
            ):
                bad("track link skips detection", e.source, e.target)
        else:
            if a.frame != last[a.track_id]:
                bad("parent link from non-last detection", e.source, e.target)
            if b.frame != first[b.track_id]:
                bad("parent link into non-first detection", e.source, e.target)
    return ValidationReport(tuple(found))


def strip_parent_edges(graph: TrackingGraph) -> TrackingGraph:
    """Drop every ParentLink; vertices and TrackLinks are kept as they are."""
    return TrackingGraph(
        graph.vertices, tuple(e for e in graph.edges if e.semantics is not Semantics.PARENT)
    )


def mitosis_events(graph: TrackingGraph) -> list[MitosisEvent]:
    by_id = graph.by_id
    grouped: dict[int, list[Vertex]] = defaultdict(list)
    for e in graph.parent_edges():
        grouped[e.source].append(by_id[e.target])
    events = []
    for vid, kids in grouped.items():
        mother = by_id[vid]
        kids = sorted(kids, key=lambda v: (v.frame, v.track_id))
        events.append(
            MitosisEvent(
                mother.track_id,
                mother.frame,
                mother.centroid,
                tuple((k.track_id, k.frame, k.centroid) for k in kids),
            )
        )
    events.sort(key=lambda ev: (ev.mother_frame, ev.mother_track))
    return events


def relabel_track(graph: TrackingGraph, old: int, new: int) -> TrackingGraph:
    """Give every detection of track ``old`` the label ``new``.

    Edge semantics are recomputed from the new labels, so a ParentLink
    between the two tracks becomes a TrackLink.
    """
    vertices = [
        Vertex(v.vertex_id, v.frame, new, v.centroid, v.bbox) if v.track_id == old else v
        for v in graph.vertices
    ]
    by_id = {v.vertex_id: v for v in vertices}
    edges = [
        Edge(
            e.source,
            e.target,
            Semantics.TRACK
            if by_id[e.source].track_id == by_id[e.target].track_id
            else Semantics.PARENT,
        )
        for e in graph.edges
    ]
    return TrackingGraph.from_parts(vertices, edges)


def drop_vertices(graph: TrackingGraph, ids: Sequence[int] | set[int]) -> TrackingGraph:
    gone = set(ids)
    return TrackingGraph(
        tuple(v for v in graph.vertices if v.vertex_id not in gone),
        tuple(e for e in graph.edges if e.source not in gone and e.target not in gone),
    )
