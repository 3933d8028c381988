"""Synthetic lineages, tracking mistakes, and the with/without-links comparison.

Every scenario pairs a reference graph with a computed graph that carries
mitosis links and the same computed graph with those links stripped. All
builders lay cells out on a 40 px grid with 20 px boxes so that centroid
matching never confuses neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement, product
from typing import Iterable, Optional, Sequence, Union

from .aogm import AogmWeights, aogm_score, count_errors, evaluate
from .lineage_graph import (
    Edge,
    MitosisEvent,
    Semantics,
    TrackingGraph,
    TrackRow,
    TrackTable,
    build_graph,
    drop_vertices,
    mitosis_events,
    relabel_track,
    strip_parent_edges,
    validate,
)
from .matching import CentroidInBox, MatchingStrategy, match_vertices
from .mitosis_metrics import match_mitosis, mitosis_pr
from .oracle import naive_counts

SPACING = 40.0
BOX = 20.0
MAX_ENUM_FRAMES = 6
MAX_ENUM_TRACKS = 7


class BadSchedule(ValueError):
    pass


class NotApplicable(ValueError):
    pass


class BoundsTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class ShiftDaughterOnset:
    frames: int = 1

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("shift must be at least one frame")


@dataclass(frozen=True)
class ExtendMotherIntoDaughter:
    daughter: int = 0


@dataclass(frozen=True)
class WrongSemanticsContinuation:
    daughter: int = 0


@dataclass(frozen=True)
class DropVertices:
    """Remove detections given as (track, frame) keys.

    With ``relink`` the event's parent links are redrawn from the mother's
    remaining last detection to each daughter's remaining first detection.
    """

    detections: frozenset = frozenset()
    relink: bool = False


Perturbation = Union[ShiftDaughterOnset, ExtendMotherIntoDaughter, WrongSemanticsContinuation, DropVertices]


@dataclass(frozen=True)
class ScenarioPair:
    name: str
    reference: TrackingGraph
    computed_with_links: TrackingGraph
    computed_without_links: TrackingGraph
    strategy: MatchingStrategy = field(default_factory=CentroidInBox)
    expectation: Optional[str] = None

    def totals(self, weights: AogmWeights = AogmWeights()):
        with_links = evaluate(self.reference, self.computed_with_links, self.strategy, weights)
        without = evaluate(self.reference, self.computed_without_links, self.strategy, weights)
        return with_links.total, without.total


def make_pair(name, reference, computed, expectation=None, strategy=None) -> ScenarioPair:
    return ScenarioPair(
        name,
        reference,
        computed,
        strip_parent_edges(computed),
        strategy or CentroidInBox(),
        expectation,
    )


def _detection(x: float, y: float = 100.0):
    return (x, y), (x - BOX / 2, y - BOX / 2, BOX, BOX)


def binary_tree_reference(divisions: Sequence[int] = (1, 4, 7), last_frame: int = 9) -> TrackingGraph:
    """Full binary lineage of one root cell.

    Every cell alive at ``divisions[g]`` ends there and two daughters start
    on the next frame. Labels follow heap numbering (root 1, children 2k and
    2k+1).
    """
    divisions = list(divisions)
    if divisions and divisions[0] < 0:
        raise BadSchedule("division frames must be non-negative")
    if any(b <= a for a, b in zip(divisions, divisions[1:])):
        raise BadSchedule(f"division frames must be strictly increasing: {divisions}")
    if divisions and divisions[-1] >= last_frame:
        raise BadSchedule(f"last division {divisions[-1]} must precede last frame {last_frame}")
    depth = len(divisions)
    rows = []
    detections = {}
    for gen in range(depth + 1):
        begin = 0 if gen == 0 else divisions[gen - 1] + 1
        end = divisions[gen] if gen < depth else last_frame
        for i in range(2**gen):
            label = 2**gen + i
            x = SPACING * 2 ** (depth - gen) * (i + 0.5)
            rows.append(TrackRow(label, begin, end, label // 2 if gen else None))
            for f in range(begin, end + 1):
                detections[(label, f)] = _detection(x)
    return build_graph(TrackTable(tuple(rows), detections))


def _find_event(graph: TrackingGraph, at: MitosisEvent) -> MitosisEvent:
    for ev in mitosis_events(graph):
        if ev.mother_track == at.mother_track:
            return ev
    raise NotApplicable(f"no mitosis event with mother track {at.mother_track}")


def _relink(graph: TrackingGraph, mother: int, daughters: Iterable[int]) -> TrackingGraph:
    tracks = graph.tracks
    if mother not in tracks:
        return graph
    source = tracks[mother][-1].vertex_id
    edges = list(graph.edges)
    have = {(e.source, e.target) for e in edges}
    for d in daughters:
        if d in tracks and (source, tracks[d][0].vertex_id) not in have:
            edges.append(Edge(source, tracks[d][0].vertex_id, Semantics.PARENT))
    return TrackingGraph.from_parts(graph.vertices, edges)


def _drop_sibling_links(graph: TrackingGraph, event: MitosisEvent, keep: int) -> TrackingGraph:
    source = graph.tracks[event.mother_track][-1].vertex_id
    return TrackingGraph(
        graph.vertices,
        tuple(
            e
            for e in graph.edges
            if not (
                e.source == source
                and e.semantics is Semantics.PARENT
                and graph.by_id[e.target].track_id != keep
            )
        ),
    )


def perturb(graph: TrackingGraph, at: MitosisEvent, p: Perturbation) -> TrackingGraph:
    """Apply one tracking mistake around mitosis event ``at``.

    Continuation mistakes turn the chosen parent link into a track link; since
    a continuing track cannot divide mid-track, the mother's links to the
    other daughters are removed.
    """
    event = _find_event(graph, at)
    daughters = [d[0] for d in event.daughters]
    if isinstance(p, ShiftDaughterOnset):
        doomed = set()
        for d in daughters:
            dets = graph.tracks[d]
            if len(dets) <= p.frames:
                raise NotApplicable(f"track {d} has only {len(dets)} detections")
            doomed.update(v.vertex_id for v in dets[: p.frames])
        out = _relink(drop_vertices(graph, doomed), event.mother_track, daughters)
    elif isinstance(p, DropVertices):
        keys = {(v.track_id, v.frame): v.vertex_id for v in graph.vertices}
        missing = [k for k in p.detections if k not in keys]
        if missing:
            raise NotApplicable(f"no detections at {sorted(missing)}")
        out = drop_vertices(graph, {keys[k] for k in p.detections})
        if p.relink:
            out = _relink(out, event.mother_track, daughters)
    elif isinstance(p, (ExtendMotherIntoDaughter, WrongSemanticsContinuation)):
        if not 0 <= p.daughter < len(daughters):
            raise NotApplicable(f"event of track {event.mother_track} has no daughter #{p.daughter}")
        chosen = daughters[p.daughter]
        out = _drop_sibling_links(graph, event, chosen)
        if isinstance(p, ExtendMotherIntoDaughter):
            out = relabel_track(out, chosen, event.mother_track)
        else:
            out = relabel_track(out, event.mother_track, chosen)
    else:
        raise TypeError(f"unknown perturbation {p!r}")
    report = validate(out)
    if report:
        raise NotApplicable(f"perturbation yields an invalid graph: {report.violations[0]}")
    return out


def figure1_cases() -> list[ScenarioPair]:
    """Four predictions of a single division (mother t0-t1, daughters t2-t3).

    The two "blue" predictions keep every predicted parent link supported, so
    linking improves AOGM. The two "red" ones detect the division a frame
    late, so each predicted parent link is unsupported and linking makes AOGM
    worse.
    """
    ref = binary_tree_reference((1,), 3)
    event = mitosis_events(ref)[0]
    late_single = DropVertices(frozenset({(2, 2), (3, 2), (3, 3)}), relink=True)
    return [
        make_pair("exact", ref, ref, "blue"),
        make_pair("missed-mother-onset", ref, perturb(ref, event, DropVertices(frozenset({(1, 0)}))), "blue"),
        make_pair("shifted-onset", ref, perturb(ref, event, ShiftDaughterOnset(1)), "red"),
        make_pair("late-single-daughter", ref, perturb(ref, event, late_single), "red"),
    ]


MISTAKES = ("shift", "extend", "drop", "wrong-semantics", "none")
DEFAULT_MIX = ("shift", "extend", "drop", "shift", "extend", "drop", "shift")


def _mistake(kind: str, event: MitosisEvent) -> Optional[Perturbation]:
    if kind == "shift":
        return ShiftDaughterOnset(1)
    if kind == "extend":
        return ExtendMotherIntoDaughter(0)
    if kind == "wrong-semantics":
        return WrongSemanticsContinuation(0)
    if kind == "drop":
        return DropVertices(frozenset({(event.mother_track, event.mother_frame)}), relink=True)
    if kind == "none":
        return None
    raise ValueError(f"unknown mistake {kind!r}; expected one of {MISTAKES}")


def figure2_pair(
    divisions: Sequence[int] = (1, 4, 7),
    last_frame: int = 9,
    mix: Optional[Sequence[str]] = None,
) -> ScenarioPair:
    """Seven-event lineage whose every division is predicted with a mistake.

    ``mix`` names one mistake per event, in event order (mother's last
    frame, then label): ``shift`` starts both daughters a frame late,
    ``extend`` continues the mother's label into its first daughter,
    ``drop`` loses the mother's last detection, ``wrong-semantics`` carries
    the first daughter's label back onto the mother, ``none`` keeps the event
    exact. The default is three shifts, two extends and two drops.
    """
    ref = binary_tree_reference(divisions, last_frame)
    events = mitosis_events(ref)
    if mix is None:
        mix = [DEFAULT_MIX[i % len(DEFAULT_MIX)] for i in range(len(events))]
    if len(mix) != len(events):
        raise ValueError(f"mix names {len(mix)} mistakes for {len(events)} events")
    comp = ref
    # deepest first, so relabels never rename a mother still to be visited
    for event, kind in sorted(zip(events, mix), key=lambda ek: (-ek[0].mother_frame, -ek[0].mother_track)):
        p = _mistake(kind, event)
        if p is not None:
            comp = perturb(comp, event, p)
    return make_pair("figure2-" + "-".join(mix), ref, comp)


# --- exhaustive search -------------------------------------------------------


def _single_event_reference(mother_end: int, daughters: Sequence[tuple[int, int]]) -> TrackingGraph:
    rows = [TrackRow(1, 0, mother_end)]
    detections = {(1, f): _detection(100.0) for f in range(mother_end + 1)}
    for i, (begin, end) in enumerate(daughters):
        label = 2 + i
        rows.append(TrackRow(label, begin, end, 1))
        x = 100.0 + (-SPACING / 2 if i == 0 else SPACING / 2)
        for f in range(begin, end + 1):
            detections[(label, f)] = _detection(x)
    return build_graph(TrackTable(tuple(rows), detections))


def _subset_prediction(ref: TrackingGraph, keep: set[int]) -> TrackingGraph:
    """Keep only ``keep`` vertices, bridge gaps inside tracks and relink the division."""
    vertices = [v for v in ref.vertices if v.vertex_id in keep]
    edges = []
    tracks: dict[int, list] = {}
    for v in sorted(vertices, key=lambda v: v.frame):
        tracks.setdefault(v.track_id, []).append(v)
    for dets in tracks.values():
        edges.extend(Edge(a.vertex_id, b.vertex_id, Semantics.TRACK) for a, b in zip(dets, dets[1:]))
    if 1 in tracks:
        source = tracks[1][-1].vertex_id
        edges.extend(
            Edge(source, dets[0].vertex_id, Semantics.PARENT) for t, dets in tracks.items() if t != 1
        )
    return TrackingGraph.from_parts(vertices, edges)


def _intervals(first: int, last: int):
    return [(b, e) for b in range(first, last + 1) for e in range(b, last + 1)]


def _reference_shapes(max_frames: int, max_tracks: int):
    for mother_end in range(max_frames - 1):
        spans = _intervals(mother_end + 1, max_frames - 1)
        for span in spans:
            yield mother_end, (span,)
        if max_tracks >= 3:
            for pair in combinations_with_replacement(spans, 2):
                yield mother_end, pair


def _subsets(items: Sequence[int]):
    for r in range(len(items) + 1):
        yield from combinations(items, r)


def enumerate_inversions(
    max_frames: int,
    max_tracks: int,
    weights: AogmWeights = AogmWeights(),
) -> list[ScenarioPair]:
    """Find every small single-division prediction that AOGM punishes for linking.

    References are one mother track starting at frame 0 plus one or two
    daughters, within ``max_frames`` frames and ``max_tracks`` tracks.
    Predictions keep any subset of the reference detections, bridge the gaps
    inside each track, and link the mother's last kept detection to each
    daughter's first kept one. A pair is returned when linking raises AOGM
    while mitosis recall stays at 1.0. Label-swapping mistakes are not
    enumerated: they always lose the division event, so recall drops.

    Every returned pair has been cross-checked against the naive counter.
    """
    if max_frames > MAX_ENUM_FRAMES or max_tracks > MAX_ENUM_TRACKS:
        raise BoundsTooLarge(
            f"bounds ({max_frames}, {max_tracks}) exceed ({MAX_ENUM_FRAMES}, {MAX_ENUM_TRACKS})"
        )
    if max_frames < 2 or max_tracks < 2:
        return []
    strategy = CentroidInBox()
    found = {}
    for mother_end, spans in _reference_shapes(max_frames, max_tracks):
        ref = _single_event_reference(mother_end, spans)
        ref_events = mitosis_events(ref)
        per_track = [[v.vertex_id for v in dets] for dets in ref.tracks.values()]
        for choice in product(*(list(_subsets(ids)) for ids in per_track)):
            key = _canonical_key(ref, spans, choice)
            if key in found:
                continue
            comp = _subset_prediction(ref, {vid for part in choice for vid in part})
            bare = strip_parent_edges(comp)
            corr = match_vertices(ref, comp, strategy)
            with_counts, _ = count_errors(corr, ref, comp)
            without_counts, _ = count_errors(corr, ref, bare)
            if aogm_score(with_counts, weights) <= aogm_score(without_counts, weights):
                continue
            scores = mitosis_pr(match_mitosis(ref_events, mitosis_events(comp)))
            if scores.recall != 1.0:
                continue
            for graph, counts in ((comp, with_counts), (bare, without_counts)):
                if naive_counts(corr.pairs, ref, graph) != counts:
                    raise RuntimeError(f"classifier and naive counter disagree on {key}")
            found[key] = make_pair(_pair_name(spans, mother_end, choice, ref), ref, comp, "red", strategy)
    pairs = list(found.items())
    pairs.sort(
        key=lambda kv: (
            len(kv[1].reference.vertices) + len(kv[1].computed_with_links.vertices),
            kv[0],
        )
    )
    return [p for _, p in pairs]


def _canonical_key(ref: TrackingGraph, spans, choice) -> tuple:
    tracks = list(ref.tracks.values())
    frames = [tuple(ref.by_id[vid].frame for vid in part) for part in choice]
    mother = (tracks[0][-1].frame, frames[0])
    daughters = sorted(
        ((span, kept) for span, kept in zip(spans, frames[1:])),
    )
    return (mother, tuple(daughters))


def _pair_name(spans, mother_end, choice, ref) -> str:
    kept = "+".join(
        ".".join(str(ref.by_id[vid].frame) for vid in part) or "none" for part in choice
    )
    daughters = "_".join(f"d{b}-{e}" for b, e in spans)
    return f"inversion-m0-{mother_end}_{daughters}_keep-{kept}"
