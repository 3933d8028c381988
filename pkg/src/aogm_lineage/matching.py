"""Reference-to-computed vertex correspondence.

Matching is strictly per frame. Three strategies are available:

* ``ExactId`` pairs vertices sharing (track id, frame); meant for simulated
  graphs whose labels are shared with the reference.
* ``CentroidInBox`` pairs a reference vertex with the computed box that
  contains its centroid. One computed box may absorb several reference
  vertices, which is what produces split errors.
* ``IouThreshold`` greedily pairs boxes by descending IoU. It is one-to-one,
  so it never produces splits. Greedy rather than optimal assignment is a
  deliberate simplification.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Union

from .lineage_graph import Box, TrackingGraph, Vertex


class IncomparableGraphs(ValueError):
    pass


@dataclass(frozen=True)
class ExactId:
    name = "id"


@dataclass(frozen=True)
class CentroidInBox:
    name = "centroid"


@dataclass(frozen=True)
class IouThreshold:
    threshold: float = 0.5
    name = "iou"

    def __post_init__(self):
        if not 0 < self.threshold <= 1:
            raise ValueError(f"IoU threshold must lie in (0, 1], got {self.threshold}")


MatchingStrategy = Union[ExactId, CentroidInBox, IouThreshold]


@dataclass(frozen=True)
class Correspondence:
    """Sorted (reference id, computed id) pairs; a reference id occurs at most once."""

    pairs: tuple[tuple[int, int], ...]

    @cached_property
    def comp_of(self) -> dict[int, int]:
        return dict(self.pairs)

    @cached_property
    def multiplicity(self) -> Counter:
        """Number of reference vertices matched to each computed vertex (k_c)."""
        return Counter(c for _, c in self.pairs)

    def is_matched(self, ref_id: int) -> bool:
        return ref_id in self.comp_of


def iou(a: Box, b: Box) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (aw * ah + bw * bh - inter)


def _by_frame(graph: TrackingGraph) -> dict[int, list[Vertex]]:
    out: dict[int, list[Vertex]] = defaultdict(list)
    for v in graph.vertices:
        out[v.frame].append(v)
    return out


def _exact_keys(graph: TrackingGraph, side: str) -> dict[tuple[int, int], int]:
    keys: dict[tuple[int, int], int] = {}
    for v in graph.vertices:
        key = (v.track_id, v.frame)
        if key in keys:
            raise IncomparableGraphs(
                f"{side} graph has two detections of track {v.track_id} at frame {v.frame} "
                f"(vertices {keys[key]} and {v.vertex_id})"
            )
        keys[key] = v.vertex_id
    return keys


def match_vertices(
    ref: TrackingGraph, comp: TrackingGraph, strategy: MatchingStrategy = ExactId()
) -> Correspondence:
    pairs: list[tuple[int, int]] = []
    if not isinstance(strategy, ExactId):
        # geometric matching needs boxes: on the computed side for centroid-in-box, both sides for IoU
        sides = [("computed", comp)] + ([("reference", ref)] if isinstance(strategy, IouThreshold) else [])
        for side, graph in sides:
            boxless = [v.vertex_id for v in graph.vertices if v.bbox is None]
            if boxless:
                raise IncomparableGraphs(
                    f"{strategy.name} matching needs bounding boxes, but {side} vertices "
                    f"{boxless[:5]} have none"
                )
    if isinstance(strategy, ExactId):
        ref_keys = _exact_keys(ref, "reference")
        comp_keys = _exact_keys(comp, "computed")
        pairs = [(rid, comp_keys[k]) for k, rid in ref_keys.items() if k in comp_keys]
    elif isinstance(strategy, CentroidInBox):
        comp_frames = _by_frame(comp)
        for r in ref.vertices:
            hits = [c for c in comp_frames.get(r.frame, ()) if c.contains(r.centroid)]
            if hits:
                best = min(hits, key=lambda c: (math.dist(c.centroid, r.centroid), c.vertex_id))
                pairs.append((r.vertex_id, best.vertex_id))
    elif isinstance(strategy, IouThreshold):
        comp_frames = _by_frame(comp)
        for frame, refs in sorted(_by_frame(ref).items()):
            scored = []
            for r in refs:
                if r.bbox is None:
                    continue
                for c in comp_frames.get(frame, ()):
                    if c.bbox is None:
                        continue
                    overlap = iou(r.bbox, c.bbox)
                    if overlap >= strategy.threshold:
                        scored.append((-overlap, r.vertex_id, c.vertex_id))
            used_r: set[int] = set()
            used_c: set[int] = set()
            for _, rid, cid in sorted(scored):
                if rid not in used_r and cid not in used_c:
                    used_r.add(rid)
                    used_c.add(cid)
                    pairs.append((rid, cid))
    else:
        raise TypeError(f"unknown matching strategy {strategy!r}")
    return Correspondence(tuple(sorted(pairs)))


def strategy_from_name(name: str, threshold: float = 0.5) -> MatchingStrategy:
    if name == "id":
        return ExactId()
    if name == "centroid":
        return CentroidInBox()
    if name == "iou":
        return IouThreshold(threshold)
    raise ValueError(f"unknown matching strategy {name!r}")
