"""Post-hoc mitosis linkage for tracker output that has no lineage.

A track that disappears before the end of the clip becomes a mother for up
to two parentless tracks that appear within ``window`` frames after it and
start within ``radius`` pixels of its last centroid.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .lineage_graph import MAX_DAUGHTERS, TrackTable, check_table


@dataclass(frozen=True)
class LinkerParams:
    window: int = 5
    radius: float = 50.0
    max_daughters: int = MAX_DAUGHTERS

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not self.radius > 0:
            raise ValueError("radius must be > 0")


def link_mitosis(tracks: TrackTable, params: LinkerParams = LinkerParams()) -> TrackTable:
    """Return a copy of ``tracks`` with parent fields filled in by the linkage rule.

    Existing parents are kept and count against a mother's daughter quota.
    Pairs are assigned greedily by (distance, mother end frame, mother label,
    daughter label), so a newborn goes to its nearest eligible mother.
    """
    check_table(tracks)
    final = tracks.last_frame()
    quota = Counter({r.label: params.max_daughters for r in tracks.rows})
    for r in tracks.rows:
        if r.parent is not None:
            quota[r.parent] -= 1

    orphans = [r for r in tracks.rows if r.parent is None]
    pairs = []
    for mother in tracks.rows:
        if mother.end >= final or quota[mother.label] <= 0:
            continue
        anchor = tracks.detections[(mother.label, mother.end)][0]
        for child in orphans:
            if not mother.end < child.begin <= mother.end + params.window:
                continue
            dist = math.dist(anchor, tracks.detections[(child.label, child.begin)][0])
            if dist <= params.radius:
                pairs.append((dist, mother.end, mother.label, child.label))

    parents: dict[int, int] = {}
    for _, _, mother, child in sorted(pairs):
        if child in parents or quota[mother] <= 0:
            continue
        parents[child] = mother
        quota[mother] -= 1
    return tracks.with_parents(parents)
