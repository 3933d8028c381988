"""Event-level mitosis recall and precision.

Events are anchored at the mother's last detection. A predicted event counts
as a detection of a reference event when the anchors are within
``temporal`` frames and ``spatial`` pixels of each other; the number of
daughters is recorded but does not have to agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .lineage_graph import MitosisEvent


@dataclass(frozen=True)
class MitosisTolerances:
    temporal: int = 5
    spatial: float = 50.0

    def __post_init__(self):
        if self.temporal < 0:
            raise ValueError("temporal tolerance must be >= 0")
        if not self.spatial > 0:
            raise ValueError("spatial tolerance must be > 0")


@dataclass(frozen=True)
class MitosisPair:
    ref: MitosisEvent
    comp: MitosisEvent
    frame_offset: int
    distance: float

    @property
    def daughter_count_differs(self) -> bool:
        return len(self.ref.daughters) != len(self.comp.daughters)


@dataclass(frozen=True)
class MitosisMatchResult:
    matched: tuple[MitosisPair, ...]
    unmatched_ref: tuple[MitosisEvent, ...]
    unmatched_comp: tuple[MitosisEvent, ...]


class MitosisScores(NamedTuple):
    precision: float
    recall: float
    f1: float


def match_mitosis(
    ref_events: Sequence[MitosisEvent],
    comp_events: Sequence[MitosisEvent],
    tol: MitosisTolerances = MitosisTolerances(),
) -> MitosisMatchResult:
    """Pair events one-to-one within tolerance.

    The assignment maximizes the number of pairs first and minimizes the
    summed anchor distance second, so widening a tolerance can never lose a
    pair and swapping the two sides yields the mirrored result.
    """
    n, m = len(ref_events), len(comp_events)
    allowed = np.zeros((n, m), dtype=bool)
    cost = np.zeros((n, m))
    for i, r in enumerate(ref_events):
        for j, c in enumerate(comp_events):
            dist = math.dist(r.mother_centroid, c.mother_centroid)
            offset = abs(c.mother_frame - r.mother_frame)
            allowed[i, j] = offset <= tol.temporal and dist <= tol.spatial
            cost[i, j] = dist
    matched = []
    used_r: set[int] = set()
    used_c: set[int] = set()
    if allowed.any():
        # a forbidden pair must cost more than any complete set of allowed ones
        forbidden = cost[allowed].sum() + 1.0
        rows, cols = linear_sum_assignment(np.where(allowed, cost, forbidden * (n + m)))
        order = sorted(zip(rows, cols), key=lambda ij: (ref_events[ij[0]].mother_frame, ref_events[ij[0]].mother_track))
        for i, j in order:
            if allowed[i, j]:
                r, c = ref_events[i], comp_events[j]
                matched.append(
                    MitosisPair(r, c, c.mother_frame - r.mother_frame, float(cost[i, j]))
                )
                used_r.add(i)
                used_c.add(j)
    return MitosisMatchResult(
        tuple(matched),
        tuple(e for i, e in enumerate(ref_events) if i not in used_r),
        tuple(e for j, e in enumerate(comp_events) if j not in used_c),
    )


def mitosis_pr(result: MitosisMatchResult) -> MitosisScores:
    """Precision, recall and F1; an empty side scores 1.0 by convention."""
    hits = len(result.matched)
    n_ref = hits + len(result.unmatched_ref)
    n_comp = hits + len(result.unmatched_comp)
    recall = hits / n_ref if n_ref else 1.0
    precision = hits / n_comp if n_comp else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return MitosisScores(precision, recall, f1)
