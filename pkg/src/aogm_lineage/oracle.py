"""Naive AOGM error counts by plain set comparison.

Kept deliberately separate from :mod:`aogm_lineage.aogm`: it works on
(source, target, semantics) triples mapped through the matching and never
assigns per-edge verdicts. Used to cross-check the classifier.
"""

from __future__ import annotations

from .aogm import AogmCounts
from .lineage_graph import TrackingGraph


def naive_counts(pairs, ref: TrackingGraph, comp: TrackingGraph) -> AogmCounts:
    pairs = set(pairs)
    matched_ref = {r for r, _ in pairs}
    matched_comp = [c for _, c in pairs]
    ref_ids = {v.vertex_id for v in ref.vertices}
    comp_ids = {v.vertex_id for v in comp.vertices}

    fn = len(ref_ids - matched_ref)
    fp = len(comp_ids - set(matched_comp))
    ns = len(matched_comp) - len(set(matched_comp))

    image = dict(pairs)
    ref_triples = {(e.source, e.target, e.semantics.value) for e in ref.edges}
    comp_triples = {(e.source, e.target, e.semantics.value) for e in comp.edges}
    comp_pairs = {(a, b) for a, b, _ in comp_triples}

    induced = {
        (image[u], image[v], s)
        for u, v, s in ref_triples
        if u in image and v in image and image[u] != image[v]
    }
    induced_pairs = {(a, b) for a, b, _ in induced}

    ed = len(comp_pairs - induced_pairs)
    correct = comp_triples & induced
    wrong = {(a, b) for a, b, _ in comp_triples if (a, b) in induced_pairs} - {
        (a, b) for a, b, _ in correct
    }
    ec = len(wrong)

    free = 0
    for u, v, s in ref_triples:
        if u not in image or v not in image:
            continue
        a, b = image[u], image[v]
        if (a, b, s) in comp_triples or (a, b) in wrong:
            free += 1
    ea = len(ref_triples) - free
    return AogmCounts(NS=ns, FN=fn, FP=fp, ED=ed, EA=ea, EC=ec)
