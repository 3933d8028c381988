"""AOGM: weighted count of the graph edits turning a computed graph into the reference.

    AOGM = w_NS*NS + w_FN*FN + w_FP*FP + w_ED*ED + w_EA*EA + w_EC*EC

Conventions this implementation commits to:

* NS counts split operations, k_c - 1 for a computed vertex matched by k_c
  reference vertices.
* Edges touching a false-positive vertex are unsupported and count in ED.
* A reference edge whose endpoints collapse onto one computed vertex is EA.
* An edge present with the wrong semantics is charged once, as EC.

Scores are exact ``Decimal`` values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from decimal import Decimal
from enum import Enum
from typing import Union

from .lineage_graph import Edge, Semantics, TrackingGraph
from .matching import Correspondence, ExactId, MatchingStrategy, match_vertices

TERMS = ("NS", "FN", "FP", "ED", "EA", "EC")

Number = Union[int, float, str, Decimal]


def to_decimal(value: Number) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if isinstance(value, float):
        return Decimal(repr(value))
    return Decimal(value)


@dataclass(frozen=True)
class AogmWeights:
    NS: Decimal = Decimal("5")
    FN: Decimal = Decimal("10")
    FP: Decimal = Decimal("1")
    ED: Decimal = Decimal("1")
    EA: Decimal = Decimal("1.5")
    EC: Decimal = Decimal("1.5")

    def __post_init__(self):
        for f in fields(self):
            value = to_decimal(getattr(self, f.name))
            if not value.is_finite() or value < 0:
                raise ValueError(f"weight {f.name} must be a non-negative number, got {value}")
            object.__setattr__(self, f.name, value)

    def scaled(self, factor: Number) -> AogmWeights:
        k = to_decimal(factor)
        return AogmWeights(*(getattr(self, t) * k for t in TERMS))

    def as_dict(self) -> dict[str, Decimal]:
        return {t: getattr(self, t) for t in TERMS}


@dataclass(frozen=True)
class AogmCounts:
    NS: int = 0
    FN: int = 0
    FP: int = 0
    ED: int = 0
    EA: int = 0
    EC: int = 0

    def as_dict(self) -> dict[str, int]:
        return {t: getattr(self, t) for t in TERMS}


class CompVerdict(str, Enum):
    CORRECT = "supported"
    WRONG_SEMANTICS = "wrong-semantics"
    UNSUPPORTED = "unsupported"


class RefVerdict(str, Enum):
    REALIZED = "realized"
    MISLABELED = "mislabeled"
    MISSING = "missing"


@dataclass(frozen=True)
class EdgeVerdicts:
    computed: tuple[tuple[Edge, CompVerdict], ...]
    reference: tuple[tuple[Edge, RefVerdict], ...]

    def computed_verdict(self, edge: Edge) -> CompVerdict:
        for e, verdict in self.computed:
            if e == edge:
                return verdict
        raise KeyError(edge)


@dataclass(frozen=True)
class EvaluationReport:
    counts: AogmCounts
    weights: AogmWeights
    verdicts: EdgeVerdicts
    correspondence: Correspondence
    strategy: MatchingStrategy = field(default_factory=ExactId)

    @property
    def terms(self) -> dict[str, Decimal]:
        return {t: getattr(self.weights, t) * getattr(self.counts, t) for t in TERMS}

    @property
    def total(self) -> Decimal:
        return sum(self.terms.values(), Decimal(0))


class EdgeNotFound(KeyError):
    pass


def classify_vertices(corr: Correspondence, ref: TrackingGraph, comp: TrackingGraph) -> tuple[int, int, int]:
    """Return (FN, FP, NS)."""
    fn = sum(1 for v in ref.vertices if not corr.is_matched(v.vertex_id))
    k = corr.multiplicity
    fp = sum(1 for v in comp.vertices if k[v.vertex_id] == 0)
    ns = sum(n - 1 for n in k.values() if n > 1)
    return fn, fp, ns


def classify_edges(
    corr: Correspondence, ref: TrackingGraph, comp: TrackingGraph
) -> tuple[int, int, int, EdgeVerdicts]:
    """Return (EA, ED, EC, verdicts).

    A computed edge is supported when some reference edge maps onto it through
    the correspondence; it is correct if any supporting edge has the same
    semantics. A reference edge is realized by a same-semantics computed
    edge, mislabeled when its computed edge carries the wrong-semantics
    verdict, and missing otherwise.
    """
    m = corr.comp_of
    support: dict[tuple[int, int], set[Semantics]] = {}
    for e in ref.edges:
        a, b = m.get(e.source), m.get(e.target)
        if a is not None and b is not None and a != b:
            support.setdefault((a, b), set()).add(e.semantics)

    comp_verdicts = []
    for e in comp.edges:
        sems = support.get((e.source, e.target))
        if sems is None:
            verdict = CompVerdict.UNSUPPORTED
        elif e.semantics in sems:
            verdict = CompVerdict.CORRECT
        else:
            verdict = CompVerdict.WRONG_SEMANTICS
        comp_verdicts.append((e, verdict))
    verdict_at = {(e.source, e.target): v for e, v in comp_verdicts}

    ref_verdicts = []
    for e in ref.edges:
        a, b = m.get(e.source), m.get(e.target)
        target = comp.edge_index.get((a, b)) if a is not None and b is not None and a != b else None
        if target is not None and target.semantics is e.semantics:
            verdict = RefVerdict.REALIZED
        elif target is not None and verdict_at[(a, b)] is CompVerdict.WRONG_SEMANTICS:
            verdict = RefVerdict.MISLABELED
        else:
            verdict = RefVerdict.MISSING
        ref_verdicts.append((e, verdict))

    ea = sum(1 for _, v in ref_verdicts if v is RefVerdict.MISSING)
    ed = sum(1 for _, v in comp_verdicts if v is CompVerdict.UNSUPPORTED)
    ec = sum(1 for _, v in comp_verdicts if v is CompVerdict.WRONG_SEMANTICS)
    return ea, ed, ec, EdgeVerdicts(tuple(comp_verdicts), tuple(ref_verdicts))


def aogm_score(counts: AogmCounts, weights: AogmWeights = AogmWeights()) -> Decimal:
    return sum((getattr(weights, t) * getattr(counts, t) for t in TERMS), Decimal(0))


def count_errors(
    corr: Correspondence, ref: TrackingGraph, comp: TrackingGraph
) -> tuple[AogmCounts, EdgeVerdicts]:
    fn, fp, ns = classify_vertices(corr, ref, comp)
    ea, ed, ec, verdicts = classify_edges(corr, ref, comp)
    return AogmCounts(NS=ns, FN=fn, FP=fp, ED=ed, EA=ea, EC=ec), verdicts


def evaluate(
    ref: TrackingGraph,
    comp: TrackingGraph,
    strategy: MatchingStrategy = ExactId(),
    weights: AogmWeights = AogmWeights(),
) -> EvaluationReport:
    corr = match_vertices(ref, comp, strategy)
    counts, verdicts = count_errors(corr, ref, comp)
    return EvaluationReport(counts, weights, verdicts, corr, strategy)


def edge_delta(
    ref: TrackingGraph,
    comp: TrackingGraph,
    corr: Correspondence,
    edge: Edge,
    weights: AogmWeights = AogmWeights(),
) -> Decimal:
    """AOGM(comp) - AOGM(comp without ``edge``), keeping ``corr`` fixed."""
    if comp.edge_index.get((edge.source, edge.target)) != edge:
        raise EdgeNotFound(edge)
    with_edge, _ = count_errors(corr, ref, comp)
    without, _ = count_errors(corr, ref, comp.without_edge(edge))
    return aogm_score(with_edge, weights) - aogm_score(without, weights)


@dataclass(frozen=True)
class LinkBreakdown:
    """Verdict tally of a computed graph's ParentLinks."""

    supported: int
    wrong_semantics: int
    unsupported: int

    def predicted_delta(self, weights: AogmWeights = AogmWeights()) -> Decimal:
        """AOGM(with links) - AOGM(without links) implied by this tally.

        Exact whenever the correspondence is one-to-one.
        """
        return (
            weights.ED * self.unsupported
            - weights.EA * self.supported
            + (weights.EC - weights.EA) * self.wrong_semantics
        )


def parent_link_breakdown(verdicts: EdgeVerdicts) -> LinkBreakdown:
    tally = {v: 0 for v in CompVerdict}
    for e, v in verdicts.computed:
        if e.semantics is Semantics.PARENT:
            tally[v] += 1
    return LinkBreakdown(
        tally[CompVerdict.CORRECT], tally[CompVerdict.WRONG_SEMANTICS], tally[CompVerdict.UNSUPPORTED]
    )
