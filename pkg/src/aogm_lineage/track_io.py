"""Strict readers and writers for track records, graphs, detections and reports.

Formats
-------
* CTC track file: one ``L B E P`` record per line (label, begin, end,
  parent or 0), fields separated by any run of spaces or tabs.
* Detection CSV: ``frame,track_id,x,y,w,h`` with (x, y) the top-left box
  corner; an optional header line with exactly those names.
* Graph document: JSON object ``{"format_version": 1, "vertices": [...],
  "edges": [...]}``. The canonical form lists vertices by (frame, track) and
  edges by (from, to), two-space indented, trailing newline.

Every parse error carries either a line/column or the path of the offending
element.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional

from .aogm import TERMS, EvaluationReport, parent_link_breakdown
from .lineage_graph import (
    Edge,
    LineageError,
    Semantics,
    TrackingGraph,
    TrackRow,
    TrackTable,
    Vertex,
    check_table,
    validate,
)
from .mitosis_metrics import MitosisScores

FORMAT_VERSION = 1
DETECTION_FIELDS = ("frame", "track_id", "x", "y", "w", "h")


class FormatError(ValueError):
    """Base class; ``location`` is a "line L, column C" string or an element path."""

    def __init__(self, message: str, location: str):
        super().__init__(f"{location}: {message}")
        self.location = location


class TrackSyntaxError(FormatError):
    pass


class SemanticError(FormatError):
    pass


class JoinError(FormatError):
    pass


_INT = re.compile(r"\d+")


# --- CTC track records ---------------------------------------------------------


def parse_ctc_tracks(text: str, detections: Optional[str] = None) -> TrackTable:
    """Read a CTC track file, optionally joining geometry from a detection CSV.

    Without detections every centroid is (0, 0) and the table is flagged as
    synthetic; such tables are only comparable with exact-id matching.
    """
    rows = []
    where: dict[int, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = []
        for m in re.finditer(r"[^ \t]+", line):
            if not _INT.fullmatch(m.group()):
                raise TrackSyntaxError(
                    f"expected a non-negative integer, got {m.group()!r}",
                    f"line {lineno}, column {m.start() + 1}",
                )
            fields.append(int(m.group()))
        if len(fields) != 4:
            raise TrackSyntaxError(
                f"expected 4 fields 'L B E P', got {len(fields)}", f"line {lineno}, column 1"
            )
        label, begin, end, parent = fields
        loc = f"line {lineno}, column 1"
        if label < 1:
            raise SemanticError("label must be >= 1", loc)
        if begin > end:
            raise SemanticError(f"track {label} begins at {begin} after it ends at {end}", loc)
        if parent == label:
            raise SemanticError(f"track {label} is its own parent", loc)
        if label in where:
            raise SemanticError(f"duplicate label {label} (first on line {where[label]})", loc)
        where[label] = lineno
        rows.append(TrackRow(label, begin, end, parent or None))

    labels = {r.label: r for r in rows}
    for r in rows:
        loc = f"line {where[r.label]}, column 1"
        if r.parent is None:
            continue
        if r.parent not in labels:
            raise SemanticError(f"track {r.label} has unknown parent {r.parent}", loc)
        if labels[r.parent].end >= r.begin:
            raise SemanticError(
                f"track {r.label} begins at {r.begin} but parent {r.parent} ends at "
                f"{labels[r.parent].end}",
                loc,
            )

    if detections is None:
        geometry = {
            (r.label, f): ((0.0, 0.0), None) for r in rows for f in range(r.begin, r.end + 1)
        }
        table = TrackTable(tuple(rows), geometry, synthetic_geometry=True)
    else:
        found = parse_detections(detections)
        geometry = {}
        for r in rows:
            for f in range(r.begin, r.end + 1):
                if (r.label, f) not in found:
                    raise JoinError(
                        f"no detection for track {r.label} at frame {f}",
                        f"line {where[r.label]}, column 1",
                    )
                geometry[(r.label, f)] = found[(r.label, f)]
        table = TrackTable(tuple(rows), geometry)
    try:
        check_table(table)
    except LineageError as exc:
        raise SemanticError(str(exc), "track table") from None
    return table


def write_ctc_tracks(table: TrackTable) -> str:
    return "".join(
        f"{r.label} {r.begin} {r.end} {r.parent or 0}\n" for r in sorted(table.rows, key=lambda r: r.label)
    )


# --- detection CSV -------------------------------------------------------------


def _number(text: str, loc: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise TrackSyntaxError(f"expected a number, got {text!r}", loc) from None
    if not math.isfinite(value):
        raise SemanticError(f"non-finite value {text!r}", loc)
    return value


def parse_detections(text: str):
    """Read a detection CSV into {(track_id, frame): (centroid, bbox)}."""
    out = {}
    reader = csv.reader(io.StringIO(text))
    for lineno, cells in enumerate(reader, start=1):
        if not cells or all(not c.strip() for c in cells):
            continue
        cells = [c.strip() for c in cells]
        if lineno == 1 and tuple(cells) == DETECTION_FIELDS:
            continue
        if len(cells) != 6:
            raise TrackSyntaxError(f"expected 6 fields, got {len(cells)}", f"line {lineno}, column 1")
        ints = []
        for col, cell in enumerate(cells[:2]):
            if not _INT.fullmatch(cell):
                raise TrackSyntaxError(
                    f"{DETECTION_FIELDS[col]} must be a non-negative integer, got {cell!r}",
                    f"line {lineno}, column {col + 1}",
                )
            ints.append(int(cell))
        frame, track = ints
        x, y, w, h = (_number(c, f"line {lineno}, column {i + 3}") for i, c in enumerate(cells[2:]))
        if w <= 0 or h <= 0:
            raise SemanticError("box width and height must be positive", f"line {lineno}, column 5")
        if track < 1:
            raise SemanticError("track_id must be >= 1", f"line {lineno}, column 2")
        if (track, frame) in out:
            raise SemanticError(
                f"duplicate detection of track {track} at frame {frame}", f"line {lineno}, column 1"
            )
        out[(track, frame)] = ((x + w / 2, y + h / 2), (x, y, w, h))
    return out


def write_detections(table: TrackTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(DETECTION_FIELDS)
    for (label, frame), (_, bbox) in sorted(table.detections.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if bbox is None:
            raise ValueError(f"track {label} at frame {frame} has no box")
        writer.writerow([frame, label, *(repr(float(c)) for c in bbox)])
    return buf.getvalue()


# --- graph documents -----------------------------------------------------------


def _reject_constant(name: str):
    raise ValueError(f"non-finite number {name}")


def _require(obj, key, kind, path):
    if key not in obj:
        raise SemanticError(f"missing field {key!r}", path)
    value = obj[key]
    if kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise SemanticError(f"field {key!r} has wrong type {type(value).__name__}", f"{path}.{key}")
    return float(value) if kind is float else value


def _only(obj, allowed, path):
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise SemanticError(f"unknown field {extra[0]!r}", path)


def parse_graph_document(text: str) -> TrackingGraph:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise TrackSyntaxError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    except ValueError as exc:
        raise TrackSyntaxError(str(exc), "document") from None
    if not isinstance(doc, dict):
        raise SemanticError("top level must be an object", "document")
    _only(doc, ("format_version", "vertices", "edges"), "document")
    version = _require(doc, "format_version", int, "document")
    if version != FORMAT_VERSION:
        raise SemanticError(f"unsupported format_version {version}", "document.format_version")
    raw_vertices = _require(doc, "vertices", list, "document")
    raw_edges = _require(doc, "edges", list, "document")

    vertices = []
    seen: set[int] = set()
    for i, item in enumerate(raw_vertices):
        path = f"vertices[{i}]"
        if not isinstance(item, dict):
            raise SemanticError("vertex must be an object", path)
        _only(item, ("id", "frame", "track", "x", "y", "bbox"), path)
        vid = _require(item, "id", int, path)
        frame = _require(item, "frame", int, path)
        track = _require(item, "track", int, path)
        x = _require(item, "x", float, path)
        y = _require(item, "y", float, path)
        if vid in seen:
            raise SemanticError(f"duplicate vertex id {vid}", path)
        seen.add(vid)
        if frame < 0:
            raise SemanticError("frame must be >= 0", f"{path}.frame")
        if track < 1:
            raise SemanticError("track must be >= 1", f"{path}.track")
        bbox = None
        if "bbox" in item:
            raw = item["bbox"]
            if (
                not isinstance(raw, list)
                or len(raw) != 4
                or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in raw)
            ):
                raise SemanticError("bbox must be a list of 4 numbers", f"{path}.bbox")
            bbox = tuple(float(c) for c in raw)
            if bbox[2] <= 0 or bbox[3] <= 0:
                raise SemanticError("bbox width and height must be positive", f"{path}.bbox")
        vertices.append(Vertex(vid, frame, track, (x, y), bbox))

    edges = []
    for i, item in enumerate(raw_edges):
        path = f"edges[{i}]"
        if not isinstance(item, dict):
            raise SemanticError("edge must be an object", path)
        _only(item, ("from", "to", "semantics"), path)
        source = _require(item, "from", int, path)
        target = _require(item, "to", int, path)
        sem = _require(item, "semantics", str, path)
        try:
            semantics = Semantics(sem)
        except ValueError:
            raise SemanticError(f"semantics must be 'track' or 'parent', got {sem!r}", f"{path}.semantics") from None
        for end, vid in (("from", source), ("to", target)):
            if vid not in seen:
                raise SemanticError(f"edge endpoint {vid} is not a vertex", f"{path}.{end}")
        edges.append(Edge(source, target, semantics))

    graph = TrackingGraph.from_parts(vertices, edges)
    report = validate(graph)
    if report:
        first = report.violations[0]
        raise SemanticError(first.kind, "elements " + ",".join(map(str, first.elements)))
    return graph


def graph_to_dict(graph: TrackingGraph) -> dict:
    vertices = []
    for v in sorted(graph.vertices, key=lambda v: (v.frame, v.track_id, v.vertex_id)):
        item = {
            "id": v.vertex_id,
            "frame": v.frame,
            "track": v.track_id,
            "x": float(v.centroid[0]),
            "y": float(v.centroid[1]),
        }
        if v.bbox is not None:
            item["bbox"] = [float(c) for c in v.bbox]
        vertices.append(item)
    edges = [
        {"from": e.source, "to": e.target, "semantics": e.semantics.value}
        for e in sorted(graph.edges, key=lambda e: (e.source, e.target))
    ]
    return {"format_version": FORMAT_VERSION, "vertices": vertices, "edges": edges}


def write_graph_document(graph: TrackingGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=2) + "\n"


# --- reports -------------------------------------------------------------------


def fmt_decimal(value: Decimal) -> str:
    """Exact decimal with at least one fractional digit ("1.0", "1.25")."""
    text = format(value.normalize(), "f")
    return text if "." in text else text + ".0"


def fmt_total(value: Decimal) -> str:
    return str(value.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def report_to_dict(report: EvaluationReport, mitosis: Optional[MitosisScores] = None) -> dict:
    links = parent_link_breakdown(report.verdicts)
    out = {
        "format_version": FORMAT_VERSION,
        "matching": report.strategy.name,
        "weights": {t: fmt_decimal(w) for t, w in report.weights.as_dict().items()},
        "counts": report.counts.as_dict(),
        "terms": {t: fmt_decimal(v) for t, v in report.terms.items()},
        "total": fmt_total(report.total),
        "total_exact": fmt_decimal(report.total),
        "parent_links": {
            "supported": links.supported,
            "wrong_semantics": links.wrong_semantics,
            "unsupported": links.unsupported,
        },
        "computed_edges": [
            {"from": e.source, "to": e.target, "semantics": e.semantics.value, "verdict": v.value}
            for e, v in report.verdicts.computed
        ],
        "reference_edges": [
            {"from": e.source, "to": e.target, "semantics": e.semantics.value, "verdict": v.value}
            for e, v in report.verdicts.reference
        ],
        "matches": [list(p) for p in report.correspondence.pairs],
    }
    if mitosis is not None:
        out["mitosis"] = {
            "precision": f"{mitosis.precision:.4f}",
            "recall": f"{mitosis.recall:.4f}",
            "f1": f"{mitosis.f1:.4f}",
        }
    return out


def write_report(
    report: EvaluationReport, fmt: str = "table", mitosis: Optional[MitosisScores] = None
) -> str:
    if fmt == "json":
        return json.dumps(report_to_dict(report, mitosis), indent=2) + "\n"
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")
    weights = report.weights.as_dict()
    lines = [
        "weights: " + " ".join(f"{t}={fmt_decimal(w)}" for t, w in weights.items()),
        f"matching: {report.strategy.name}",
    ]
    for t in TERMS:
        count = getattr(report.counts, t)
        lines.append(f"{t:<3} {count} × {fmt_decimal(weights[t])} = {fmt_decimal(report.terms[t])}")
    lines.append(f"AOGM {fmt_total(report.total)}")
    if mitosis is not None:
        lines.append(
            f"mitosis precision {mitosis.precision:.4f} recall {mitosis.recall:.4f} f1 {mitosis.f1:.4f}"
        )
    return "\n".join(lines) + "\n"
