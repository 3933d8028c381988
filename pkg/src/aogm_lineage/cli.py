"""Command-line entry point: ``aogm-lineage <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Optional, Sequence

from . import track_io
from .aogm import TERMS, AogmWeights, evaluate, parent_link_breakdown
from .lineage_graph import LineageError, TrackingGraph, build_graph, mitosis_events, strip_parent_edges
from .linker import LinkerParams, link_mitosis
from .matching import CentroidInBox, ExactId, IncomparableGraphs, MatchingStrategy, strategy_from_name
from .mitosis_metrics import MitosisTolerances, match_mitosis, mitosis_pr
from .scenarios import (
    BadSchedule,
    BoundsTooLarge,
    NotApplicable,
    ScenarioPair,
    enumerate_inversions,
    figure1_cases,
    figure2_pair,
)

DATA_ERRORS = (
    track_io.FormatError,
    LineageError,
    IncomparableGraphs,
    NotApplicable,
    BadSchedule,
    BoundsTooLarge,
    OSError,
)


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _weights(text: str) -> AogmWeights:
    values = {}
    for item in filter(None, text.split(",")):
        name, sep, number = item.partition("=")
        name = name.strip().upper()
        if not sep or name not in TERMS:
            raise argparse.ArgumentTypeError(f"expected TERM=value with TERM in {','.join(TERMS)}, got {item!r}")
        try:
            values[name] = Decimal(number.strip())
        except InvalidOperation:
            raise argparse.ArgumentTypeError(f"bad weight value {number!r}") from None
    try:
        return AogmWeights(**values)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _name_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _threshold(text: str) -> float:
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError("IoU threshold must lie in (0, 1]")
    return value


def _add_eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ref", required=True, help="reference graph (.json) or CTC track file")
    p.add_argument("--comp", required=True, help="computed graph (.json) or CTC track file")
    p.add_argument("--ref-detections", help="detection CSV for a CTC reference")
    p.add_argument("--comp-detections", help="detection CSV for a CTC computed file")
    p.add_argument("--matching", choices=("auto", "id", "centroid", "iou"), default="auto",
                   help="auto = centroid when every vertex has a box, else id")
    p.add_argument("--iou", type=_threshold, default=0.5)
    p.add_argument("--weights", type=_weights, default=AogmWeights(),
                   help="overrides such as 'FN=10,EA=1.5'")
    p.add_argument("--mitosis-window", type=int, default=5)
    p.add_argument("--mitosis-radius", type=float, default=50.0)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--out", help="also write the report to this file")


def build_parser() -> Parser:
    parser = Parser(prog="aogm-lineage", description="AOGM evaluation of lineage tracking graphs")
    parser.add_argument("--config", help="JSON file of flag defaults; explicit flags win")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    _add_eval_flags(sub.add_parser("evaluate", help="score a computed graph against a reference"))
    _add_eval_flags(sub.add_parser("compare", help="score a computed graph with and without its mitosis links"))

    p = sub.add_parser("link", help="add mitosis parents to plain tracks")
    p.add_argument("--tracks", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--radius", type=float, default=50.0)
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="write synthetic scenario graphs")
    p.add_argument("--scenario", choices=("figure1", "figure2"), required=True)
    p.add_argument("--divisions", type=_int_list, default=[1, 4, 7])
    p.add_argument("--last-frame", type=int, default=9)
    p.add_argument("--mix", type=_name_list, help="one mistake per event: shift, extend, drop, wrong-semantics, none")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("enumerate-inversions", help="search small single-division cases where linking hurts AOGM")
    p.add_argument("--max-frames", type=int, default=4)
    p.add_argument("--max-tracks", type=int, default=3)
    p.add_argument("--out", help="output directory for the pair documents")
    return parser


def _parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    if not isinstance(config, dict):
        raise UsageError(f"{args.config}: config must be a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    for key, value in config.items():
        dest = key.replace("-", "_")
        if dest not in known or dest == "help":
            raise UsageError(f"{args.config}: unknown key {key!r} for {args.command}")
        action = next(a for a in sub._actions if a.dest == dest)
        if action.type is not None and isinstance(value, str):
            value = action.type(value)
        elif dest == "weights" and isinstance(value, dict):
            value = AogmWeights(**{k.upper(): Decimal(str(v)) for k, v in value.items()})
        sub.set_defaults(**{dest: value})
    return parser.parse_args(argv)


def load_graph(path: str, detections: Optional[str] = None) -> TrackingGraph:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".json"):
        return track_io.parse_graph_document(text)
    det = Path(detections).read_text(encoding="utf-8") if detections else None
    return build_graph(track_io.parse_ctc_tracks(text, det))


def resolve_strategy(name: str, threshold: float, *graphs: TrackingGraph) -> MatchingStrategy:
    if name == "auto":
        boxed = all(v.bbox is not None for g in graphs for v in g.vertices)
        return CentroidInBox() if boxed else ExactId()
    return strategy_from_name(name, threshold)


def _score(ref, comp, args):
    strategy = resolve_strategy(args.matching, args.iou, ref, comp)
    report = evaluate(ref, comp, strategy, args.weights)
    tol = MitosisTolerances(args.mitosis_window, args.mitosis_radius)
    mitosis = mitosis_pr(match_mitosis(mitosis_events(ref), mitosis_events(comp), tol))
    return report, mitosis


def _emit(text: str, out: Optional[str]) -> None:
    sys.stdout.write(text)
    if out:
        Path(out).write_text(text, encoding="utf-8")


def cmd_evaluate(args) -> None:
    ref = load_graph(args.ref, args.ref_detections)
    comp = load_graph(args.comp, args.comp_detections)
    report, mitosis = _score(ref, comp, args)
    _emit(track_io.write_report(report, args.format, mitosis), args.out)


def cmd_compare(args) -> None:
    ref = load_graph(args.ref, args.ref_detections)
    comp = load_graph(args.comp, args.comp_detections)
    with_report, with_mitosis = _score(ref, comp, args)
    without_report, without_mitosis = _score(ref, strip_parent_edges(comp), args)
    links = parent_link_breakdown(with_report.verdicts)
    delta = with_report.total - without_report.total
    if args.format == "json":
        doc = {
            "format_version": track_io.FORMAT_VERSION,
            "with_links": track_io.report_to_dict(with_report, with_mitosis),
            "without_links": track_io.report_to_dict(without_report, without_mitosis),
            "delta": track_io.fmt_decimal(delta),
            "predicted_delta": track_io.fmt_decimal(links.predicted_delta(args.weights)),
        }
        text = json.dumps(doc, indent=2) + "\n"
    else:
        sign = "+" if delta >= 0 else ""
        text = (
            "weights: "
            + " ".join(f"{t}={track_io.fmt_decimal(w)}" for t, w in args.weights.as_dict().items())
            + "\n"
            f"with links:    AOGM {track_io.fmt_total(with_report.total)}\n"
            f"without links: AOGM {track_io.fmt_total(without_report.total)}\n"
            f"delta: {sign}{track_io.fmt_total(delta)}\n"
            f"parent links: U={links.unsupported} S={links.supported} W={links.wrong_semantics}\n"
            f"mitosis with links:    precision {with_mitosis.precision:.4f} recall {with_mitosis.recall:.4f}"
            f" f1 {with_mitosis.f1:.4f}\n"
            f"mitosis without links: precision {without_mitosis.precision:.4f} recall {without_mitosis.recall:.4f}"
            f" f1 {without_mitosis.f1:.4f}\n"
        )
    _emit(text, args.out)


def cmd_link(args) -> None:
    text = Path(args.tracks).read_text(encoding="utf-8")
    det = Path(args.detections).read_text(encoding="utf-8")
    try:
        params = LinkerParams(args.window, args.radius)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    linked = link_mitosis(track_io.parse_ctc_tracks(text, det), params)
    _emit(track_io.write_ctc_tracks(linked), args.out)


def _write_pair(root: Path, pair: ScenarioPair) -> None:
    folder = root / pair.name
    folder.mkdir(parents=True, exist_ok=True)
    for name, graph in (
        ("reference", pair.reference),
        ("with_links", pair.computed_with_links),
        ("without_links", pair.computed_without_links),
    ):
        (folder / f"{name}.json").write_text(track_io.write_graph_document(graph), encoding="utf-8")


def _summarize(pairs: Sequence[ScenarioPair], out: Optional[str]) -> None:
    for pair in pairs:
        if out:
            _write_pair(Path(out), pair)
        with_total, without_total = pair.totals()
        tag = f" [{pair.expectation}]" if pair.expectation else ""
        print(
            f"{pair.name}{tag}: with links {track_io.fmt_total(with_total)}, "
            f"without links {track_io.fmt_total(without_total)}"
        )


def cmd_simulate(args) -> None:
    if args.scenario == "figure1":
        pairs = figure1_cases()
    else:
        try:
            pairs = [figure2_pair(args.divisions, args.last_frame, args.mix)]
        except ValueError as exc:
            if isinstance(exc, DATA_ERRORS):
                raise
            raise UsageError(str(exc)) from None
    _summarize(pairs, args.out)


def cmd_enumerate(args) -> None:
    pairs = enumerate_inversions(args.max_frames, args.max_tracks)
    print(f"{len(pairs)} inversions")
    _summarize(pairs, args.out)


COMMANDS = {
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "link": cmd_link,
    "simulate": cmd_simulate,
    "enumerate-inversions": cmd_enumerate,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except argparse.ArgumentTypeError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"usage error: config: line {exc.lineno}, column {exc.colno}: {exc.msg}", file=sys.stderr)
        return 1
    except DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # remaining ValueErrors come from parameter checks (tolerances, weights)
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
