"""Command-line interface.

Subcommands: validate, cutsets, quantify, to-bn, infer, experiment, report.
All data goes to stdout (or ``--out``), diagnostics to stderr.  Exit codes:
0 success, 1 validation/inference/model errors, 2 usage errors.  Every
subcommand is deterministic under ``--seed``: same invocation, byte-identical
output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import avmodel
from .cutsets import CutSetLimitError, minimal_cut_sets, order_histogram, single_points_of_failure
from .experiment import (
    ExperimentConfig,
    ExperimentReport,
    report_from_json,
    run_experiment,
    subsystem_rollup,
)
from .inference import (
    ENUMERATION,
    VARIABLE_ELIMINATION,
    InferenceError,
    posterior_all,
)
from .network import CptSizeError, network_to_json, to_bayesian_network
from .quant import allocate_budget, propagate, rate_to_probability
from .tree import EventKind, FaultTree, FaultTreeError, parse_fault_tree, validate

FORMATS = ("json", "csv", "table")


def _evidence_item(text: str) -> tuple[str, bool]:
    name, eq, value = text.partition("=")
    if not eq or value.lower() not in ("true", "false") or not name:
        raise argparse.ArgumentTypeError(
            f"expected NODE=true|false, got {text!r}"
        )
    return name, value.lower() == "true"


def _add_model_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("model_path", nargs="?", metavar="MODEL", help="fault-tree file (.ft or .json)")
    sub.add_argument("--model", dest="model_flag", metavar="PATH", help="fault-tree file (.ft or .json)")
    sub.add_argument("--builtin", choices=("av",), help="use a bundled model")


def _add_output_args(sub: argparse.ArgumentParser, formats=FORMATS) -> None:
    sub.add_argument("--format", choices=formats, default="json")
    sub.add_argument("--out", metavar="PATH", help="write output here instead of stdout")


def _add_sampling_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--time-hours", type=float, default=10_000.0)
    sub.add_argument("--budget-fit", type=float, default=100.0)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--concentration", type=float, default=25.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftbn",
        description="Fault-tree analysis and Bayesian-network inference for failure-rate budgeting.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("validate", help="check a fault-tree file against all structural rules")
    _add_model_args(p)
    _add_output_args(p)
    p.set_defaults(handler=_cmd_validate)

    p = subparsers.add_parser("cutsets", help="enumerate minimal cut sets")
    _add_model_args(p)
    _add_output_args(p)
    p.add_argument("--max-rows", type=int, default=1_000_000, help="cap on intermediate rows")
    p.set_defaults(handler=_cmd_cutsets)

    p = subparsers.add_parser("quantify", help="assign rates and propagate probabilities")
    _add_model_args(p)
    _add_output_args(p)
    _add_sampling_args(p)
    p.add_argument(
        "--rates",
        choices=("sampled", "declared"),
        default="sampled",
        help="sample rates from the budget, or use rate= annotations from the model",
    )
    p.set_defaults(handler=_cmd_quantify)

    p = subparsers.add_parser("to-bn", help="compile the tree to a Bayesian network (JSON)")
    _add_model_args(p)
    _add_output_args(p, formats=("json",))
    _add_sampling_args(p)
    p.add_argument("--rates", choices=("sampled", "declared"), default="sampled")
    p.set_defaults(handler=_cmd_to_bn)

    p = subparsers.add_parser("infer", help="posterior probabilities under evidence")
    _add_model_args(p)
    _add_output_args(p)
    _add_sampling_args(p)
    p.add_argument("--rates", choices=("sampled", "declared"), default="sampled")
    p.add_argument(
        "--evidence",
        type=_evidence_item,
        action="append",
        default=[],
        metavar="NODE=true|false",
    )
    p.add_argument("--query", action="append", default=[], metavar="NODE", help="default: all nodes")
    p.add_argument("--method", choices=("ve", "enum"), default="ve")
    p.set_defaults(handler=_cmd_infer)

    p = subparsers.add_parser("experiment", help="repeated-allocation posterior study")
    _add_model_args(p)
    _add_output_args(p)
    _add_sampling_args(p)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument(
        "--evidence",
        type=_evidence_item,
        action="append",
        default=[],
        metavar="NODE=true|false",
        help="default: top event observed true",
    )
    p.add_argument("--rollup", choices=("all", "single-points"), default="all")
    p.add_argument("--save", metavar="PATH", help="also write the JSON report here")
    p.set_defaults(handler=_cmd_experiment)

    p = subparsers.add_parser("report", help="render a saved or freshly run experiment")
    _add_model_args(p)
    _add_output_args(p)
    _add_sampling_args(p)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument(
        "--evidence", type=_evidence_item, action="append", default=[], metavar="NODE=true|false"
    )
    p.add_argument("--load", metavar="PATH", help="saved experiment report JSON")
    p.set_defaults(handler=_cmd_report)

    return parser


def _load_tree(parser: argparse.ArgumentParser, args) -> tuple[FaultTree, str]:
    sources = [s for s in (args.model_path, args.model_flag, args.builtin) if s]
    if len(sources) != 1:
        parser.error("give exactly one of MODEL, --model, or --builtin")
    if args.builtin:
        return avmodel.builtin_av_tree(), f"builtin:{args.builtin}"
    path = args.model_path or args.model_flag
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FaultTreeError(f"cannot read model file {path}: {exc.strerror}")
    return parse_fault_tree(text), path


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_json(args, doc) -> None:
    _emit(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _csv_text(header: list[str], rows: list[list]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


# --- handlers ---------------------------------------------------------------


def _cmd_validate(parser, args) -> int:
    tree, _ = _load_tree(parser, args)
    report = validate(tree)
    if args.format == "json":
        _emit_json(args, report.to_json())
    else:
        lines = [f"ok: {str(report.ok).lower()}"]
        for f in report.findings:
            ids = f" [{', '.join(f.events)}]" if f.events else ""
            lines.append(f"{f.severity.value.upper():7s} {f.code}: {f.message}{ids}")
        _emit(args, "\n".join(lines) + "\n")
    return 0 if report.ok else 1


def _cmd_cutsets(parser, args) -> int:
    tree, _ = _load_tree(parser, args)
    collection = minimal_cut_sets(tree, max_rows=args.max_rows)
    sets = collection.to_lists()
    if args.format == "json":
        _emit_json(args, sets)
    elif args.format == "csv":
        _emit(args, _csv_text(["order", "members"], [[len(s), " ".join(s)] for s in sets]))
    else:
        histogram = order_histogram(collection)
        lines = [f"{len(sets)} minimal cut sets for top event {collection.top}"]
        lines += [f"  order {k}: {v} set(s)" for k, v in histogram.items()]
        lines += ["", *("{" + ", ".join(s) + "}" for s in sets)]
        spof = single_points_of_failure(collection)
        lines += ["", f"single points of failure: {', '.join(spof) if spof else 'none'}"]
        _emit(args, "\n".join(lines) + "\n")
    return 0


def _basic_probabilities(tree: FaultTree, args) -> tuple[dict[str, float], dict[str, float]]:
    """Per-basic rates (FIT) and probabilities at the configured horizon."""
    if args.rates == "declared":
        missing = [e.id for e in tree.events.values()
                   if e.kind is EventKind.BASIC and e.rate_fit is None]
        if missing:
            raise FaultTreeError(
                "model does not declare rates for: " + ", ".join(sorted(missing))
            )
        rates = {e.id: e.rate_fit for e in tree.events.values() if e.kind is EventKind.BASIC}
    else:
        rates = allocate_budget(tree, args.budget_fit, args.seed, args.concentration).rates
    probabilities = {eid: rate_to_probability(fit, args.time_hours) for eid, fit in rates.items()}
    return rates, probabilities


def _cmd_quantify(parser, args) -> int:
    tree, _ = _load_tree(parser, args)
    rates, probabilities = _basic_probabilities(tree, args)
    result = propagate(tree, probabilities)
    if args.format == "json":
        _emit_json(
            args,
            {
                "method": result.method,
                "rates_source": args.rates,
                "time_hours": args.time_hours,
                "budget_fit": args.budget_fit if args.rates == "sampled" else None,
                "seed": args.seed,
                "concentration": args.concentration,
                "rates_fit": rates,
                "probabilities": result.probabilities,
                "top_event": tree.top,
                "top_probability": result.probabilities[tree.top],
            },
        )
    else:
        rows = [[eid, repr(p)] for eid, p in sorted(result.probabilities.items())]
        text = _csv_text(["event", "probability"], rows)
        if args.format == "table":
            text = text.replace(",", "\t")
        _emit(args, text)
    return 0


def _cmd_to_bn(parser, args) -> int:
    tree, _ = _load_tree(parser, args)
    _, probabilities = _basic_probabilities(tree, args)
    bn = to_bayesian_network(tree, probabilities)
    _emit_json(args, network_to_json(bn))
    return 0


def _cmd_infer(parser, args) -> int:
    tree, _ = _load_tree(parser, args)
    _, probabilities = _basic_probabilities(tree, args)
    bn = to_bayesian_network(tree, probabilities)
    evidence = dict(args.evidence)
    method = VARIABLE_ELIMINATION if args.method == "ve" else ENUMERATION
    report = posterior_all(bn, evidence, method=method)
    queries = args.query if args.query else list(bn.nodes)
    unknown = sorted(set(queries) - set(bn.nodes))
    if unknown:
        raise InferenceError(f"unknown query node(s): {', '.join(unknown)}")
    posteriors = {q: report.posteriors[q] for q in queries}
    if args.format == "json":
        _emit_json(args, posteriors)
    else:
        rows = [[q, repr(p)] for q, p in sorted(posteriors.items())]
        text = _csv_text(["node", "posterior"], rows)
        if args.format == "table":
            text = text.replace(",", "\t")
        _emit(args, text)
    return 0


def _experiment_config(tree: FaultTree, ref: str, args) -> ExperimentConfig:
    return ExperimentConfig(
        tree=tree,
        budget_fit=args.budget_fit,
        time_hours=args.time_hours,
        repetitions=args.reps,
        confidence=args.confidence,
        seed=args.seed,
        concentration=args.concentration,
        evidence=dict(args.evidence) if args.evidence else None,
        tree_ref=ref,
    )


def _cmd_experiment(parser, args) -> int:
    tree, ref = _load_tree(parser, args)
    report = run_experiment(_experiment_config(tree, ref, args))
    doc = report.to_json()
    if args.save:
        Path(args.save).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if args.format == "json":
        _emit_json(args, doc)
    else:
        rows = [
            [s.event, report.labels.get(s.event, ""), repr(s.mean_posterior_rate), repr(s.half_width)]
            for s in report.events
        ]
        text = _csv_text(["event", "name", "mean_fit", "halfwidth_fit"], rows)
        if args.format == "table":
            text = text.replace(",", "\t")
            totals = report.subsystem_totals if args.rollup == "all" else report.single_point_totals
            text += "\nsubsystem roll-up (%s):\n" % args.rollup
            text += "".join(f"  {tag}\t{total:.4f}\n" for tag, total in totals.items())
        _emit(args, text)
    return 0


def _cmd_report(parser, args) -> int:
    if args.load:
        doc = json.loads(Path(args.load).read_text(encoding="utf-8"))
        report = report_from_json(doc)
    else:
        tree, ref = _load_tree(parser, args)
        report = run_experiment(_experiment_config(tree, ref, args))

    ranked = sorted(report.events, key=lambda s: (-s.mean_posterior_rate, s.event))
    if args.format == "json":
        _emit_json(args, report.to_json())
    elif args.format == "csv":
        rows = [
            [
                s.event,
                repr(s.mean_posterior_rate),
                repr(s.mean_posterior_rate - s.half_width),
                repr(s.mean_posterior_rate + s.half_width),
            ]
            for s in ranked
        ]
        _emit(args, _csv_text(["id", "mean_fit", "ci_low", "ci_high"], rows))
    else:
        _emit(args, _markdown_report(report, ranked))
    return 0


def _markdown_report(report: ExperimentReport, ranked) -> str:
    confidence = report.config.get("confidence", 0.95)
    pct = f"{confidence * 100:g}%"
    lines = ["# Failure-rate report", ""]
    lines.append(
        f"Mean top-event prior probability: {report.top_event_prior_probability:.6g}"
    )
    lines += ["", f"## Posterior rates (FIT, {pct} confidence)", ""]
    lines.append("| event | name | mean | half-width | prior mean |")
    lines.append("|---|---|---:|---:|---:|")
    for s in ranked:
        name = report.labels.get(s.event, "")
        lines.append(
            f"| {s.event} | {name} | {s.mean_posterior_rate:.4f} | "
            f"{s.half_width:.4f} | {s.mean_prior_rate:.4f} |"
        )
    if report.subsystem_totals:
        lines += ["", "## Subsystem roll-ups (FIT)", ""]
        lines.append("| subsystem | all events | single points only |")
        lines.append("|---|---:|---:|")
        for tag in sorted(report.subsystem_totals):
            spof = report.single_point_totals.get(tag, 0.0)
            lines.append(f"| {tag} | {report.subsystem_totals[tag]:.4f} | {spof:.4f} |")
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(parser, args)
    except (FaultTreeError, InferenceError, CutSetLimitError, CptSizeError, ValueError) as exc:
        if getattr(args, "format", "json") == "json":
            doc = {"error": {"type": type(exc).__name__, "message": str(exc)}}
            sys.stderr.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        else:
            sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
