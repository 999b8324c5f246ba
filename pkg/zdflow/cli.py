# -*- coding: utf-8 -*-
"""
This module contains the zdflow command line: load a graph, find or verify a flow, turn it into a pattern and check
it by simulation.

Machine readable json goes to stdout and the human summary to stderr. Exit codes: 0 when the checked property holds,
2 when it fails (no flow, invalid flow, not robustly deterministic, not runnable, oracle disagreement), 1 on bad
input.
"""
import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from zdflow import logs, utils
from zdflow.errors import NotRunnable, ZdFlowError
from zdflow.finder import find_flow, find_flow_any_labelling
from zdflow.flow import (
    CorrectionSets,
    corrections,
    flow_to_json,
    format_schedule,
    parse_flow,
    schedule_report,
    validate_flow,
)
from zdflow.graph import LabelledOpenGraph, graph_to_json, load_graph, parse_graph, sort_vertices
from zdflow.meas import random_spec
from zdflow.oracle import compare_with_finder
from zdflow.pattern import (
    check_runnable,
    extract_open_graph,
    format_pattern,
    from_flow,
    parse_pattern,
    pattern_to_json,
    standardize,
)
from zdflow.sim import Verdict, classify_determinism, enumerate_branches, ideal_output, random_state

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_PROPERTY = 2


@dataclass
class RunReport:
    """
    :param subcommand: the subcommand that ran.
    :param input_digest: sha256 over the input files.
    :param seed: random seed, None when nothing was sampled.
    :param verdicts: short pass / fail words per checked property.
    :param timings: wall seconds per stage.
    :param result: the subcommand's json result.
    """

    subcommand: str
    input_digest: str
    seed: Optional[int] = None
    verdicts: Dict[str, Any] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    result: Any = None

    def to_json(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "input_digest": self.input_digest,
            "seed": self.seed,
            "verdicts": self.verdicts,
            "timings": self.timings,
            "result": self.result,
        }


class _Stopwatch:
    def __init__(self, report: RunReport):
        self.report = report

    def time(self, stage: str, fn: Callable, *args, **kwargs):
        start = datetime.now()
        value = fn(*args, **kwargs)
        self.report.timings[stage] = (datetime.now() - start).total_seconds()
        return value


def _say(args: argparse.Namespace, text: str) -> None:
    if not args.quiet:
        print(text, file=sys.stderr)


def _load_graph(args: argparse.Namespace) -> LabelledOpenGraph:
    return load_graph(args.graph, d_override=args.d_override)


def _load_artifact(path: Path, lg: LabelledOpenGraph) -> Tuple[str, Any]:
    """a flow file ({"C", "layers"}) or a pattern file ({"commands"})"""
    data = utils.read_json(path)
    if isinstance(data, dict) and "commands" in data:
        return "pattern", parse_pattern(data)
    return "flow", parse_flow(data, lg.graph)


def _corrections_for(args: argparse.Namespace, report: RunReport) -> Tuple[Optional[LabelledOpenGraph], Any]:
    """
    labelled graph and corrections from the graph file plus an optional flow, or from a pattern file alone

    :return: (lg, corrections), or (lg, None) when no flow exists.
    """
    data = utils.read_json(args.graph)
    if isinstance(data, dict) and "commands" in data:
        extracted = extract_open_graph(standardize(parse_pattern(data, d_override=args.d_override)))
        return extracted.lg, extracted.corrections
    lg = _load_graph(args)
    if args.artifact is not None:
        kind, artifact = _load_artifact(args.artifact, lg)
        if kind == "pattern":
            extracted = extract_open_graph(standardize(artifact))
            return extracted.lg, extracted.corrections
        return lg, corrections(lg, artifact)
    result = find_flow(lg)
    report.verdicts["flow"] = "found" if result.found else "no-flow"
    if not result.found:
        return lg, None
    return lg, corrections(lg, result.flow)


def cli_find(args: argparse.Namespace, report: RunReport) -> int:
    lg = _load_graph(args)
    result = _Stopwatch(report).time("find", find_flow, lg)
    report.verdicts["flow"] = result.outcome.value
    report.result = {"outcome": result.outcome.value, "statistics": result.statistics.to_json()}
    if not result.found:
        report.result["stuck"] = sort_vertices(result.stuck)
        _say(args, f"No flow: stuck on {', '.join(sort_vertices(result.stuck))}")
        return EXIT_PROPERTY
    report.result.update(flow_to_json(result.flow))
    _say(args, format_schedule(schedule_report(lg, result.flow)))
    return EXIT_PASS


def cli_find_any_labelling(args: argparse.Namespace, report: RunReport) -> int:
    graph, labels = parse_graph(utils.read_json(args.graph), allow_partial_labels=True, d_override=args.d_override)
    result = _Stopwatch(report).time("find", find_flow_any_labelling, graph, labels)
    report.verdicts["flow"] = result.outcome.value
    report.result = {"outcome": result.outcome.value, "statistics": result.statistics.to_json()}
    if not result.found:
        report.result["stuck"] = sort_vertices(result.stuck)
        _say(args, f"No flow for any labelling: stuck on {', '.join(sort_vertices(result.stuck))}")
        return EXIT_PROPERTY
    report.result.update(flow_to_json(result.flow))
    report.result["graph"] = graph_to_json(graph, result.labels)
    _say(args, format_schedule(schedule_report(LabelledOpenGraph(graph, result.labels), result.flow)))
    return EXIT_PASS


def cli_verify(args: argparse.Namespace, report: RunReport) -> int:
    lg = _load_graph(args)
    data = utils.read_json(args.flow)
    # accept the output of `find --json` as well as a bare flow
    if isinstance(data, dict) and "result" in data and "C" not in data:
        data = data["result"]
    flow = parse_flow(data, lg.graph)
    outcome = _Stopwatch(report).time("verify", validate_flow, lg, flow)
    report.verdicts["valid"] = outcome.valid
    report.result = outcome.to_json()
    _say(args, f"Flow is valid with depth {flow.depth}" if outcome.valid else f"Invalid flow: {outcome.message}")
    return EXIT_PASS if outcome.valid else EXIT_PROPERTY


def cli_classify(args: argparse.Namespace, report: RunReport) -> int:
    lg, sets = _corrections_for(args, report)
    if sets is None:
        _say(args, "No flow to classify")
        return EXIT_PROPERTY
    report.seed = args.seed
    determinism = _Stopwatch(report).time(
        "classify", classify_determinism, lg, sets, draws=args.draws, seed=args.seed, max_branches=args.max_branches
    )
    report.verdicts["determinism"] = determinism.verdict.value
    report.result = determinism.to_json()
    _say(
        args,
        f"{determinism.verdict.value}: {determinism.draws} draws x {determinism.input_states} inputs, "
        f"minimum fidelity {determinism.min_fidelity:.12f}, {determinism.truncations_checked} truncations",
    )
    return EXIT_PASS if determinism.verdict == Verdict.ROBUST_EVIDENCE else EXIT_PROPERTY


def _simulate(lg: LabelledOpenGraph, sets: CorrectionSets, seed: int, max_branches: int) -> dict:
    rng = np.random.default_rng(seed)
    measured = lg.graph.non_outputs
    specs = {v: random_spec(lg.labels[v], lg.d, rng) for v in measured}
    inputs = lg.graph.ordered(lg.inputs)
    phi = random_state(inputs, lg.d, rng) if inputs else None
    branches = enumerate_branches(lg, sets, specs, input_state=phi, max_branches=max_branches)
    ideal = ideal_output(lg, specs, phi)
    rows = []
    for branch in branches:
        output = branch.output
        fidelity = abs(ideal.overlap(output)) if output is not None else 0.0
        rows.append({"outcome": branch.key, "probability": branch.probability, "fidelity": fidelity})
    return {
        "measurements": {v: specs[v].to_json() for v in measured},
        "total_probability": float(sum(r["probability"] for r in rows)),
        "min_fidelity": min(r["fidelity"] for r in rows),
        "branches": rows,
    }


def cli_simulate(args: argparse.Namespace, report: RunReport) -> int:
    lg, sets = _corrections_for(args, report)
    if sets is None:
        _say(args, "No flow to simulate")
        return EXIT_PROPERTY
    report.seed = args.seed
    max_branches = args.max_branches or utils.get_setting("sim", "max_branches")
    report.result = _Stopwatch(report).time("simulate", _simulate, lg, sets, args.seed, max_branches)
    tolerance = utils.get_setting("sim", "tolerance")
    ok = report.result["min_fidelity"] >= 1 - tolerance
    report.verdicts["matches_ideal"] = ok
    _say(
        args,
        f"{len(report.result['branches'])} branches, total probability {report.result['total_probability']:.12f}, "
        f"minimum fidelity to the ideal output {report.result['min_fidelity']:.12f}",
    )
    return EXIT_PASS if ok else EXIT_PROPERTY


def cli_oracle(args: argparse.Namespace, report: RunReport) -> int:
    lg = _load_graph(args)
    comparison = _Stopwatch(report).time("oracle", compare_with_finder, lg)
    report.verdicts["agree"] = comparison["agree"]
    report.result = comparison
    oracle = comparison["oracle"]
    _say(args, f"Oracle: exists {oracle['exists']}, minimal depth {oracle['min_depth']}; agree {comparison['agree']}")
    return EXIT_PASS if comparison["agree"] else EXIT_PROPERTY


def cli_standardize(args: argparse.Namespace, report: RunReport) -> int:
    pattern = parse_pattern(utils.read_json(args.pattern), d_override=args.d_override)
    runnable = check_runnable(pattern)
    report.verdicts["runnable"] = runnable.ok
    if not runnable.ok:
        report.result = runnable.to_json()
        _say(args, f"Not runnable at command {runnable.index}: {runnable.reason}")
        return EXIT_PROPERTY
    standard = _Stopwatch(report).time("standardize", standardize, pattern)
    report.result = pattern_to_json(standard, direction=args.direction)
    _say(args, format_pattern(standard))
    return EXIT_PASS


def cli_extract(args: argparse.Namespace, report: RunReport) -> int:
    pattern = parse_pattern(utils.read_json(args.pattern), d_override=args.d_override)
    extracted = _Stopwatch(report).time("extract", extract_open_graph, pattern)
    report.result = {
        "graph": graph_to_json(extracted.lg.graph, extracted.lg.labels),
        "corrections": extracted.corrections.to_json(),
        "measurements": {v: spec.to_json() for v, spec in extracted.measurements.items()},
        "order": extracted.order,
    }
    _say(args, f"{len(extracted.lg.vertices)} vertices, measurement order {', '.join(extracted.order) or 'none'}")
    return EXIT_PASS


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunReport], int]] = {
    "find": cli_find,
    "find-any-labelling": cli_find_any_labelling,
    "verify": cli_verify,
    "classify": cli_classify,
    "simulate": cli_simulate,
    "oracle": cli_oracle,
    "standardize": cli_standardize,
    "extract": cli_extract,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the full run report instead of the result")
    common.add_argument("--quiet", action="store_true", help="no summary on stderr, warnings only in the log")
    common.add_argument("--log-config", type=Path, default=None, help="logging dictConfig json file")
    common.add_argument("--d-override", type=int, default=None, help="modulus for input files without 'd'")
    common.add_argument("--seed", type=int, default=None, help="random seed (default from settings)")
    common.add_argument("--draws", type=int, default=None, help="random measurement draws (default from settings)")
    common.add_argument("--max-branches", type=int, default=None, help="branch enumeration cap")

    parser = argparse.ArgumentParser(
        prog="zdflow",
        description="Find, verify and simulate Z_d-flows of labelled open graphs.",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name in ("find", "find-any-labelling", "verify", "oracle"):
        sub = subparsers.add_parser(name, parents=[common])
        sub.add_argument("graph", type=Path)
        if name == "verify":
            sub.add_argument("flow", type=Path)
    for name in ("classify", "simulate"):
        sub = subparsers.add_parser(name, parents=[common])
        sub.add_argument("graph", type=Path, help="graph file, or a pattern file")
        sub.add_argument("artifact", type=Path, nargs="?", default=None, help="flow or pattern file")
    for name in ("standardize", "extract"):
        sub = subparsers.add_parser(name, parents=[common])
        sub.add_argument("pattern", type=Path)
        if name == "standardize":
            sub.add_argument("--direction", choices=("execution", "operator"), default="execution")
    return parser


def _inputs(args: argparse.Namespace) -> List[Path]:
    return [p for p in (getattr(args, k, None) for k in ("graph", "flow", "artifact", "pattern")) if p is not None]


def main(argv: Sequence[str] = None) -> int:
    args = build_parser().parse_args(argv)
    logs.setup_logging(
        default_path=str(args.log_config) if args.log_config else None,
        default_level=logging.WARNING if args.quiet else None,
    )
    if args.seed is None:
        args.seed = utils.get_setting("sim", "seed")
    report = RunReport(args.subcommand, "")
    try:
        report.input_digest = utils.file_digest(_inputs(args))
        code = COMMANDS[args.subcommand](args, report)
    except NotRunnable as e:
        logger.error(f"{args.subcommand}: {e}")
        _say(args, f"error: {e}")
        return EXIT_PROPERTY
    except (ZdFlowError, json.JSONDecodeError, OSError, KeyError, TypeError, ValueError) as e:
        logger.error(f"{args.subcommand}: {type(e).__name__}: {e}")
        _say(args, f"error: {type(e).__name__}: {e}")
        return EXIT_ERROR
    print(json.dumps(report.to_json() if args.json else report.result, indent=2, default=str))
    return code


if __name__ == "__main__":
    raise SystemExit(main())
