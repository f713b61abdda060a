"""Command-line entry point.

    faultlines run PROGRAM [--in NAME=INT ...] [--ce-file FILE]
                   [--bcond N] [--bmcs N] [--kmax N] [--domain LO:HI]
                   [--format text|json] [--dot FILE] [--no-incremental]

Exit codes: 0 report produced; 1 file/parse/typecheck failure
(diagnostics on stderr); 2 usage error; 3 the counterexample does not
violate the postcondition (nothing to localize).
"""

from __future__ import annotations

import argparse
import json
import sys

from .cfg import build_cfg, render_dot, to_dsa
from .explorer import Counterexample, ExplorerConfig, ExplorerError, NothingToLocalizeError, run
from .frontend import FrontendError, interpret, parse_program, typecheck
from .mcs import McsConfig
from .report import render_json, render_text
from .solver import DomainConfig

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_USAGE = 2
EXIT_NOT_A_COUNTEREXAMPLE = 3


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _non_negative(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _domain(text: str) -> DomainConfig:
    try:
        lo_text, hi_text = text.split(":", 1)
        dom = DomainConfig(int(lo_text), int(hi_text))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected LO:HI with LO <= HI ({e})")
    return dom


def _build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faultlines",
        description="Constraint-based fault localization from a failing input.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="localize faults in an annotated program")
    runp.add_argument("program", help="path to the annotated source file")
    runp.add_argument(
        "--in",
        dest="inputs",
        action="append",
        default=[],
        metavar="NAME=INT",
        help="one input binding of the counterexample (repeatable)",
    )
    runp.add_argument("--ce-file", help="JSON object file with the counterexample")
    runp.add_argument("--bcond", type=_non_negative, default=2, help="max deviated conditions")
    runp.add_argument("--bmcs", type=_positive, default=3, help="max MCSs per path")
    runp.add_argument("--kmax", type=_positive, default=2, help="max MCS cardinality")
    runp.add_argument(
        "--domain", type=_domain, default=DomainConfig(), help="variable bounds LO:HI"
    )
    runp.add_argument("--format", choices=("text", "json"), default="text")
    runp.add_argument("--dot", help="also dump the DSA control-flow graph to this file")
    runp.add_argument(
        "--no-incremental",
        action="store_true",
        help="use a fresh solver per diagnosed path (identical diagnoses)",
    )
    return parser


def _load_counterexample(args, parser: argparse.ArgumentParser) -> dict:
    if args.inputs and args.ce_file:
        parser.error("use either --in bindings or --ce-file, not both")
    if args.ce_file:
        try:
            with open(args.ce_file, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as e:
            parser.error(f"cannot read counterexample file: {e}")
        except json.JSONDecodeError as e:
            parser.error(f"counterexample file is not valid JSON: {e}")
        if not isinstance(data, dict) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in data.values()
        ):
            parser.error("counterexample file must be a JSON object of integers")
        return data
    out = {}
    for binding in args.inputs:
        name, sep, value = binding.partition("=")
        if not sep or not name:
            parser.error(f"--in expects NAME=INT, got {binding!r}")
        try:
            out[name] = int(value)
        except ValueError:
            parser.error(f"--in value for {name!r} is not an integer: {value!r}")
    return out


def main(argv=None) -> int:
    parser = _build_arg_parser()
    args = parser.parse_args(argv)

    try:
        with open(args.program, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        print(f"error: cannot read program: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    try:
        fn = parse_program(text)
    except FrontendError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    diags = typecheck(fn)
    if diags:
        for d in diags:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    ce_map = _load_counterexample(args, parser)
    try:
        ce = Counterexample.of(ce_map, fn.param_names)
    except ExplorerError as e:
        parser.error(str(e))

    outcome = interpret(fn, ce.as_dict())
    if not outcome.precondition_holds:
        print("error: counterexample violates the precondition", file=sys.stderr)
        return EXIT_NOT_A_COUNTEREXAMPLE
    if outcome.postcondition_holds:
        print("error: counterexample does not violate the postcondition", file=sys.stderr)
        return EXIT_NOT_A_COUNTEREXAMPLE

    graph = to_dsa(build_cfg(fn))
    if args.dot:
        try:
            with open(args.dot, "w", encoding="utf-8") as fh:
                fh.write(render_dot(graph))
        except OSError as e:
            print(f"error: cannot write DOT file: {e}", file=sys.stderr)
            return EXIT_INPUT_ERROR

    config = ExplorerConfig(
        b_cond=args.bcond,
        mcs=McsConfig(b_mcs=args.bmcs, k_max=args.kmax),
        dom=args.domain,
    )
    try:
        report = run(graph, ce, config, incremental=not args.no_incremental)
    except NothingToLocalizeError:
        print("error: counterexample does not violate the postcondition", file=sys.stderr)
        return EXIT_NOT_A_COUNTEREXAMPLE

    if args.format == "json":
        sys.stdout.buffer.write(render_json(report))
        sys.stdout.buffer.flush()
    else:
        sys.stdout.write(render_text(report))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
