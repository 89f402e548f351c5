"""Command line interface.

Exit codes: 0 success, 2 unreadable algebra file, 3 axiom failure,
4 non-unital algebra, 5 idempotent search came up short.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import constructions as cons
from . import io
from . import structure as st
from .analysis import (
    EXIT_OK,
    EXIT_PARSE,
    EXIT_SEARCH,
    AnalysisConfig,
    analyze,
)

FIXTURES = ("spin-factor", "sym-jordan", "direct-sum", "rsquare")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("path", help="algebra file (JSON)")
    p.add_argument("--seed", type=int, default=0, help="multistart seed (default 0)")
    p.add_argument("--multistart", type=int, default=None,
                   help="number of ascent starts (default 50 * dim)")
    p.add_argument("--tol", type=float, default=None,
                   help="classification tolerance (default 1e-8)")
    p.add_argument("--strict", action="store_true", help="halve every tolerance")
    p.add_argument("--format", choices=("human", "machine"), default="human")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--timings", action="store_true",
                   help="include wall-clock per stage in machine output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metrised",
        description="Idempotents, minimality and spin-factor structure of metrised algebras.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("validate", "check commutativity, form associativity and definiteness"),
        ("idempotents", "multistart idempotent search with L_c spectra"),
        ("minimality", "compare |e|^2 with twice the shortest idempotent length"),
        ("isomorphism", "build and verify the map from a spin factor"),
        ("analyze", "full pipeline"),
    ]:
        _common(sub.add_parser(name, help=help_))

    fx = sub.add_parser("fixture", help="write a standard algebra file")
    fx.add_argument("kind", choices=FIXTURES)
    fx.add_argument("--dim", type=int, default=None,
                    help="spin-factor: dimension m of the form space")
    fx.add_argument("--form", default=None,
                    help="spin-factor: JSON m x m SPD matrix (default identity)")
    fx.add_argument("--n", type=int, default=None, help="sym-jordan: matrix size")
    fx.add_argument("--left", default=None, help="direct-sum: first algebra file")
    fx.add_argument("--right", default=None, help="direct-sum: second algebra file")
    fx.add_argument("--out", required=True, help="output algebra file")
    return parser


def make_fixture(kind: str, params: dict, out_path=None):
    """Algebra for a fixture ``kind``; ``params`` holds the matching CLI options.

    Also written to ``out_path`` when given.
    """
    A = _fixture(kind, params)
    if out_path is not None:
        io.save(A, out_path, {"fixture": kind})
    return A


def _fixture(kind: str, params: dict):
    if kind == "spin-factor":
        if params.get("form") is not None:
            f = np.array(json.loads(params["form"]), dtype=float)
        else:
            m = params.get("dim")
            if m is None or m < 1:
                raise ValueError("spin-factor needs --dim m >= 1 or --form")
            f = np.eye(m)
        return cons.spin_factor(f)
    if kind == "sym-jordan":
        n = params.get("n")
        if n is None or n < 1:
            raise ValueError("sym-jordan needs --n >= 1")
        return cons.sym_jordan(n)
    if kind == "direct-sum":
        if not params.get("left") or not params.get("right"):
            raise ValueError("direct-sum needs --left and --right")
        return cons.direct_sum(io.load(params["left"]), io.load(params["right"]))
    if kind == "rsquare":
        return cons.rsquare()
    raise ValueError(f"unknown fixture kind {kind!r}")


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _isomorphism_only(A, cfg, args) -> int:
    report = analyze(A, cfg, stop_after="minimality")
    if not report.ok:
        _emit(_render(report, args), args.out)
        return report.exit_code
    try:
        iso = st.build_isomorphism(A, report.records, cfg.search, cfg.samples, cfg.search.seed,
                                   cfg.tolerances.homomorphism)
        report.stages["isomorphism"] = iso.as_dict()
    except st.MinimalityRequired as exc:
        report.skipped["isomorphism"] = str(exc)
    _emit(_render(report, args), args.out)
    return EXIT_OK


def _render(report, args) -> str:
    if args.format == "machine":
        return report.to_machine(include_timings=args.timings)
    return report.to_human()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "fixture":
        try:
            make_fixture(args.kind, vars(args), args.out)
        except (ValueError, io.AlgebraFileError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        return EXIT_OK

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            A = io.load(args.path)
        except io.AlgebraFileError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARSE
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)

    try:
        cfg = AnalysisConfig.make(args.seed, args.multistart, args.tol, args.strict)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    if args.command == "isomorphism":
        return _isomorphism_only(A, cfg, args)
    stop = {"validate": "validate", "idempotents": "search", "minimality": "minimality",
            "analyze": None}[args.command]
    report = analyze(A, cfg, stop_after=stop)
    if args.command == "idempotents" and report.ok and not report.records:
        report.exit_code = EXIT_SEARCH
    _emit(_render(report, args), args.out)
    if not report.ok:
        print(f"error: [{report.failed_stage}] {report.reason}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
