"""Command-line front end.

Exit codes: 0 agreement (or ok), 10 disagreement, 20 contradiction (or a failed
sheaf check), 1 error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from .analysis import AnalysisError, Analyzer, Status, classify, reconcile
from .dsl import DslError, parse_files
from .lattice import LatticeError
from .oracle import OracleError, oracle_corpus_consistent
from .report import (
    check_report,
    reconcile_report,
    render_json,
    render_text,
    sections_report,
    verify_report,
)
from .sheaf import SheafError, enumerate_sections, verify_axioms
from .theory import TheoryError, model_cap_from_env

EXIT_CODES = {Status.AGREEMENT: 0, Status.DISAGREEMENT: 10, Status.CONTRADICTION: 20}
EXIT_ERROR = 1


class CliError(Exception):
    pass


@dataclass
class RunConfig:
    paths: list[str]
    mode: str = "strict"
    predicates: Optional[list[str]] = None
    format: str = "text"
    model_cap: int = field(default_factory=model_cap_from_env)
    oracle: bool = False

    def __post_init__(self):
        if not self.paths:
            raise CliError("at least one input file is required")
        if self.model_cap <= 0:
            raise CliError("--model-cap must be positive")


def _show_truth(corpus, mode: str) -> bool:
    return mode == "permissive" or corpus.has_negation


def _emit(report: dict, fmt: str) -> str:
    return render_json(report) if fmt == "json" else render_text(report)


def _oracle_annotate(report: dict, corpus, cfg: RunConfig, verdict_for) -> bool:
    agree_all = True
    for p in report["predicates"]:
        consistent = oracle_corpus_consistent(corpus, p["name"], cfg.mode, cfg.model_cap)
        agrees = consistent == (verdict_for(p["name"]) != Status.CONTRADICTION)
        p["oracle"] = {"consistent": consistent, "agrees": agrees}
        agree_all &= agrees
    return agree_all


def cmd_check(cfg: RunConfig) -> tuple[int, str]:
    corpus = parse_files(cfg.paths)
    verdict = classify(corpus, cfg.mode, cfg.predicates, cfg.model_cap)
    report = check_report(corpus, verdict, _show_truth(corpus, cfg.mode))
    code = EXIT_CODES[verdict.status]
    if cfg.oracle and not _oracle_annotate(report, corpus, cfg, lambda p: verdict[p].status):
        code = EXIT_ERROR
    return code, _emit(report, cfg.format)


def cmd_reconcile(cfg: RunConfig) -> tuple[int, str]:
    corpus = parse_files(cfg.paths)
    an = Analyzer(corpus, cfg.mode, cfg.model_cap)
    rec = reconcile(corpus, cfg.mode, cfg.predicates, analyzer=an)
    verdict = classify(corpus, cfg.mode, cfg.predicates, analyzer=an)
    report = reconcile_report(corpus, rec, _show_truth(corpus, cfg.mode))
    code = EXIT_CODES[verdict.status]
    if cfg.oracle and not _oracle_annotate(report, corpus, cfg, lambda p: verdict[p].status):
        code = EXIT_ERROR
    return code, _emit(report, cfg.format)


def cmd_sections(cfg: RunConfig, nodes: Optional[list[str]] = None) -> tuple[int, str]:
    corpus = parse_files(cfg.paths)
    an = Analyzer(corpus, cfg.mode, cfg.model_cap)
    members = list(nodes) if nodes else list(an.doc_ids)
    unknown = [m for m in members if m not in an.doc_ids]
    if unknown:
        raise CliError(f"unknown theory id(s): {', '.join(unknown)}")
    members = sorted(set(members), key=an.doc_ids.index)
    shared = [
        p
        for p in an.predicates()
        if all(m in an.constraining(p) for m in members)
        and (cfg.predicates is None or p in cfg.predicates)
    ]
    per_predicate = [(p, an.sections(p, members)[1]) for p in shared]
    report = sections_report(corpus, cfg.mode, members, per_predicate, _show_truth(corpus, cfg.mode))
    return 0, _emit(report, cfg.format)


def cmd_verify_sheaf(cfg: RunConfig) -> tuple[int, str]:
    corpus = parse_files(cfg.paths)
    if not corpus.generic_sheaves:
        raise CliError("no generic_sheaf block found")
    results = []
    for name in sorted(corpus.generic_sheaves):
        spec = corpus.generic_sheaves[name]
        check = verify_axioms(spec)
        sections = enumerate_sections(spec) if check.ok else []
        results.append((spec, check, sections))
    code = 0 if all(c.ok for _, c, _ in results) else EXIT_CODES[Status.CONTRADICTION]
    return code, _emit(verify_report(corpus, results), cfg.format)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sheafaccord",
        description="Find agreements, disagreements and contradictions between parameterized theories.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("paths", nargs="+", metavar="FILE", help="theory files")
    common.add_argument("--mode", choices=("strict", "permissive"), default="strict")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--predicate", action="append", dest="predicates", metavar="NAME")
    common.add_argument("--model-cap", type=int, default=None)
    common.add_argument("--oracle", action="store_true", help="cross-check verdicts by brute force")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="classify the corpus")
    sections = sub.add_parser("sections", parents=[common], help="maximal sections over theories")
    sections.add_argument("--nodes", help="comma-separated theory ids (default: all)")
    sub.add_parser("verify-sheaf", parents=[common], help="check generic_sheaf blocks")
    sub.add_parser("reconcile", parents=[common], help="propose reconciliations")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            paths=args.paths,
            mode=args.mode,
            predicates=args.predicates,
            format=args.format,
            model_cap=args.model_cap if args.model_cap is not None else model_cap_from_env(),
            oracle=args.oracle,
        )
        if args.command == "check":
            code, out = cmd_check(cfg)
        elif args.command == "reconcile":
            code, out = cmd_reconcile(cfg)
        elif args.command == "sections":
            nodes = [n.strip() for n in args.nodes.split(",") if n.strip()] if args.nodes else None
            code, out = cmd_sections(cfg, nodes)
        else:
            code, out = cmd_verify_sheaf(cfg)
    except DslError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (
        CliError,
        AnalysisError,
        TheoryError,
        SheafError,
        LatticeError,
        OracleError,
        OSError,
        ValueError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    sys.stdout.write(out)
    if code == EXIT_ERROR:
        print("error: oracle cross-check disagrees with the sheaf verdict", file=sys.stderr)
    return code
