"""Command-line entry points: run, eval, gen-synth, report."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import TourError
from .harness import (
    LABELER_KINDS,
    METHODS,
    config_from_file,
    load_report,
    run_experiment,
)
from .metrics import evaluate
from .reporting import render_report
from .store import read_query_meta
from .synth import generate_synthetic, write_synthetic


def _k_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k list {text!r}, want e.g. 1,5,20")
    if not values:
        raise argparse.ArgumentTypeError("k list must not be empty")
    return values


def _rank_range(text: str) -> tuple[int, int]:
    parts = text.split("..")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"bad range {text!r}, want A..B")
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}, want integers A..B")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tour",
        description="Test-time optimization of query embeddings for dense retrieval.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment from a JSON config")
    run_p.add_argument("--config", required=True, help="JSON config file path")
    run_p.add_argument("--method", choices=METHODS)
    run_p.add_argument("--k", type=int, help="retrieval depth")
    run_p.add_argument("--eta", type=float, help="learning rate")
    run_p.add_argument("--max-iters", type=int, dest="max_iters")
    run_p.add_argument("--p", type=float, help="pseudo-positive mass threshold")
    run_p.add_argument("--tau", type=float, help="labeler softmax temperature")
    run_p.add_argument("--lambda", type=float, dest="lambda_", help="aggregation weight")
    run_p.add_argument("--labeler", choices=LABELER_KINDS)
    run_p.add_argument("--remote-url", dest="remote_url")
    run_p.add_argument("--workers", type=int)
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--out", help="report path (default: config out, else stdout)")

    eval_p = sub.add_parser("eval", help="compute metrics from a report file")
    eval_p.add_argument("--report", required=True)
    eval_p.add_argument("--queries", required=True, help="query metadata JSONL")
    eval_p.add_argument("--k", type=_k_list, default=[1, 5, 20, 100])

    gen_p = sub.add_parser("gen-synth", help="generate a synthetic benchmark")
    gen_p.add_argument("--n-contexts", type=int, required=True)
    gen_p.add_argument("--n-queries", type=int, required=True)
    gen_p.add_argument("--dim", type=int, required=True)
    gen_p.add_argument("--gold-rank-range", type=_rank_range, default=(2, 8))
    gen_p.add_argument("--seed", type=int, default=0)
    gen_p.add_argument("--out-dir", required=True)

    report_p = sub.add_parser("report", help="render CSV summary and figures")
    report_p.add_argument("--report", required=True)
    report_p.add_argument("--out-dir", required=True)
    report_p.add_argument("--prefix", default="report")
    return parser


def cmd_run(args: argparse.Namespace) -> int:
    overrides = {
        "method": args.method,
        "k": args.k,
        "eta": args.eta,
        "max_iters": args.max_iters,
        "p": args.p,
        "tau": args.tau,
        "lambda": args.lambda_,
        "labeler": args.labeler,
        "remote_url": args.remote_url,
        "workers": args.workers,
        "seed": args.seed,
        "out": args.out,
    }
    config = config_from_file(args.config, overrides)
    report = run_experiment(config)
    if config.out:
        print(json.dumps({"aggregate": report.aggregate}, ensure_ascii=False))
        print(f"report written to {config.out}", file=sys.stderr)
    else:
        for row in report.rows:
            print(json.dumps(row, ensure_ascii=False))
        print(json.dumps({"aggregate": report.aggregate}, ensure_ascii=False))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    report = load_report(args.report)
    queries = read_query_meta(args.queries)
    metrics = evaluate(report.rows, queries, args.k)
    print(json.dumps(metrics, indent=2, ensure_ascii=False))
    return 0


def cmd_gen_synth(args: argparse.Namespace) -> int:
    lo, hi = args.gold_rank_range
    dataset = generate_synthetic(
        n_contexts=args.n_contexts,
        n_queries=args.n_queries,
        dim=args.dim,
        gold_rank_range=(lo, hi),
        seed=args.seed,
    )
    paths = write_synthetic(dataset, args.out_dir)
    print(
        json.dumps(
            {
                "n_contexts": args.n_contexts,
                "n_queries": args.n_queries,
                "dim": args.dim,
                "gold_rank_in_band": dataset.in_band_fraction(lo, hi),
                "paths": paths,
            },
            indent=2,
        )
    )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    report = load_report(args.report)
    for path in render_report(report, args.out_dir, prefix=args.prefix):
        print(path)
    return 0


_COMMANDS = {
    "run": cmd_run,
    "eval": cmd_eval,
    "gen-synth": cmd_gen_synth,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except TourError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
