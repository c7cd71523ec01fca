"""Command-line harness.

    sketchattack attack <config.json> [--out-dir D] [--seed S] [--threads N]
    sketchattack validate <suite>     [--out-dir D] [--seed S]
    sketchattack tradeoff --k 100,1000 --sigma 0,0.05,0.1 [--draws N] [--out-dir D] [--seed S]

Exit codes: 0 success, 1 validation checks failed, 2 bad configuration or
arguments, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .campaign import CampaignConfig, run_campaign, tradeoff_table, write_tradeoff_csv
from .validate import DEFAULT_SEED, SELECTORS, run_suite

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketchattack",
        description="Run sketch attacks, validation suites, and the accuracy/robustness tradeoff table.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_attack = sub.add_parser("attack", help="run an attack campaign from a JSON config")
    p_attack.add_argument("config", help="path to the campaign config JSON")
    _common_flags(p_attack)
    p_attack.add_argument("--threads", type=int, default=1, help="worker threads over trials")

    p_validate = sub.add_parser("validate", help="run a validation suite")
    p_validate.add_argument("suite", help=f"one of {', '.join(SELECTORS)}")
    _common_flags(p_validate)

    p_tradeoff = sub.add_parser("tradeoff", help="accuracy/robustness tradeoff table")
    p_tradeoff.add_argument("--k", action="append", required=True, help="sketch sizes (repeat or comma-separate)")
    p_tradeoff.add_argument("--sigma", action="append", required=True, help="robustness noise scales")
    p_tradeoff.add_argument("--draws", type=int, default=20_000, help="Monte Carlo draws per k")
    _common_flags(p_tradeoff)
    return parser


def _common_flags(parser) -> None:
    parser.add_argument("--out-dir", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the master seed")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "attack":
            return _cmd_attack(args)
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_tradeoff(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def _cmd_attack(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = CampaignConfig.from_json(doc)
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        config.master_seed = args.seed
    out_dir = args.out_dir or config.out_dir or "campaign-out"
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    result = run_campaign(config, out_dir=out_dir, threads=args.threads)
    for group in result.summary["groups"]:
        print(
            f"k={group['k']} estimator={group['estimator']} "
            f"final mean deviation={group['final_mean_deviation']:.6g} "
            f"err rate={group['mean_final_err_rate']:.4g}"
        )
    print(f"wrote {result.csv_path} and {result.summary_path}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    if args.suite not in SELECTORS:
        print(
            f"error: unknown suite {args.suite!r}; choose from {', '.join(SELECTORS)}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    manifest = run_suite(args.suite, seed=seed)
    for entry in manifest["checks"]:
        status = "PASS" if entry["pass"] else "FAIL"
        print(f"{status} {entry['check']}: statistic={entry['statistic']:.6g} bound={entry['bound']:.6g}")
    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "validation-manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {path}")
    return EXIT_OK if manifest["all_pass"] else EXIT_CHECK_FAILED


def _cmd_tradeoff(args) -> int:
    try:
        k_list = _parse_numbers(args.k, int)
        sigma_list = _parse_numbers(args.sigma, float)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    rows = tradeoff_table(k_list, sigma_list, draws=args.draws, seed=seed)
    print(f"{'k':>6} {'sigma':>8} {'sigma0':>9} {'sigma_t':>9} {'empirical':>10}")
    for row in rows:
        print(
            f"{row['k']:>6} {row['sigma']:>8.4g} {row['sigma0']:>9.4f} "
            f"{row['sigma_t']:>9.4f} {row['empirical']:>10.4f}"
        )
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        path = os.path.join(args.out_dir, "tradeoff.csv")
        write_tradeoff_csv(rows, path)
        print(f"wrote {path}")
    return EXIT_OK


def _parse_numbers(raw_items, cast):
    values = []
    for item in raw_items:
        for piece in str(item).split(","):
            piece = piece.strip()
            if piece:
                values.append(cast(piece))
    if not values:
        raise ValueError("no values given")
    return values


if __name__ == "__main__":
    sys.exit(main())
