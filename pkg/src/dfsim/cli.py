"""Command-line interface.

Verbs: run <config>, table1, table2, search <config>,
dfs-structure --n <N>.  Exit codes: 0 success, 1 threshold unmet,
2 validation error, 3 numerical failure.  DFSIM_WORKERS bounds the
worker count of the table verbs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError, NumericalError, RankDeficiencyError
from .runner import dfs_structure, run_experiment, run_table, search_experiment

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _print_table(result: dict) -> None:
    print(f"Table {result['table']} (N={result['N']}, C={result['C']}, "
          f"detuning_ratio={result['detuning_ratio']})")
    print(f"{'Method':<18}{'t_f (1/Gc)':>12}{'P(t_f)':>10}{'F(1,t_f)':>10}{'F(mu_f,t_f)':>12}")
    for row in result["rows"]:
        print(
            f"{row['method']:<18}{row['t_f']:>12.6g}{row['purity']:>10.4f}"
            f"{row['overlap_target']:>10.4f}{row['overlap_final_mu']:>12.4f}"
        )


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    summary = run_experiment(config)
    print(
        f"{summary.protocol}: t_f={summary.t_final:.6g}  P={summary.purity:.6f}  "
        f"F(1)={summary.overlap_target:.6f}  F(mu_f)={summary.overlap_final_mu:.6f}  "
        f"threshold={'met' if summary.threshold_met else 'UNMET'}"
    )
    return EXIT_OK if summary.threshold_met else EXIT_THRESHOLD


def _cmd_table(table: int, args: argparse.Namespace) -> int:
    out_dir = args.out_dir
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    result = run_table(table, out_dir)
    _print_table(result)
    if args.json:
        Path(args.json).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if all(r["threshold_met"] for r in result["rows"]) else EXIT_THRESHOLD


def _cmd_search(args: argparse.Namespace) -> int:
    config = load_config(args.config, mode="search")
    result = search_experiment(config)
    control = "mu_q" if result.label == "quench" else "beta"
    print(f"{result.label}: t_f={result.t_final:.6g}  {control}={result.control:.6g}")
    return EXIT_OK


def _cmd_structure(args: argparse.Namespace) -> int:
    result = dfs_structure(args.n)
    if args.json:
        Path(args.json).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    dims = result["dimensions"]
    print(f"N={args.n}: dark-subspace dimensions by C")
    for c in range(-args.n, args.n + 1):
        print(f"  C={c:+d}: {dims[str(c)]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dfsim",
        description="Tunable decoherence-free subspace engineering in a driven "
        "three-level atom-cavity ensemble",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one configured protocol")
    p_run.add_argument("config", help="path to a JSON experiment configuration")

    for table in (1, 2):
        p_t = sub.add_parser(f"table{table}", help=f"reproduce benchmark table {table}")
        p_t.add_argument("--out-dir", default=None, help="write per-run CSV/JSON here")
        p_t.add_argument("--json", default=None, help="write the table JSON here")

    p_search = sub.add_parser("search", help="minimum preparation-time search")
    p_search.add_argument("config", help="path to a JSON search configuration")

    p_struct = sub.add_parser("dfs-structure", help="emit dark-subspace structure data")
    p_struct.add_argument("--n", type=int, required=True, help="atom count")
    p_struct.add_argument("--json", default=None, help="write the structure JSON here")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "table1":
            return _cmd_table(1, args)
        if args.command == "table2":
            return _cmd_table(2, args)
        if args.command == "search":
            return _cmd_search(args)
        return _cmd_structure(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, RankDeficiencyError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
