"""Command-line entry point: ``gaugechain run | verify | list-scenarios``."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

from .errors import GaugeChainError
from .runner import load_scenario, run_file, shipped_scenarios, verify_all


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaugechain", description="Dyson-map chains, gauge links and evolution checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one or more scenario files (or shipped scenario names)")
    run_p.add_argument("scenarios", nargs="+", help="scenario file paths or shipped scenario names")
    run_p.add_argument("--dim", type=int, help="override fock.dim")
    run_p.add_argument("--step", type=float, help="override grid.step")
    run_p.add_argument("--out-dir", default="out", help="artifact directory (default: out)")
    run_p.add_argument("--parallel", type=int, default=1, metavar="N", help="run scenarios on N worker processes")
    run_p.add_argument("--json", action="store_true", help="print report.json content instead of the table")

    verify_p = sub.add_parser("verify", help="run the acceptance criteria and print a summary table")
    verify_p.add_argument("--out-dir", default="out", help="artifact directory (default: out)")

    sub.add_parser("list-scenarios", help="list the shipped scenarios")
    return parser


def _run_one(args: tuple) -> tuple[str, int, str]:
    ref, out_dir, dim, step, as_json = args
    report = run_file(ref, out_dir, dim=dim, step=step)
    text = json.dumps(report.to_json(), indent=2) if as_json else report.summary()
    return ref, report.exit_status, text


def main(argv: list[str] | None = None) -> int:
    """Parse ``argv`` and dispatch; the return value is the process exit status."""
    args = _parser().parse_args(argv)
    try:
        if args.command == "list-scenarios":
            for name, path in shipped_scenarios().items():
                scenario = load_scenario(path)
                print(f"{name:24s} {scenario.model_type:8s} chain {list(scenario.chain_depth)}  {path}")
            return 0
        if args.command == "verify":
            return verify_all(args.out_dir).exit_status
        jobs = [(ref, args.out_dir, args.dim, args.step, args.json) for ref in args.scenarios]
        if args.parallel > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=args.parallel) as pool:
                results = list(pool.map(_run_one, jobs))
        else:
            results = [_run_one(job) for job in jobs]
        for _, _, text in results:
            print(text)
        return max(status for _, status, _ in results)
    except GaugeChainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
