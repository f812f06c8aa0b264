#!/usr/bin/env python3
"""Single entry point: bounds for a model config, worked examples, self-test.

Usage:
  python start.py analyze --config data/configs/chain3.json --out out/
  python start.py analyze --config data/configs/tcp.json --seed 7 --d-grid 1.5:6:10
  python start.py reproduce tcp|rational|wealth [--c 1.0] [--a 0.5]
  python start.py selftest [--seed 0] [--corrupt alpha]

Exit codes: 0 ok, 1 invalid input or failed check, 2 every bound row vacuous.

Environment variables:
  MIXING_OUTPUT_DIR   Default output directory (./output)
  LOG_LEVEL=INFO      Root log level
  MC_WORKERS          Threads for Monte Carlo chunks (does not change results)
"""
import argparse
import asyncio
import logging
import os
import sys

from rich.console import Console

from cli import EXIT_INVALID, REPRODUCE_EXAMPLES, execute_command
from config import LOG_LEVEL
from mixing.output import BOUNDS_FILE, COMPARISON_FILE, csv_table

logging.basicConfig(
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
)
logger = logging.getLogger(__name__)
console = Console()


def _overrides(args) -> dict:
    keys = ("seed", "t_max", "d_grid", "mc_samples", "c", "a", "d")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _print_tables(paths: dict):
    if paths.get("bounds"):
        console.print(csv_table(paths["bounds"], BOUNDS_FILE, every=5))
    if paths.get("comparison"):
        console.print(csv_table(paths["comparison"], COMPARISON_FILE, every=5))


def _report(result: dict) -> int:
    if "error" in result:
        console.print(f"[red]error:[/red] {result['error']}")
        for line in result.get("details", []):
            console.print(f"  {line}")
        return result.get("exit_code", EXIT_INVALID)
    for line in result.get("narrative", []):
        console.print(line)
    if "checks" in result:
        for name, ok in result["checks"].items():
            console.print(f"  {'[green]ok[/green]' if ok else '[red]FAIL[/red]'}  {name}")
    if "suites" in result:
        for s in result["suites"]:
            mark = "[green]ok[/green]" if s["passed"] else "[red]FAIL[/red]"
            console.print(f"  {mark}  {s['name']} ({s['checked']} checks)")
    if "epsilon" in result:
        eps = result["epsilon"]
        console.print(f"epsilon={eps['value']:.6g} ({eps['provenance']}), gamma={result['gamma']:.6g}, d={result['d']:g}")
    if result.get("best"):
        b = result["best"]
        console.print(f"best bound {b['bound_value']:.6g} at t={b['t']} (j*={b['j_star']})")
    if result.get("vacuous_only"):
        console.print("[yellow]every bound row is vacuous (>= 1)[/yellow]")
    _print_tables(result.get("paths") or {})
    return result["exit_code"]


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--out", help="Output directory")
    p.add_argument("--seed", type=int, help="Monte Carlo seed")
    p.add_argument("--t-max", dest="t_max", type=int, help="Largest horizon t")
    p.add_argument("--d-grid", dest="d_grid", help="Scan d over lo:hi:steps")
    p.add_argument("--mc-samples", dest="mc_samples", type=int, help="Monte Carlo sample count for e")
    p.add_argument("--c", type=float, help="TCP small-set radius")
    p.add_argument("--a", type=float, help="TCP contraction factor")
    p.add_argument("--d", type=float, help="Small-set level d >= 1")


def main() -> int:
    parser = argparse.ArgumentParser(description="Kolmogorov-distance convergence bounds for monotone Markov chains")
    sub = parser.add_subparsers(dest="command", required=True)

    p_analyze = sub.add_parser("analyze", help="Bound table for one model config")
    p_analyze.add_argument("--config", required=True, help="JSON model config")
    _add_run_flags(p_analyze)

    p_repro = sub.add_parser("reproduce", help="Run a pinned worked example")
    p_repro.add_argument("example", choices=REPRODUCE_EXAMPLES)
    _add_run_flags(p_repro)

    p_self = sub.add_parser("selftest", help="Fast invariant suites")
    p_self.add_argument("--seed", type=int, default=0)
    p_self.add_argument("--corrupt", choices=["alpha"], help="Break a constant to see the suites fail")

    args = parser.parse_args()
    if args.command == "analyze":
        call = ("analyze", {"config": args.config, "out": args.out, "overrides": _overrides(args)})
    elif args.command == "reproduce":
        call = ("reproduce", {"example": args.example, "out": args.out, "overrides": _overrides(args)})
    else:
        call = ("selftest", {"seed": args.seed, "corrupt": args.corrupt, "show_progress": sys.stderr.isatty()})

    if args.command != "selftest" and args.out:
        os.makedirs(args.out, exist_ok=True)
    result = asyncio.run(execute_command(*call))
    return _report(result)


if __name__ == "__main__":
    sys.exit(main())
