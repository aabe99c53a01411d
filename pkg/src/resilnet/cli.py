"""Command-line interface.

Subcommands select which stages run; `report` runs everything.  Exit
codes: 0 success, 1 error, 2 envelope violations, 3 NotDetermined under
--strict.  RESILNET_LOG in {error, info, debug} controls verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import ResilnetError
from .scenario import parse_scenario, run

log = logging.getLogger("resilnet")


def _setup_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(
        os.environ.get("RESILNET_LOG", "error").lower(), logging.ERROR)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="resilnet",
        description="Resilience analysis of linear control networks "
                    "under partial loss of control authority")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
            ("analyze", "stabilizability/resilience verdicts only"),
            ("bounds", "constants and bound envelopes"),
            ("simulate", "adversarial trajectory simulation"),
            ("report", "all stages: verdicts, bounds, simulation, checks")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--scenario", required=True, help="scenario file path")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--dt", type=float, default=None,
                       help="override integrator step")
        p.add_argument("--t-end", type=float, default=None,
                       help="override simulation horizon")
        p.add_argument("--policy-u", default=None,
                       help="override the healthy-control policy")
        p.add_argument("--policy-w", default=None,
                       help="override the adversary policy")
        p.add_argument("--seed", type=int, default=None,
                       help="seed for randomized oracles (unused by the "
                            "deterministic pipeline stages)")
        p.add_argument("--strict", action="store_true",
                       help="treat NotDetermined verdicts as failure (exit 3)")
        p.add_argument("--envelope-scale", type=float, default=1.0,
                       help="fault injection: scale envelopes before checking")
    return ap


def main(argv=None) -> int:
    _setup_logging()
    args = _parser().parse_args(argv)
    try:
        sc = parse_scenario(args.scenario)
        if args.command == "analyze":
            sc.analysis.verdicts = True
            sc.analysis.bounds = sc.analysis.simulate = sc.analysis.check = False
        elif args.command == "bounds":
            sc.analysis.verdicts = False
            sc.analysis.bounds = True
            sc.analysis.simulate = sc.analysis.check = False
        elif args.command == "simulate":
            sc.analysis.verdicts = False
            sc.analysis.bounds = sc.analysis.simulate = True
            sc.analysis.check = False
        if args.dt is not None:
            sc.simulation.dt = args.dt
        if args.t_end is not None:
            sc.simulation.t_end = args.t_end
        if args.policy_u is not None:
            sc.simulation.policies["u_hat"] = args.policy_u
        if args.policy_w is not None:
            sc.simulation.policies["w_N"] = args.policy_w
        result = run(sc, outdir=args.out, envelope_scale=args.envelope_scale)
    except ResilnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = result.report
    if report.violations is not None and not report.violations["ok"]:
        print("envelope violations detected", file=sys.stderr)
        return 2
    if args.strict:
        nd = [k for k, v in report.verdicts.items()
              if v["conclusion"] == "NotDetermined"]
        if report.finite_time and report.finite_time["conclusion"] == "NotDetermined":
            nd.append("finite_time")
        if nd:
            print(f"NotDetermined under --strict: {', '.join(nd)}",
                  file=sys.stderr)
            return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
