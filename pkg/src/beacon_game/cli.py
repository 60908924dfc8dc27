"""Command-line entry point: one subcommand per experiment family.

Exit status is 0 on success, 1 for invalid input or configuration and 2
when a numerical routine fails (non-convergence, no interior equilibrium).
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import load_config
from .errors import NumericError, ValidationError
from .experiments import emit_bound_csv, run_distance_sweep, run_sweep, run_uncertainty_sweep, validate_bound
from .records import emit_csv, emit_summary_csv, summary_path

log = logging.getLogger("beacon_game")


def _single_node(cfg, jobs):
    if cfg.scenario.N != 1:
        raise ValidationError(f"scenario.N: single-node run needs N = 1, got {cfg.scenario.N}")
    return run_sweep(cfg, jobs)


def _m1_exact(cfg, jobs):
    sc = cfg.scenario
    if sc.M != 1 or sc.N != 1:
        raise ValidationError(f"scenario: m1-exact run needs M = 1 and N = 1, got M = {sc.M}, N = {sc.N}")
    return run_sweep(cfg, jobs)


COMMANDS = {
    "single-node": (_single_node, "closed-form equilibrium for one sensor versus beacon distance"),
    "m1-exact": (_m1_exact, "single-antenna comparison of the closed form and the exponential model"),
    "sweep-distance": (run_distance_sweep, "multi-sensor bounds, SDP and search versus beacon distance"),
    "sweep-uncertainty": (run_uncertainty_sweep, "per-antenna power versus the (1,1) error variance"),
    "validate-bound": (None, "Monte-Carlo check of the Markov/Jensen non-outage bound"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beacon-game", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="experiment config file")
        sp.add_argument("--out", required=True, help="output CSV path")
        sp.add_argument("--seed", type=int, default=None, help="override sweep.base_seed")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for replications")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, base_seed=args.seed)
        if args.command == "validate-bound":
            rows = validate_bound(cfg)
            emit_bound_csv(rows, args.out)
            bad = sum(r.violated for r in rows)
            print(f"{len(rows)} checks, {bad} violations -> {args.out}")
            return 0
        runner = COMMANDS[args.command][0]
        records = runner(cfg, args.jobs)
        emit_csv(records, args.out)
        emit_summary_csv(records, summary_path(args.out))
        print(f"{len(records)} records -> {args.out}")
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
