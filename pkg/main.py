"""
Joint PS/TTD Precoding Entry Point
==================================

Command-line front end for the hybrid precoding library. Every subcommand
reads an optional scenario file (see services/scenario_io.py), runs one job
and writes CSV or `key = value` text to --out (stdout by default).

## Subcommands

    gain-pattern   squint profile of carrier-matched PS beams, rows (nt, k, gain)
    sweep-nt       average array gain vs. antenna count at fixed t_max
    sweep-tmax     average array gain vs. TTD range at fixed antenna count
    design         PS phases and TTD delays of one designer
    verify         closed form vs. numeric oracle and the property checks
    criteria       antenna-count and TTD-range selection bounds

## Exit codes

    0  success
    1  invalid configuration (scenario file, flags, inconsistent geometry)
    2  verification failure

Example:

    python main.py sweep-tmax --scenario scenario.txt --out fig4.csv --workers 4
    python main.py verify --seed 42 --count 100
"""

from __future__ import annotations

import argparse
import logging
import sys

from config import configure_logging, settings
from evaluation.verify import run_verification, summary_lines
from precoding.closed_form import (
    baseline_design,
    max_nt_criterion,
    min_tmax_criterion,
    nt_bound_family,
    theorem1_design,
    tmax_bound_family,
)
from precoding.errors import ScenarioFileError, VerificationError
from services.scenario_io import (
    design_csv,
    fmt,
    gain_csv,
    load_scenario,
    profile_csv,
    scenario_params,
    write_output,
)
from workers.sweeps import FIG3_NT, FIG4_TMAX_PS, run_fig1, run_fig3, run_fig4

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2

DESIGN_FUNCTIONS = {"theorem1": theorem1_design, "baseline": baseline_design}


def _list_of(kind):
    def parse(text: str):
        try:
            return tuple(kind(v) for v in text.split(",") if v.strip())
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"expected a comma list, got {text!r}") from e

    return parse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario file (key = value lines)")
    common.add_argument("--out", help="output file, stdout when omitted")
    common.add_argument("--seed", type=int, help="overrides the scenario seed")
    common.add_argument("--workers", type=int, default=settings.DEFAULT_WORKERS)
    common.add_argument("--log-level", default=None)

    parser = argparse.ArgumentParser(description="Joint phase-shifter / true-time-delay hybrid precoding")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gain-pattern", parents=[common], help="squint profile of matched PS beams")
    p.add_argument("--nt-list", type=_list_of(int), default=(16, 128, 1024))

    designers = _list_of(str)
    p = sub.add_parser("sweep-nt", parents=[common], help="average gain vs. N_t")
    p.add_argument("--nt-list", type=_list_of(int), default=FIG3_NT)
    p.add_argument("--tmax-ps", type=float, help="defaults to the scenario t_max")
    p.add_argument("--designers", type=designers, default=("theorem1", "baseline"))
    p.add_argument("--per-subcarrier", action="store_true")

    p = sub.add_parser("sweep-tmax", parents=[common], help="average gain vs. t_max")
    p.add_argument("--tmax-list", type=_list_of(float), default=tuple(float(v) for v in FIG4_TMAX_PS),
                   help="picoseconds")
    p.add_argument("--nt", type=int, help="defaults to the scenario N_t")
    p.add_argument("--designers", type=designers, default=("theorem1", "baseline"))
    p.add_argument("--per-subcarrier", action="store_true")

    p = sub.add_parser("design", parents=[common], help="emit PS phases and TTD delays")
    p.add_argument("--designer", choices=sorted(DESIGN_FUNCTIONS), default="theorem1")

    p = sub.add_parser("verify", parents=[common], help="oracle and property checks")
    p.add_argument("--count", type=int, default=None, help="random scenarios in the batch")
    p.add_argument("--inject-fault", action="store_true", help="perturb one delay; must fail")

    p = sub.add_parser("criteria", parents=[common], help="N_t and t_max selection bounds")
    p.add_argument("--verbose", action="store_true", help="also print the per-m bounds")
    return parser


# ============================================================================
# COMMANDS
# ============================================================================

def cmd_gain_pattern(args, sc) -> str:
    if sc.psi_c.size > 1:
        # nt,k,gain has no direction column; one profile per invocation
        logger.warning(
            "[Pattern] %d directions given, profiles use psi_c[0] = %s only",
            sc.psi_c.size,
            float(sc.psi_c[0]),
        )
    rows = run_fig1(sc.grid, float(sc.psi_c[0]), args.nt_list)
    return profile_csv(rows)


def cmd_sweep_nt(args, sc) -> str:
    t_max = sc.t_max if args.tmax_ps is None else args.tmax_ps * 1e-12
    records = run_fig3(sc, args.nt_list, t_max, designers=args.designers, workers=args.workers)
    return gain_csv(records, args.per_subcarrier)


def cmd_sweep_tmax(args, sc) -> str:
    nt = sc.geom.num_antennas if args.nt is None else args.nt
    records = run_fig4(sc, nt, args.tmax_list, designers=args.designers, workers=args.workers)
    return gain_csv(records, args.per_subcarrier)


def cmd_design(args, sc) -> str:
    design = DESIGN_FUNCTIONS[args.designer](sc)
    return design_csv(design, sc.grid.fc)


def cmd_criteria(args, sc) -> str:
    nt_bound = max_nt_criterion(sc.grid, sc.geom.num_ttd, sc.t_max, sc.psi_c)
    tmax_bound = min_tmax_criterion(sc.geom, sc.grid, sc.psi_c)
    lines = [
        f"nt_bound = {'unbounded' if nt_bound is None else nt_bound}",
        f"tmax_bound_ps = {fmt(tmax_bound * 1e12)}",
    ]
    if args.verbose:
        psi_max = float(abs(sc.psi_c).max())
        if psi_max > 0:
            for m, bound in enumerate(nt_bound_family(sc.grid, sc.geom.num_ttd, sc.t_max, psi_max), start=1):
                lines.append(f"nt_bound[m={m}] = {fmt(bound)}")
        for m, bound in enumerate(tmax_bound_family(sc.geom, sc.grid, psi_max), start=1):
            lines.append(f"tmax_bound_ps[m={m}] = {fmt(bound * 1e12)}")
    return "\n".join(lines) + "\n"


def cmd_verify(args, scenario) -> str:
    scenarios = [scenario_params(scenario)] if args.scenario else None
    report = run_verification(
        scenarios=scenarios,
        seed=scenario.seed,
        count=args.count,
        inject=args.inject_fault,
        workers=args.workers,
    )
    text = "\n".join(summary_lines(report)) + "\n"
    write_output(text, args.out)
    report.raise_for_failures()
    return ""


COMMANDS = {
    "gain-pattern": cmd_gain_pattern,
    "sweep-nt": cmd_sweep_nt,
    "sweep-tmax": cmd_sweep_tmax,
    "design": cmd_design,
    "criteria": cmd_criteria,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on bad flags; 2 is reserved for verification failures
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    configure_logging(args.log_level)

    try:
        scenario = load_scenario(args.scenario)
        if args.seed is not None:
            scenario = scenario.model_copy(update={"seed": args.seed})
        if args.command == "verify":
            cmd_verify(args, scenario)
            return EXIT_OK
        sc = scenario_params(scenario)
        write_output(COMMANDS[args.command](args, sc), args.out)
    except VerificationError as e:
        logger.error("[Verify] %s", e)
        return EXIT_VERIFY
    except (ScenarioFileError, ValueError, OSError) as e:
        logger.error("[Config] %s", e)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(run())
