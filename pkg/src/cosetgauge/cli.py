"""Command-line entry point.

Exit codes: 0 when every executed check passes, 1 when a check fails, 2 on usage,
input or I/O errors.
"""

import argparse
import sys
import time

from . import checks
from .errors import CosetGaugeError
from .report import build_report, summary_lines, write_report
from .scenario import load_scenario

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULT_SAMPLES = {
    "check-theorem1": 100,
    "check-theorem4": 200,
    "check-invariance": 500,
    "reconstruct": 200,
    "check-parser": 10_000,
}
COMMANDS = (
    "validate-algebra",
    "check-reductive",
    "check-theorem1",
    "check-theorem4",
    "check-invariance",
    "reconstruct",
    "check-parser",
    "all",
)
SCAN_COMMANDS = {
    "check-theorem1": checks.theorem1,
    "check-theorem4": checks.theorem4,
    "check-invariance": checks.invariance,
    "reconstruct": checks.theorem6,
}


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cosetgauge", description="Numerical checks for gauge theories with broken symmetry on coset bundles.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--scenario", help="scenario JSON file or built-in name (so3_so2, su2_u1, so3_so2_raw, so3_bad_split, abelian)")
    p.add_argument("--samples", type=_nonneg_int, help="number of samples (per-command default)")
    p.add_argument("--seed", type=int, help="seed; defaults to the scenario seed")
    p.add_argument("--tol", type=_positive_float, help="override the command's primary tolerance")
    p.add_argument("--fd-step", type=_positive_float, default=checks.DEFAULT_FD_STEP, help="central-difference step (default 1e-4)")
    p.add_argument("--report", help="write the JSON report to this path")
    p.add_argument("--richardson", action="store_true", help="Richardson-extrapolate finite-difference residuals")
    p.add_argument("--workers", type=int, default=1, help="threads per scan; results do not depend on it")
    return p


def run_command(command, scenario_path=None, samples=None, seed=None, tol=None, fd_step=checks.DEFAULT_FD_STEP,
                richardson=False, workers=1):
    """Run one command and return ``(report, exit_code)``. Input problems raise CosetGaugeError."""
    start = time.perf_counter()
    scn = None
    if command != "check-parser" or scenario_path is not None:
        if scenario_path is None:
            raise CosetGaugeError(f"{command} needs --scenario")
        lenient = command in ("validate-algebra", "check-reductive")
        scn = load_scenario(scenario_path, require_reductive=not lenient)
    seed = (scn.seed if scn is not None else 0) if seed is None else seed
    log = []
    records = []

    def settings_for(cmd):
        n = DEFAULT_SAMPLES.get(cmd, 0) if samples is None else samples
        return checks.ScanSettings(n, seed, fd_step, richardson, max(1, workers), tol)

    todo = [c for c in COMMANDS[:-1] if c != "check-parser"] + ["check-parser"] if command == "all" else [command]
    for cmd in todo:
        if cmd == "validate-algebra":
            records += checks.validate_algebra(scn, 1e-10 if tol is None else tol)
        elif cmd == "check-reductive":
            records += checks.reductive(scn, tol)
        elif cmd == "check-parser":
            records += checks.parser_corpus(settings_for(cmd).samples, seed)
        else:
            records += SCAN_COMMANDS[cmd](scn, settings_for(cmd), log)

    settings = {"fd_step": fd_step, "richardson": richardson, "tol_override": tol,
                "samples": samples if samples is not None else {c: DEFAULT_SAMPLES[c] for c in todo if c in DEFAULT_SAMPLES}}
    report = build_report(command, scn, seed, records, log, settings, time.perf_counter() - start)
    return report, EXIT_PASS if report["pass"] else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, code = run_command(args.command, args.scenario, args.samples, args.seed, args.tol, args.fd_step,
                                   args.richardson, args.workers)
    except CosetGaugeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for line in summary_lines(report):
        print(line)
    print(f"{'PASS' if code == EXIT_PASS else 'FAIL'} {args.command} "
          f"({report['timing']['wall_seconds']:.2f} s, seed {report['seed']})")
    if args.report:
        try:
            write_report(report, args.report)
        except OSError as exc:
            print(f"error: cannot write report: {exc}", file=sys.stderr)
            return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
