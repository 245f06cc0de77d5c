"""JSON reports. Everything except ``timing`` is a deterministic function of the inputs."""

import json
from pathlib import Path

TIMING_KEY = "timing"


def build_report(command, scenario, seed, records, errors, settings=None, wall_time=None) -> dict:
    report = {
        "command": command,
        "scenario": None if scenario is None else scenario.name,
        "scenario_hash": None if scenario is None else scenario.hash,
        "seed": seed,
        "settings": settings or {},
        "checks": [r.to_dict() for r in records],
        "errors": {"count": sum(r.errors for r in records), "logged": errors},
        "pass": all(r.passed for r in records),
    }
    if wall_time is not None:
        report[TIMING_KEY] = {"wall_seconds": wall_time}
    return report


def report_body(report: dict) -> str:
    """Canonical text of the report without wall time; byte-identical across reruns."""
    body = {k: v for k, v in report.items() if k != TIMING_KEY}
    return json.dumps(body, sort_keys=True, indent=2, allow_nan=False)


def write_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def summary_lines(report: dict):
    for c in report["checks"]:
        status = "PASS" if c["pass"] else "FAIL"
        err = f" errors={c['errors']}" if c["errors"] else ""
        yield (f"{status} {c['name']}: max={c['max_residual']:.3e} mean={c['mean_residual']:.3e} "
               f"tol={c['tolerance']:.1e} ({c['criterion']}, n={c['samples']}){err}")
        for v in c["details"].get("violations", []):
            yield f"    {v}"
