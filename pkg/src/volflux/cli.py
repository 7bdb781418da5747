"""Command-line runner: ``volflux --scenario FILE [options]`` or ``volflux --list``."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from importlib import resources
from pathlib import Path

from . import __version__, scenario as scenario_mod
from .errors import ConfigParseError, ConfigValidationError
from .homology import standard_curves
from .scenario import SCHEMA_VERSION, SUITES
from .suites import SuiteReport, run_scenario
from .surface import BUILDERS

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

REPORT_COLUMNS = ("suite", "name", "comparison", "expected", "observed", "tolerance", "pass")
GAMMA_COLUMNS = ("phiId", "wordId", "method", "value", "stderrOrBound", "samples", "closedForm", "pass")
FLUX_COLUMNS = ("wordId", "curveId", "closedFormPeriod", "oracleEstimate", "sigmaMC", "pass")


def shipped_scenarios() -> list[str]:
    root = resources.files("volflux").joinpath("scenarios")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def list_builtins() -> str:
    lines = ["surfaces:"]
    lines += [f"  {name}" for name in sorted(BUILDERS)]
    lines.append("curve systems:")
    for name in sorted(BUILDERS):
        ids = ", ".join(standard_curves(BUILDERS[name]()).ids)
        lines.append(f"  standard ({name}): {ids}")
    lines.append("suites:")
    lines += [f"  {s}" for s in sorted(SUITES)]
    lines.append("scenarios:")
    lines += [f"  {s}" for s in shipped_scenarios()]
    return "\n".join(lines) + "\n"


def _num(x: float) -> str:
    return repr(float(x))


def _flag(b: bool) -> str:
    return "pass" if b else "fail"


def report_rows(report: SuiteReport):
    for r in report.rows:
        yield (r.suite, r.name, r.comparison, _num(r.expected), _num(r.observed), _num(r.tolerance), _flag(r.passed))


def gamma_rows(report: SuiteReport):
    for g in report.gamma_rows:
        yield (g.phi_id, g.word_id, g.method, _num(g.value), _num(g.width), str(g.samples), _num(g.closed_form), _flag(g.passed))


def flux_rows(report: SuiteReport):
    for f in report.flux_rows:
        yield (f.word_id, f.curve_id, _num(f.period), _num(f.oracle), _num(f.sigma), _flag(f.passed))


def report_json(report: SuiteReport, source: str) -> dict:
    def dicts(columns, rows):
        return [dict(zip(columns, row)) for row in rows]

    return {
        "schemaVersion": SCHEMA_VERSION,
        "version": report.version,
        "scenario": source,
        "seed": report.seed,
        "workers": report.workers,
        "suites": report.suites,
        "pass": report.passed,
        "rows": dicts(REPORT_COLUMNS, report_rows(report)),
        "gamma": dicts(GAMMA_COLUMNS, gamma_rows(report)),
        "flux": dicts(FLUX_COLUMNS, flux_rows(report)),
    }


def write_reports(report: SuiteReport, out: Path, source: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, columns, rows in (
        ("report.csv", REPORT_COLUMNS, report_rows(report)),
        ("gamma.csv", GAMMA_COLUMNS, gamma_rows(report)),
        ("flux.csv", FLUX_COLUMNS, flux_rows(report)),
    ):
        with open(out / name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            w.writerows(rows)
    (out / "report.json").write_text(json.dumps(report_json(report, source), indent=2, sort_keys=True) + "\n")
    # wall-clock times vary between runs, so they live apart from the reports
    (out / "timings.json").write_text(json.dumps(report.timings, indent=2, sort_keys=True) + "\n")


def summary(report: SuiteReport) -> str:
    lines = []
    for suite in report.suites:
        rows = [r for r in report.rows if r.suite == suite]
        bad = [r for r in rows if not r.passed]
        secs = report.timings.get(suite, 0.0)
        lines.append(f"{suite:16s} {len(rows) - len(bad):4d}/{len(rows):<4d} {_flag(not bad):4s} {secs:8.1f}s")
        for r in bad:
            lines.append(f"    FAIL {r.name}: expected {r.expected:.6g} observed {r.observed:.6g} tolerance {r.tolerance:.3g}")
    lines.append(f"overall: {_flag(report.passed)}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="volflux", description="Run volume flux verification suites.")
    p.add_argument("--scenario", help="scenario JSON file, or the name of a shipped scenario (default: default)")
    p.add_argument("--suite", help="comma-separated suites to run (default: those in the scenario)")
    p.add_argument("--samples", type=int, help="Monte Carlo samples per estimate")
    p.add_argument("--grid", type=int, help="stratified grid resolution")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--workers", type=int, help="Monte Carlo worker processes")
    p.add_argument("--out", default="volflux-report", help="output directory (default: %(default)s)")
    p.add_argument("--tolerance-scale", type=float, help="multiplier on all statistical tolerances")
    p.add_argument("--list", action="store_true", help="list builtin surfaces, curve systems, suites and scenarios")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def load_scenario(arg: str | None):
    if arg is None:
        return scenario_mod.load_default()
    path = Path(arg)
    if not path.exists() and arg in shipped_scenarios():
        text = resources.files("volflux").joinpath(f"scenarios/{arg}.json").read_text()
        return scenario_mod.loads(text, f"{arg}.json")
    return scenario_mod.load(path)


def apply_overrides(sc, args):
    changes = {}
    for flag, key in (("samples", "samples"), ("grid", "grid"), ("seed", "seed"), ("workers", "workers"), ("tolerance_scale", "tolerance_scale")):
        value = getattr(args, flag)
        if value is not None:
            changes[key] = value
    if changes:
        try:
            sc.budget = dataclasses.replace(sc.budget, **changes)
        except ValueError as exc:
            raise ConfigValidationError(str(exc), "budget") from None
        if sc.budget.tolerance_scale <= 0:
            raise ConfigValidationError("must be positive", "--tolerance-scale")
    if args.suite:
        names = [s.strip() for s in args.suite.split(",") if s.strip()]
        for s in names:
            if s not in SUITES:
                raise ConfigValidationError(f"unknown suite {s!r}", "--suite")
        sc.suites = names
    return sc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list:
        sys.stdout.write(list_builtins())
        return EXIT_OK
    try:
        sc = apply_overrides(load_scenario(args.scenario), args)
    except (ConfigParseError, ConfigValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = run_scenario(sc)
    write_reports(report, Path(args.out), Path(sc.source).name)
    print(summary(report))
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
