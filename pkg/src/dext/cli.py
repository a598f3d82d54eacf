import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .errors import DextError, ScenarioError
from .pipeline import dump_matrices, run_scenario, sweep_point
from .report import RunReport, write_report, write_sweep_table
from .scenario import Scenario, load_scenario, load_sweep
from .settings import LOG_FORMAT, LOG_LEVEL, load_tolerances

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2


def _configure_logging(level: str) -> None:
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT)
    logging.getLogger("dext.numerics").setLevel(logging.WARNING)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dext",
        description="Classify degenerate operators -(c u')' and verify their "
        "extensions and semigroups numerically.",
    )
    parser.add_argument(
        "--log-level",
        default=LOG_LEVEL,
        help="Logging level (default: DEXT_LOG_LEVEL or INFO)",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p: argparse.ArgumentParser, many: bool = False) -> None:
        p.add_argument(
            "--scenario",
            required=True,
            action="append" if many else "store",
            help="Scenario TOML file" + (" (repeatable)" if many else ""),
        )
        p.add_argument(
            "--out",
            default=os.environ.get("DEXT_OUT_DIR"),
            help="Output directory (default: DEXT_OUT_DIR)",
        )
        p.add_argument(
            "--tol-overrides", default=None, help="TOML table of tolerance overrides"
        )

    p_classify = sub.add_parser("classify", help="Classify only and print the verdict")
    common(p_classify)

    p_run = sub.add_parser("run", help="Run every analysis the scenario requests")
    common(p_run, many=True)
    p_run.add_argument(
        "--seed", type=int, default=None, help="Overrides the scenario seed"
    )
    p_run.add_argument(
        "--threads", type=int, default=1, help="Scenarios run in parallel"
    )

    p_sweep = sub.add_parser("sweep", help="Run a parameter grid over a base scenario")
    common(p_sweep)
    p_sweep.add_argument(
        "--threads", type=int, default=4, help="Grid points in parallel"
    )

    p_dump = sub.add_parser("dump-matrix", help="Write H as (row, col, value) CSV")
    common(p_dump)
    return parser


def _out_dir(path: str | None) -> Path | None:
    if path is None:
        return None
    out = Path(path)
    os.makedirs(out, exist_ok=True)
    return out


def _run_one(scenario: Scenario, tol, out: Path | None, seed: int | None) -> RunReport:
    target = None
    if out is not None:
        target = out / scenario.name.replace(" ", "_")
        os.makedirs(target, exist_ok=True)
    report = run_scenario(scenario, tol, target, seed)
    if target is not None:
        write_report(report, target / "report.json")
    return report


def cmd_classify(args, tol) -> int:
    scenario = load_scenario(args.scenario)
    out = _out_dir(args.out)
    report = run_scenario(scenario, tol, out, analyses=["classify"])
    if out is not None:
        write_report(report, out / "report.json")
    if report.classification is not None:
        summary = {
            k: report.classification[k]
            for k in ("geometry", "case", "deficiency_indices", "unique_submarkovian")
        }
        print(json.dumps(summary, indent=2, ensure_ascii=False))
    return EXIT_OK if report.passed else EXIT_ASSERTION


def cmd_run(args, tol) -> int:
    scenarios = [load_scenario(path) for path in args.scenario]
    out = _out_dir(args.out)
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names) and out is not None:
        raise ScenarioError(f"scenario names must be unique within a run: {names}")

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        reports = list(
            pool.map(lambda s: _run_one(s, tol, out, args.seed), scenarios)
        )

    status = EXIT_OK
    for scenario, report in zip(scenarios, reports):
        failures = report.failures()
        if failures:
            status = EXIT_ASSERTION
            logger.error(f"Scenario '{scenario.name}' failed: {'; '.join(failures)}")
        else:
            logger.info(f"Scenario '{scenario.name}' passed")
    return status


def cmd_sweep(args, tol) -> int:
    _, points = load_sweep(args.scenario)
    out = _out_dir(args.out)

    def work(point) -> dict:
        row = {
            "exponent_left": point.exponent_left,
            "exponent_right": point.exponent_right,
            "robin_alpha": point.robin_alpha,
            "robin_beta": point.robin_beta,
            "robin_ratio": point.robin_ratio,
        }
        row.update(sweep_point(point.scenario, tol))
        return row

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        rows = list(pool.map(work, points))

    if out is not None:
        write_sweep_table(rows, out / "sweep.csv")
    else:
        for row in rows:
            print(json.dumps(row, ensure_ascii=False))
    failed = [row for row in rows if row.get("error")]
    if failed:
        logger.error(f"{len(failed)} of {len(rows)} sweep point(s) failed")
        return EXIT_ASSERTION
    return EXIT_OK


def cmd_dump_matrix(args, tol) -> int:
    scenario = load_scenario(args.scenario)
    out = _out_dir(args.out) or Path(".")
    paths = dump_matrices(scenario, out, tol)
    logger.info(f"Wrote {len(paths)} matrix file(s) to {out}")
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "dump-matrix": cmd_dump_matrix,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.log_level)

    try:
        tol = load_tolerances(args.tol_overrides)
        return COMMANDS[args.verb](args, tol)
    except ScenarioError as e:
        logger.error(f"Configuration error: {e.message}")
        return EXIT_CONFIG
    except DextError as e:
        logger.error(f"{args.verb} failed: {e.message}")
        return EXIT_ASSERTION


if __name__ == "__main__":
    sys.exit(main())
