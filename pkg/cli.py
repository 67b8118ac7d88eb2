"""Command-line driver: solve | ladder | shift | dmax-scan, and runs for saved results"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from typing import Dict, List, Optional, Tuple

from analysis import (SequenceResult, convergence_table, dmax_scan, improved_relativistic_energy,
                      run_ladder)
from benchmarks import get_benchmark
from config import APP_CONFIG, EXPORT_CONFIG, EXPORTS_DIR, load_env_config
from errors import ConfigError, MinmaxError
from export_excel import generate_excel
from export_pdf import generate_pdf
from export_table import Report, generate_csv, generate_json
from export_zip import generate_zip
from file_manager import (delete_run, generate_run_id, get_config_path, list_all_runs, load_result,
                          save_run)
from run_config import COMMANDS, RunConfig, format_config, load_config, validate_config

logger = logging.getLogger(__name__)


def render(report: Report, fmt: str) -> bytes:
    """Report bytes in one export format"""
    if fmt == "csv":
        return generate_csv(report).encode("utf-8")
    if fmt == "json":
        return generate_json(report).encode("utf-8")
    if fmt == "xlsx":
        return generate_excel(report)
    if fmt == "pdf":
        return generate_pdf(report)
    if fmt == "zip":
        return generate_zip({ext: render(report, ext) for ext in ("csv", "json", "xlsx", "pdf")})
    raise ConfigError("format", f"must be one of {', '.join(EXPORT_CONFIG['formats'])}")


def _shift_extras(config: RunConfig, result: SequenceResult) -> None:
    """Nonrelativistic ladder at nrel_nu whose limit, plus the shift, improves E_rel"""
    nu = config.nrel_nu
    D_max = config.nrel_D_max if config.nrel_D_max is not None else config.D_max
    logger.info(f"nonrelativistic ladder for the improved energy: nu={nu} D_max={D_max}")
    nrel = run_ladder(config.system().nonrelativistic(), nu, D_max, config.levels(),
                      config.p, config.solver_config(), config.workers)
    result.extras[f"E_nrel_nu{nu}_last"] = nrel.last_value("E_nrel")
    result.extras[f"E_nrel_nu{nu}_extrap"] = nrel.E_extrap_digits.get("E_nrel")
    if nrel.E_extrap_digits.get("E_nrel") and result.E_extrap_digits.get("shift"):
        improved = improved_relativistic_energy(nrel.E_extrap_digits["E_nrel"],
                                                result.E_extrap_digits["shift"])
        result.extras["E_rel_improved"] = str(improved)
    if nrel.failures:
        result.extras["failed_ladders"] = [f"nu={nu} nonrelativistic m={r.m}: {r.error}"
                                           for r in nrel.failures]


def execute(config: RunConfig) -> Report:
    """Run the configured computation and return its report object"""
    system = config.system()
    cfg = config.solver_config()
    levels = config.levels()

    if config.command == "dmax-scan":
        return dmax_scan(system, config.nu, config.D_max_list, levels, config.p, cfg,
                         config.workers)

    reference = None
    if config.benchmark is not None:
        reference = dict(get_benchmark(config.benchmark).extrapolated)
    result = run_ladder(system, config.nu, config.D_max, levels, config.p, cfg,
                        config.workers, reference=reference)
    if config.command == "shift" and config.nrel_nu is not None:
        _shift_extras(config, result)
    return result


def write_error_table(report: Report, config: RunConfig, path: str) -> None:
    """Per-rung |E(N) - E_ref| against the benchmark limit, else the run's own extrapolation"""
    if not isinstance(report, SequenceResult):
        logger.warning("error tables are only written for ladders")
        return
    reference = dict(get_benchmark(config.benchmark).extrapolated) if config.benchmark else None
    table = convergence_table(report, reference)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    table.to_csv(path, index=False, float_format=EXPORT_CONFIG["float_format"], na_rep="nan",
                 lineterminator="\n")
    logger.info(f"error table written to {path}")


def run(config: RunConfig, save: bool = False,
        errors_path: Optional[str] = None) -> Tuple[int, Dict[str, bytes]]:
    """Execute, render the configured format and write it to config.out if set.

    With save=True the config and JSON result are also kept under the runs directory;
    errors_path additionally receives the convergence table of a ladder.

    Returns the exit status (nonzero when any rung failed) and the rendered files.
    """
    try:
        report = execute(config)
    except MinmaxError as e:
        logger.error(f"{config.command} failed (nu={config.nu}, D_max={config.D_max}, "
                     f"m={config.levels()}): {e}")
        return 1, {}

    files = {config.format: render(report, config.format)}
    if config.out:
        os.makedirs(os.path.dirname(os.path.abspath(config.out)), exist_ok=True)
        with open(config.out, "wb") as f:
            f.write(files[config.format])
        logger.info(f"report written to {config.out}")
    if errors_path:
        write_error_table(report, config, errors_path)

    if save:
        result = json.loads(generate_json(report))
        save_run(generate_run_id(), format_config(config), result, files[config.format],
                 f"report.{config.format}")

    status = 0 if report.succeeded else 1
    if status:
        logger.error(f"{config.command} finished with failed rungs")
    return status, files


def manage_runs(show: Optional[str] = None, delete: Optional[str] = None) -> int:
    """List saved runs, print one result as JSON, or delete one"""
    run_id = delete if delete is not None else show
    if run_id is not None:
        result = load_result(run_id)
        if result is None:
            logger.error(f"no saved run {run_id}")
            return 1
        if delete is not None:
            delete_run(run_id)
            logger.info(f"deleted run {run_id}")
        else:
            sys.stdout.write(json.dumps(result, indent=EXPORT_CONFIG["json_indent"]) + "\n")
        return 0

    for run_id in list_all_runs():
        command = "?"
        path = get_config_path(run_id)
        if path:
            try:
                command = load_config(path).command
            except (MinmaxError, OSError) as e:
                logger.warning(f"run {run_id}: unreadable config ({e})")
        rungs = (load_result(run_id) or {}).get("rungs", [])
        sys.stdout.write(f"{run_id}\t{command}\t{len(rungs)} rungs\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Minmax FEM solver for the two-center Dirac equation",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("command", choices=COMMANDS + ("runs",),
                        help="computation to run, or runs to manage saved runs")
    parser.add_argument("--config", default=None, help="flat key = value run config")
    parser.add_argument("--out", default=None, help="report path (stdout for csv/json if omitted)")
    parser.add_argument("--format", default=None, choices=EXPORT_CONFIG["formats"],
                        help="report format, overrides the config")
    parser.add_argument("--workers", type=int, default=None,
                        help="concurrent rungs, overrides the config")
    parser.add_argument("--log-level", default=APP_CONFIG["log_level"],
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--save-run", action="store_true",
                        help="also keep config and JSON result under the runs directory")
    parser.add_argument("--errors", default=None,
                        help="also write the per-rung error table |E(N) - E_ref| as CSV")
    parser.add_argument("--show", default=None, metavar="RUN_ID",
                        help="runs: print the saved JSON result of one run")
    parser.add_argument("--delete", default=None, metavar="RUN_ID",
                        help="runs: delete one saved run")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_env_config()
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format=APP_CONFIG["log_format"])

    if args.command == "runs":
        return manage_runs(args.show, args.delete)
    if args.config is None:
        parser.error(f"{args.command} needs --config")

    try:
        config = load_config(args.config)
    except (MinmaxError, OSError) as e:
        logger.error(f"cannot load {args.config}: {e}")
        return 1

    overrides = {"command": args.command}
    if args.format is not None:
        overrides["format"] = args.format
    if args.out is not None:
        overrides["out"] = args.out
    if args.workers is not None:
        overrides["workers"] = args.workers
    try:
        config = validate_config(replace(config, **overrides))
    except MinmaxError as e:
        logger.error(f"invalid option: {e}")
        return 1

    if config.out is None and config.format not in ("csv", "json"):
        config = replace(config, out=str(EXPORTS_DIR / f"minmax_{config.command}.{config.format}"))

    status, files = run(config, save=args.save_run, errors_path=args.errors)
    if config.out is None and files:
        sys.stdout.write(files[config.format].decode("utf-8"))

    return status


if __name__ == "__main__":
    sys.exit(main())
