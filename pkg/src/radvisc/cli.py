"""Command line entry point: ``radvisc run <config>`` and ``radvisc sweep <config>``.

Exit status is 0 when every criterion passes, 2 when a criterion fails
and 1 on configuration, schedule or solver errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io as rio
from .config import load
from .errors import RadviscError
from .pipeline import sweep_report

log = logging.getLogger("radvisc")

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _verdict(report):
    for c in report.criteria:
        log.info("%s %s: %s", "PASS" if c.passed else "FAIL", c.name, c.detail)
    for e, msg in report.failures.items():
        log.error("eps=%g failed: %s", e, msg)
    return EXIT_PASS if report.passed else EXIT_FAIL


def run_single(config_path, out=None, seed=0):
    """Solve and evaluate the first configured ``eps``; write trajectory, report and manifest."""
    cfg = load(config_path)
    cfg = cfg.with_eps(cfg.schedule.eps[:1])
    out_dir = Path(out or cfg.output)
    report, levels = sweep_report(cfg, seed=seed, jobs=1, keep_trajectory=True)
    lv = levels[0]
    if lv.status != "ok":
        rio.write_atomic(out_dir / "manifest.json", rio.json_text(rio.manifest("run", cfg, levels, report, seed)))
        raise RadviscError(lv.error)
    rio.write_atomic(out_dir / "trajectory.csv", rio.trajectory_csv(lv.trajectory))
    rio.write_atomic(out_dir / "report.csv", rio.report_csv(report))
    rio.write_atomic(out_dir / "criteria.csv", rio.criteria_csv(report.criteria))
    extra = {"trajectory": rio.trajectory_summary(lv.trajectory)}
    rio.write_atomic(out_dir / "manifest.json", rio.json_text(rio.manifest("run", cfg, levels, report, seed, extra)))
    return report


def run_sweep(config_path, out=None, jobs=1, seed=0):
    """Evaluate every configured ``eps`` (in parallel when ``jobs > 1``) and write the sweep artifacts."""
    cfg = load(config_path)
    out_dir = Path(out or cfg.output)
    report, levels = sweep_report(cfg, seed=seed, jobs=jobs)
    rio.write_atomic(out_dir / "report.csv", rio.report_csv(report))
    rio.write_atomic(out_dir / "criteria.csv", rio.criteria_csv(report.criteria))
    rio.write_atomic(out_dir / "summary.json", rio.json_text(rio.manifest("sweep", cfg, levels, report, seed)))
    rio.write_plots(report, out_dir / "plots")
    return report


def build_parser():
    p = argparse.ArgumentParser(prog="radvisc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "single eps (the first listed)"), ("sweep", "all listed eps")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("config", help="YAML configuration file")
        s.add_argument("--out", help="output directory (overrides the config)")
        s.add_argument("--seed", type=int, default=0, help="seed for randomized test functions")
        if name == "sweep":
            s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    if args.seed < 0 or args.seed >= 2**64:
        log.error("--seed must be an unsigned 64-bit integer")
        return EXIT_ERROR
    try:
        if args.command == "run":
            report = run_single(args.config, args.out, args.seed)
        else:
            if args.jobs < 1:
                log.error("--jobs must be at least 1")
                return EXIT_ERROR
            report = run_sweep(args.config, args.out, args.jobs, args.seed)
    except (RadviscError, OSError) as err:
        log.error("%s", err)
        return EXIT_ERROR
    return _verdict(report)


if __name__ == "__main__":
    sys.exit(main())
