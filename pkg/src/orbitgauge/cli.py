"""Command-line front end.

Exit codes: 0 every declared tolerance passed, 1 some tolerance failed,
2 usage or config error, 3 precision exhausted.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .dyadic import DomainError, PrecisionExhausted
from .experiments import ConfigError, ExperimentConfig, RunReport, run
from .systems import ParameterError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_PRECISION = 0, 1, 2, 3

# subcommand -> (experiment kind, table echoed to stdout)
SUBCOMMANDS = {
    "orbit-complexity": ("orbit_complexity", "indicators"),
    "gen-entropy": ("gen_entropy", "counts"),
    "track": ("track", "track"),
    "reconstruct-rotation": ("rotation_reconstruction", None),
    "experiment": (None, None),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="orbitgauge", description="Orbit complexity and generalized entropy experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("-c", "--config", help="config file ([section] / key = value)")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
        p.add_argument("-o", "--output", help="artifact root (default: experiment.output)")
        p.add_argument("--dry-run", action="store_true", help="print the resolved config and stop")
        p.add_argument("-q", "--quiet", action="store_true", help="only the final verdict line")
    p = sub.add_parser("report")
    p.add_argument("directory")
    p.add_argument("--dry-run", action="store_true")
    return ap


def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    return cfg.with_overrides(args.overrides)


def _echo_table(rep: RunReport, name: str | None, out):
    if not name or name not in rep.tables:
        return
    wr = csv.writer(out, lineterminator="\n")
    for row in rep.tables[name]:
        wr.writerow([r if isinstance(r, str) else _plain(r) for r in row])


def _plain(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def cmd_run(args, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    kind, table = SUBCOMMANDS[args.command]
    cfg = _load(args)
    kind = kind or cfg.kind()
    if args.dry_run:
        out.write(f"# {args.command} ({kind}) config {cfg.config_hash()}\n")
        out.write(cfg.resolved_text())
        return EXIT_OK
    rep = run(cfg, kind)
    root = args.output or cfg.get("experiment", "output")
    path = rep.write(root)
    if args.quiet:
        out.write(rep.summary().splitlines()[-1] + "\n")
    else:
        _echo_table(rep, table, out)
        out.write(rep.summary())
        out.write(f"artifacts: {path}\n")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_orbit_complexity(args, **kw) -> int:
    return cmd_run(args, **kw)


cmd_gen_entropy = cmd_track = cmd_reconstruct = cmd_orbit_complexity


def cmd_report(args, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    root = Path(args.directory)
    files = sorted(root.rglob("checks.csv")) if root.is_dir() else []
    if not files:
        err.write(f"no artifacts in {root}\n")
        return EXIT_USAGE
    if args.dry_run:
        out.write("".join(f"{f.parent}\n" for f in files))
        return EXIT_OK
    lines, failed = [], 0
    for f in files:
        run_name = f.parent.name
        with f.open() as fh:
            rows = list(csv.DictReader(fh))
        bad = [r for r in rows if r["status"] != "PASS"]
        failed += bool(bad)
        for r in rows:
            lines.append(f"{r['status']} {run_name} {r['name']}: {r['value']} ({r['bound']})")
        lines.append(f"{'FAIL' if bad else 'PASS'} {run_name}")
    lines.append(f"{'FAIL' if failed else 'PASS'} {len(files) - failed}/{len(files)} runs passed")
    text = "\n".join(lines) + "\n"
    (root / "report_summary.txt").write_text(text)
    out.write(text)
    return EXIT_FAIL if failed else EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args)
        return cmd_run(args)
    except PrecisionExhausted as e:
        print(f"precision exhausted: {e}", file=sys.stderr)
        return EXIT_PRECISION
    except (ConfigError, ParameterError, DomainError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
