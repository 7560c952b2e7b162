"""Command-line batch driver.

Exit status: 0 success, 1 configuration/usage error, 2 runtime or model
error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__, experiments
from .plotting import KINDS, PlotDataError, emit_plotdata
from .scenario import ScenarioError, load_scenario

log = logging.getLogger("isac_handover")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="isac-ho", description=__doc__.splitlines()[0])
    p.add_argument("--experiment", help="one of: " + ", ".join(experiments.names()))
    p.add_argument("--config", type=Path, help="TOML scenario file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="scenario override, repeatable; beats the config file")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--plots", action="store_true", help="also render SVG plots of the CSVs")
    p.add_argument("--trials", type=int, help="Monte-Carlo / oracle trials per point")
    p.add_argument("--perturb", type=float, default=0.0,
                   help="mc-validate only: add this to every analytic probability")
    p.add_argument("--render", type=Path, metavar="CSV", help="render an existing CSV and exit")
    p.add_argument("--kind", choices=KINDS, default="lines")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=__version__)
    return p


def _write(tables, out_dir: Path, comment: str, plots: bool) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, table in tables.items():
        path = out_dir / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            table.write(fh, comment)
        written.append(path)
        if plots and table.plot:
            written.append(emit_plotdata(path, table.plot))
    return written


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"isac-ho: usage error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")

    if args.render is not None:
        try:
            print(emit_plotdata(args.render, args.kind))
        except (PlotDataError, OSError) as exc:
            print(f"isac-ho: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK

    if args.experiment not in experiments.EXPERIMENTS:
        print(f"isac-ho: usage error: unknown experiment {args.experiment!r}; "
              f"choose from {', '.join(experiments.names())}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        scenario = load_scenario(args.config, args.overrides)
    except (ScenarioError, OSError) as exc:
        print(f"isac-ho: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    ctx = experiments.Context(scenario, args.seed, max(1, args.threads), args.trials, args.perturb)
    comment = (f"experiment={args.experiment} scenario={scenario.digest()} "
               f"seed={args.seed} version={__version__}")
    status = EXIT_OK
    try:
        tables = experiments.EXPERIMENTS[args.experiment](ctx)
    except experiments.ValidationFailure as exc:
        log.error("validation failed: %s", exc)
        tables, status = exc.tables, EXIT_VALIDATION
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"isac-ho: {args.experiment} failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in _write(tables, args.out, comment, args.plots):
        log.info("wrote %s", path)
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
