"""Command-line driver.

    msbp <subcommand> <config> [--seed S] [--threads T] [--out DIR] [--check]

Subcommands: simulate, scaling-limit, martingale, extinction, coupling,
generator-check.  The subcommand must match experiment.kind in the config.
Exit codes: 0 success, 2 configuration/validation error, 3 a --check
assertion failed.
"""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENT_KEYS, load_config
from .errors import MsbpError
from .experiments import run_experiment
from .reporting import (build_id, run_directory, write_csv, write_json,
                        write_plotdata)

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="msbp",
        description="mixed-state branching process experiments")
    sub = p.add_subparsers(dest="command", required=True)
    for kind in sorted(EXPERIMENT_KEYS):
        q = sub.add_parser(kind, help=f"run a {kind} experiment")
        q.add_argument("config", help="YAML or JSON experiment config")
        q.add_argument("--seed", type=int, default=None,
                       help="override scheme.seed")
        q.add_argument("--threads", type=int, default=1,
                       help="worker threads (results identical for any value)")
        q.add_argument("--out", default=None,
                       help="run directory (default: timestamped)")
        q.add_argument("--check", action="store_true",
                       help="evaluate acceptance checks; exit 3 on failure")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.kind != args.command:
            raise MsbpError(
                f"config declares experiment.kind={cfg.kind!r}; "
                f"it must match the subcommand {args.command!r}")
        seed = cfg.scheme.seed if args.seed is None else args.seed
        threads = max(1, args.threads)
    except (MsbpError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = run_experiment(cfg, seed, threads)

    run_dir = run_directory(cfg.output_dir, cfg.kind, args.out)
    echo = cfg.canonical()
    write_json(run_dir / "config-echo.json", echo)
    results = {
        "provenance": {"seed": seed, "build": build_id(),
                       "config_sha256": cfg.sha256(),
                       "threads_invariant": True},
        **out["results"],
    }
    if args.check:
        results["checks"] = out["checks"]
    write_json(run_dir / "results.json", results)
    if "csv" in cfg.formats:
        for stem, rows in out["plotdata"].items():
            write_plotdata(run_dir / f"{stem}.csv", rows)
        for name, (header, rows) in out["paths"].items():
            write_csv(run_dir / name, header, rows)
    if "png" in cfg.formats:
        from . import plots
        plots.render(out["figure"], out["results"],
                     run_dir / f"{out['figure']}.png")

    failures = [c for c in out["checks"] if not c["passed"]]
    for c in out["checks"]:
        status = "pass" if c["passed"] else "FAIL"
        print(f"[{status}] {c['name']}: {c['detail']}")
    print(f"artifacts: {run_dir}")
    if args.check and failures:
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
