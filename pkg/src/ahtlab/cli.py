"""Command line: ``ahtlab {project,evolve,kato,taylor,verify} --config FILE``.

Outputs go to ``--out`` (default ``runs/<config name>``): one CSV per table,
a JSON report with the summary, gates, constants and version, and a
``.meta.json`` sidecar holding the only run-dependent fields (timestamp,
timing, platform).  The exit code is 0 iff every gate passed.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import experiments
from .config import ExperimentConfig, dump_config, load_config
from .errors import AhtError
from .experiments import constants_block, measure_constants
from .reports import version_string, write_csv, write_json, write_metadata


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ahtlab", description="AHT equation laboratory")
    p.add_argument("command", choices=sorted(experiments.COMMANDS))
    p.add_argument("--config", type=Path, help="INI experiment file (defaults apply when omitted)")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--seed", type=int, help="override the preset seed")
    p.add_argument("--quiet", action="store_true", help="print nothing on success")
    return p


def execute(command: str, cfg: ExperimentConfig, out_dir: Path) -> experiments.Outcome:
    """Run one command and write its CSVs and JSON report into ``out_dir``."""
    t0 = time.perf_counter()
    outcome = experiments.COMMANDS[command](cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, table in outcome.tables.items():
        path = write_csv(out_dir / f"{command}_{name}.csv", table.columns, table.rows)
        files[name] = path.name
    report = {
        "command": command,
        "experiment": cfg.name,
        "version": version_string(),
        "config": cfg.as_dict(),
        "summary": outcome.summary,
        "gates": outcome.gates,
        "passed": outcome.passed,
        "files": files,
    }
    if "constants" not in outcome.summary and command != "verify":
        grid = cfg.domain.grid()
        consts, prov = measure_constants(grid, cfg.constants)
        report["constants"] = constants_block(consts, prov, grid)
    elif "constants" in outcome.summary:
        report["constants"] = outcome.summary["constants"]
    else:
        report["constants"] = {k: v["constants"] for k, v in outcome.summary["searches"].items()}
    write_json(out_dir / f"{command}.json", report)
    write_metadata(out_dir, command, dump_config(cfg), time.perf_counter() - t0)
    return outcome


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        out_dir = args.out or Path("runs") / cfg.name
        outcome = execute(args.command, cfg, out_dir)
    except AhtError as exc:
        print(f"ahtlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if not args.quiet or not outcome.passed:
        for name, ok in outcome.gates.items():
            print(f"{'PASS' if ok else 'FAIL'}  {args.command}.{name}")
        print(f"results in {out_dir}")
    return 0 if outcome.passed else 1


if __name__ == "__main__":
    sys.exit(main())
