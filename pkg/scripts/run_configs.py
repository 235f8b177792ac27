"""Run every experiment in configs/ through the command line and summarise the gates.

    python3 scripts/run_configs.py [--out runs]
"""
import argparse
import sys
import time
from pathlib import Path

from ahtlab.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]

RUNS = [
    ("project", "torus_project"),
    ("project", "disk_project"),
    ("project", "annulus_project"),
    ("evolve", "disk_rotation"),
    ("evolve", "disk_dissipation_16"),
    ("evolve", "disk_dissipation_32"),
    ("evolve", "disk_dissipation_64"),
    ("evolve", "torus_drift"),
    ("evolve", "torus_ipm"),
    ("evolve", "torus_steady"),
    ("kato", "torus_kato"),
    ("kato", "disk_kato"),
    ("kato", "torus_steady"),
    ("taylor", "torus_taylor"),
    ("verify", "verify"),
]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=ROOT / "runs")
    args = ap.parse_args()
    failed = []
    for command, name in RUNS:
        t0 = time.perf_counter()
        rc = cli_main([command, "--config", str(ROOT / "configs" / f"{name}.ini"), "--out", str(args.out / name), "--quiet"])
        status = "ok" if rc == 0 else f"exit {rc}"
        print(f"{command:8s} {name:22s} {status:8s} {time.perf_counter() - t0:6.1f} s", flush=True)
        if rc:
            failed.append(name)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
