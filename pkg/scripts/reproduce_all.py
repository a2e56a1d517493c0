"""Run every config in ``configs/`` through the CLI runner.

Usage: python scripts/reproduce_all.py [output_dir] [--workers N]
"""

import argparse
import sys
from pathlib import Path

from ckzgate.cli import main

ROOT = Path(__file__).resolve().parents[1]


def run(out: Path, workers: int) -> int:
    status = 0
    for cfg in sorted((ROOT / "configs").glob("*.yaml")):
        print(f"== {cfg.name}", flush=True)
        code = main(["run", str(cfg), "-o", str(out / cfg.stem), "--workers", str(workers)])
        status = max(status, code)
    return status


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out", nargs="?", default="runs")
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()
    sys.exit(run(Path(args.out), args.workers))
