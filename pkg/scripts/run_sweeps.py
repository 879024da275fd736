"""Run every shipped sweep config and write CSV + JSON results.

    python3 scripts/run_sweeps.py [--out results] [--threads 1] [config ...]
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from bakerhist.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]
DEFAULT_CONFIGS = ("local_sweep", "two_scale", "three_scale")


def run(name: str, out: Path, threads: int) -> int:
    config = ROOT / "configs" / f"{name}.json"
    t0 = time.perf_counter()
    status = cli_main(["decoherence-report", "--config", str(config), "--threads", str(threads),
                       "--out", str(out / f"{name}.json")])
    if status == 0:
        status = cli_main(["predict", "--config", str(config), "--out", str(out / f"{name}_predict.csv")])
    print(f"{name}: exit {status} in {time.perf_counter() - t0:.0f}s", file=sys.stderr)
    return status


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("configs", nargs="*", default=list(DEFAULT_CONFIGS))
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return max(run(name, out, args.threads) for name in args.configs)


if __name__ == "__main__":
    sys.exit(main())
