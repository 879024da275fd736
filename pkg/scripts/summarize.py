"""Print the entropy / decoherence trend table from decoherence-report JSON files.

Also writes the matching entropy-sweep CSV next to each JSON, so one run of
``run_sweeps.py`` gives both formats without simulating twice.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from bakerhist.cli import format_csv
from bakerhist.experiments import SWEEP_COLUMNS


def rows_of(doc: dict) -> list[dict]:
    rows = []
    for point in doc["points"]:
        for rep in point["reports"]:
            rows.append({
                "l": point["l"],
                "N": point["N"],
                "k": rep["k"],
                "H_measured": rep["entropy_bits"],
                "H_predicted": rep["H_predicted"],
                "support_size": rep["support_size"],
                "allowed_count": rep["allowed_count"],
                "epsilon": rep["epsilon"],
                "pruned_mass": rep["pruned_mass"],
                "runtime_ms": rep["runtime_ms"],
                "disallowed_mass": rep["shift_check"]["disallowed_mass"],
            })
    return rows


def show(path: Path) -> None:
    doc = json.loads(path.read_text(encoding="utf-8"))
    rows = rows_of(doc)
    path.with_suffix(".csv").write_text(format_csv(SWEEP_COLUMNS, rows), encoding="utf-8")
    print(f"== {path.stem} (s={doc['config']['s']}, m={doc['config']['m']}, x={doc['config']['x']})")
    print(f"{'l':>3} {'k':>2} {'H':>8} {'pred':>4} {'|H-pred|':>9} {'support':>8} {'allowed':>8} {'eps':>10} {'disallowed':>11} {'pruned':>9}")
    for r in rows:
        print(f"{r['l']:>3} {r['k']:>2} {r['H_measured']:>8.4f} {r['H_predicted']:>4} {abs(r['H_measured'] - r['H_predicted']):>9.4f} "
              f"{r['support_size']:>8} {r['allowed_count']:>8} {r['epsilon']:>10.3e} {r['disallowed_mass']:>11.3e} {r['pruned_mass']:>9.2e}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("reports", nargs="*", type=Path)
    ap.add_argument("--dir", type=Path, default=Path(__file__).resolve().parents[1] / "results")
    args = ap.parse_args()
    paths = args.reports or sorted(p for p in args.dir.glob("*.json"))
    for p in paths:
        show(p)


if __name__ == "__main__":
    main()
