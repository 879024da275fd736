"""Command-line entry point: validate | entropy-sweep | decoherence-report | predict | diagram.

Exit codes: 0 ok, 2 invalid config, 3 capacity, 4 numerical invariant violated.
Errors are also reported as a JSON document on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import warnings
from pathlib import Path
from typing import Iterable, Sequence

from .analytic import enumerate_allowed
from .bakermap import BakerParams, verify_unitarity
from .bitcore import render_diagram
from .errors import (
    BakerHistError,
    CapacityError,
    FrameMismatchError,
    InvariantViolation,
    NegativeProbabilityError,
    SpecError,
)
from .experiments import SWEEP_COLUMNS, ExperimentConfig, predict_quiet, run_sweep
from .hilbert import N_DENSE_MAX
from .partitions import build_partition, verify_partition
from .refcheck import ORACLE_N_MAX, compare_engines

log = logging.getLogger("bakerhist")

SCHEMA_VERSION = "1"
PREDICT_COLUMNS = ("k", "regime", "allowed_count", "probability_each", "entropy_bits", "unsupported")
FULL_PROBABILITY_LIMIT = 4096
ORACLE_TOL = 1e-10
UNITARITY_TOL = 1e-12

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY, EXIT_INVARIANT = 0, 2, 3, 4


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, CapacityError):
        return EXIT_CAPACITY
    if isinstance(exc, (InvariantViolation, NegativeProbabilityError)):
        return EXIT_INVARIANT
    if isinstance(exc, (SpecError, FrameMismatchError)):
        return EXIT_CONFIG
    return EXIT_INVARIANT


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "%.12g" % v
    return str(v)


def format_csv(columns: Sequence[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def format_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False, default=str) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    log.info("wrote %s", path)


# --- commands ---------------------------------------------------------------


def cmd_validate(cfg: ExperimentConfig) -> tuple[int, dict]:
    specs = cfg.validate()
    checks = []
    status = EXIT_OK
    for spec in specs:
        entry: dict = {"spec": spec.as_dict()}
        part = verify_partition(build_partition(spec), seed=cfg.sample_seed)
        entry["partition"] = {"ok": part.ok, "checked": part.checked, "sampled": part.sampled,
                              "violations": part.violations, "first_offending": part.first_offending}
        if not part.ok:
            status = EXIT_INVARIANT
        if cfg.dense_checks:
            if spec.N > N_DENSE_MAX:
                raise CapacityError(f"dense checks refused for N={spec.N} > {N_DENSE_MAX}", N=spec.N)
            u = verify_unitarity(BakerParams(spec.N, spec.n), tol=UNITARITY_TOL)
            entry["unitarity"] = {"ok": u.ok, "max_deviation": u.max_deviation}
            if not u.ok:
                status = EXIT_INVARIANT
            if spec.N <= ORACLE_N_MAX:
                k = min(cfg.k_max, 2)
                cmp = compare_engines(spec, cfg.initial_label(spec), BakerParams(spec.N, spec.n), k, prune_tol=0.0)
                entry["oracle"] = {"k": k, "max_abs_dev": cmp.max_abs_dev, "entries": cmp.entries,
                                   "ok": cmp.max_abs_dev <= ORACLE_TOL}
                if cmp.max_abs_dev > ORACLE_TOL:
                    status = EXIT_INVARIANT
        checks.append(entry)
    return status, {"schema_version": SCHEMA_VERSION, "ok": status == EXIT_OK, "checks": checks}


def cmd_entropy_sweep(cfg: ExperimentConfig) -> str:
    rows = [row for point in run_sweep(cfg) for row in point.rows]
    return format_csv(SWEEP_COLUMNS, rows)


def _report_doc(point, k: int) -> dict:
    report, check, row = point.reports[k], point.checks[k], point.rows[k]
    complete = len(report.probabilities) <= FULL_PROBABILITY_LIMIT
    support = set(report.support)
    listed = report.probabilities if complete else {h: p for h, p in report.probabilities.items() if h in support}
    return {
        "k": k,
        "threshold": report.threshold,
        "entropy_bits": report.entropy_bits,
        "H_predicted": row["H_predicted"],
        "epsilon": report.epsilon,
        "epsilon_defined": report.epsilon_defined,
        "epsilon_mode": report.epsilon_mode,
        "pruned_mass": report.pruned_mass,
        "total_probability": report.total_probability,
        "support_size": report.support_size,
        "allowed_count": row["allowed_count"],
        "shift_check": {
            "allowed_hits": check.allowed_hits,
            "disallowed_hits": check.disallowed_hits,
            "allowed_mass": check.allowed_mass,
            "disallowed_mass": check.disallowed_mass,
            "classified": check.classified,
        },
        "probabilities_complete": complete,
        "probabilities": {str(h): p for h, p in listed.items()},
        "support": [str(h) for h in report.support],
        "runtime_ms": report.runtime_ms,
    }


def cmd_decoherence_report(cfg: ExperimentConfig) -> dict:
    points = []
    for point in run_sweep(cfg):
        points.append({
            "l": point.spec.l,
            "N": point.spec.N,
            "n": point.spec.n,
            "spec": point.spec.as_dict(),
            "x": str(point.x),
            "reports": [_report_doc(point, k) for k in range(cfg.k_max + 1)],
        })
    config = cfg.as_dict()
    config.pop("out", None)
    config.pop("threads", None)  # results do not depend on it
    return {"schema_version": SCHEMA_VERSION, "config": config, "points": points}


def cmd_predict(cfg: ExperimentConfig) -> str:
    spec = cfg.base_spec
    rows = []
    for k in range(cfg.k_max + 1):
        p = predict_quiet(spec, k)
        rows.append({
            "k": k,
            "regime": p.regime,
            "allowed_count": p.allowed_count,
            "probability_each": float(p.probability_each),
            "entropy_bits": p.entropy_bits,
            "unsupported": "" if p.supported else "UNSUPPORTED_REGIME",
        })
    return format_csv(PREDICT_COLUMNS, rows)


def cmd_diagram(cfg: ExperimentConfig, history_k: int = 0, show_dot: bool = True) -> str:
    spec = cfg.base_spec
    x = cfg.initial_label(spec)
    lines = [render_diagram(spec, x, show_dot=show_dot)]
    if history_k > 0:
        h = enumerate_allowed(spec, x, history_k)[0]
        lines.append(render_diagram(spec, h, show_dot=show_dot))
    return "\n".join(lines) + "\n"


# --- argument handling ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bakerhist", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("validate", "entropy-sweep", "decoherence-report", "predict", "diagram"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", help="output file (default: config 'out', else stdout)")
        p.add_argument("--threads", type=int)
        p.add_argument("--prune-tol", type=float)
        p.add_argument("--expand-tol", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--k-max", type=int)
        p.add_argument("--x", help="initial cell label, e.g. 011,01")
        p.add_argument("--allow-deep-k", action="store_true", default=None)
        p.add_argument("--no-dense-checks", dest="dense_checks", action="store_false", default=None)
        if name == "diagram":
            p.add_argument("--history-k", type=int, default=0,
                           help="also draw the first allowed history of this length")
            p.add_argument("--no-dot", action="store_true")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    return cfg.with_overrides(
        threads=args.threads,
        prune_tol=args.prune_tol,
        expand_tol=args.expand_tol,
        sample_seed=args.seed,
        k_max=args.k_max,
        x=args.x,
        allow_deep_k=args.allow_deep_k,
        dense_checks=args.dense_checks,
        out=args.out,
    )


def run(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    if args.command == "validate":
        status, doc = cmd_validate(cfg)
        _emit(format_json(doc), cfg.out)
        return status
    if args.command == "entropy-sweep":
        _emit(cmd_entropy_sweep(cfg), cfg.out)
    elif args.command == "decoherence-report":
        _emit(format_json(cmd_decoherence_report(cfg)), cfg.out)
    elif args.command == "predict":
        _emit(cmd_predict(cfg), cfg.out)
    elif args.command == "diagram":
        _emit(cmd_diagram(cfg, args.history_k, not args.no_dot), cfg.out)
    return EXIT_OK


def _show_warning(message, category, filename, lineno, file=None, line=None) -> None:
    sys.stderr.write(f"warning: {message}\n")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    warnings.showwarning = _show_warning
    try:
        return run(args)
    except (BakerHistError, OSError) as exc:
        if isinstance(exc, OSError):
            err = {"code": "IO", "message": str(exc)}
            status = EXIT_CONFIG
        else:
            err = exc.to_dict()
            status = exit_code_for(exc)
        sys.stderr.write(format_json({"schema_version": SCHEMA_VERSION, "error": err}))
        return status


if __name__ == "__main__":
    sys.exit(main())
