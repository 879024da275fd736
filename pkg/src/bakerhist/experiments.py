"""Experiment configuration and the l-sweep runner shared by the CLI and scripts."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .analytic import predict, shift_allowed_codes
from .bakermap import BakerParams
from .bitcore import CellLabel, CoarseGrainingSpec, parse_spec
from .errors import SpecError
from .histories import BranchTree, DecoherenceReport, EngineConfig, ShiftCheck, build_report, run_anchored, run_branch_tree, shift_support_check
from .partitions import build_partition, initial_ensemble

SWEEP_COLUMNS = (
    "l", "N", "k", "H_measured", "H_predicted", "support_size",
    "allowed_count", "epsilon", "pruned_mass", "runtime_ms",
)


@dataclass(frozen=True)
class ExperimentConfig:
    N: int
    n: int
    l: int
    r: int
    s: tuple[int, ...]
    m: tuple[int, ...] = ()
    x: str = ""
    k_max: int = 1
    prune_tol: float = 1e-9
    expand_tol: float = 0.0
    offdiag_mode: str = "auto"
    epsilon_scope: str = "anchored"
    sample_seed: int = 0
    l_sweep: tuple[int, ...] | None = None
    support_factor: float = 0.5
    threads: int = 1
    allow_deep_k: bool = False
    dense_checks: bool = True
    out: str | None = None
    name: str = ""

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise SpecError(f"unknown config keys: {', '.join(unknown)}", code="SHAPE")
        missing = [key for key in ("N", "n", "l", "r", "s") if key not in raw]
        if missing:
            raise SpecError(f"missing config keys: {', '.join(missing)}", code="SHAPE")
        data = dict(raw)
        data["s"] = tuple(data["s"])
        data["m"] = tuple(data.get("m", ()))
        if data.get("l_sweep") is not None:
            data["l_sweep"] = tuple(int(v) for v in data["l_sweep"])
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SpecError(f"config is not valid JSON: {exc}", code="SHAPE") from exc
        return cls.from_mapping(raw)

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def as_dict(self) -> dict:
        d = asdict(self)
        d["s"], d["m"] = list(self.s), list(self.m)
        if self.l_sweep is not None:
            d["l_sweep"] = list(self.l_sweep)
        return d

    @property
    def base_spec(self) -> CoarseGrainingSpec:
        return parse_spec({"N": self.N, "n": self.n, "l": self.l, "r": self.r, "s": self.s, "m": self.m})

    def specs(self) -> list[CoarseGrainingSpec]:
        """One spec per sweep entry; gamma, s, m, r and n - l stay fixed."""
        if not self.l_sweep:
            return [self.base_spec]
        out = []
        for l in self.l_sweep:
            N, n = self.N + (l - self.l), self.n + (l - self.l)
            out.append(parse_spec({"N": N, "n": n, "l": l, "r": self.r, "s": self.s, "m": self.m}))
        return out

    def initial_label(self, spec: CoarseGrainingSpec) -> CellLabel:
        if not self.x:
            return CellLabel.from_code(spec, 0)
        return CellLabel.parse(spec, self.x)

    def validate(self) -> list[CoarseGrainingSpec]:
        specs = self.specs()
        if self.k_max < 0:
            raise SpecError("k_max must be non-negative", code="RANGE")
        if self.k_max > min(self.s) and not self.allow_deep_k:
            raise SpecError(
                f"k_max={self.k_max} exceeds min(s)={min(self.s)}; pass allow_deep_k to run it",
                code="RANGE",
            )
        if self.offdiag_mode not in ("auto", "full", "sampled"):
            raise SpecError(f"unknown offdiag_mode {self.offdiag_mode!r}", code="SHAPE")
        if self.epsilon_scope not in ("anchored", "support"):
            raise SpecError(f"unknown epsilon_scope {self.epsilon_scope!r}", code="SHAPE")
        if self.support_factor <= 0:
            raise SpecError("support_factor must be positive", code="RANGE")
        for spec in specs:
            self.initial_label(spec)
        return specs


def support_threshold(spec: CoarseGrainingSpec, k: int, factor: float) -> float:
    return factor * float(predict_quiet(spec, k).probability_each)


def predict_quiet(spec: CoarseGrainingSpec, k: int):
    import warnings

    from .errors import UnsupportedRegimeWarning

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnsupportedRegimeWarning)
        return predict(spec, k)


@dataclass
class SweepPoint:
    spec: CoarseGrainingSpec
    x: CellLabel
    tree: BranchTree
    reports: list[DecoherenceReport]
    checks: list[ShiftCheck]
    rows: list[dict] = field(default_factory=list)


def run_point(cfg: ExperimentConfig, spec: CoarseGrainingSpec) -> SweepPoint:
    """Branch tree to depth ``k_max`` and one report per depth."""
    x = cfg.initial_label(spec)
    k_max = cfg.k_max
    thresholds = [support_threshold(spec, k, cfg.support_factor) for k in range(k_max + 1)]
    engine = EngineConfig(
        prune_tol=cfg.prune_tol,
        expand_tol=cfg.expand_tol,
        threads=cfg.threads,
        keep_tol=tuple(thresholds),  # support nodes (p > t) keep their blocks
    )
    args = (initial_ensemble(spec, x), build_partition(spec), BakerParams(spec.N, spec.n), k_max)
    if cfg.epsilon_scope == "anchored":
        tree = run_anchored(*args, thresholds, engine)
    else:
        tree = run_branch_tree(*args, engine)
    point = SweepPoint(spec, x, tree, [], [])
    for k in range(k_max + 1):
        report = build_report(tree, k, thresholds[k], mode=cfg.offdiag_mode, seed=cfg.sample_seed)
        check = shift_support_check(report, spec, x, thresholds[k])
        pred = predict_quiet(spec, k)
        point.reports.append(report)
        point.checks.append(check)
        point.rows.append({
            "l": spec.l,
            "N": spec.N,
            "k": k,
            "H_measured": report.entropy_bits,
            "H_predicted": pred.entropy_bits,
            "support_size": report.support_size,
            "allowed_count": pred.allowed_count,
            "epsilon": report.epsilon,
            "pruned_mass": report.pruned_mass,
            "runtime_ms": tree.runtime_ms,
        })
    return point


def run_sweep(cfg: ExperimentConfig) -> list[SweepPoint]:
    return [run_point(cfg, spec) for spec in cfg.validate()]


def support_matches_allowed(point: SweepPoint, k: int) -> bool:
    """Support at depth ``k`` equals the analytic allowed set exactly."""
    x_code = point.x.code
    support = {h.codes for h in point.reports[k].support}
    if not all(shift_allowed_codes(point.spec, x_code, h) for h in support):
        return False
    return len(support) == predict_quiet(point.spec, k).allowed_count


def fraction_text(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"
