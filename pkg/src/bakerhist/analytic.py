"""Closed-form predictions: shift condition, allowed histories, entropy curves.

The symbolic string of the coarse-grained window (``gamma = N - l - r``
symbols) is shifted left by one place per map step. A history is allowed
when a single "long string" ``L`` of length ``gamma + k`` exists such that
block ``i`` of the initial label reads ``L[off_i : off_i + s_i]`` and block
``i`` of step ``j`` reads ``L[off_i + j : off_i + j + s_i]`` (offsets relative
to the window). Island positions and the ``k`` tail positions are free, which
gives ``2**(k + sum(min(k, m_i)))`` allowed histories.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .bitcore import DEFAULT_CELL_LIMIT, CellLabel, CoarseGrainingSpec, HistoryLabel
from .errors import CapacityError, SpecError, UnsupportedRegimeWarning


def _window_offsets(spec: CoarseGrainingSpec) -> list[int]:
    return [off - spec.l for off in spec.offsets]


def _check_history(spec: CoarseGrainingSpec, x: CellLabel, h: HistoryLabel) -> None:
    if not x.conforms(spec):
        raise SpecError(f"initial label {x} does not match block lengths {spec.s}", code="SHAPE")
    for step in h.steps:
        if not step.conforms(spec):
            raise SpecError(f"history step {step} does not match block lengths {spec.s}", code="SHAPE")


def shift_allowed_codes(spec: CoarseGrainingSpec, x_code: int, codes: tuple[int, ...]) -> bool:
    """``shift_allowed`` on integer cell codes (the enumeration index)."""
    offs = _window_offsets(spec)
    L: dict[int, int] = {}

    def place(code: int, shift: int) -> bool:
        rest = spec.specified_bits
        for off, width in zip(offs, spec.s):
            rest -= width
            block = (code >> rest) & ((1 << width) - 1)
            for b in range(width):
                bit = (block >> (width - 1 - b)) & 1
                pos = off + shift + b
                seen = L.setdefault(pos, bit)
                if seen != bit:
                    return False
        return True

    if not place(x_code, 0):
        return False  # only possible when blocks overlap, which specs forbid
    return all(place(code, j) for j, code in enumerate(codes, start=1))


def shift_allowed(spec: CoarseGrainingSpec, x: CellLabel, h: HistoryLabel) -> bool:
    """Step-by-step shift condition with island-crossing constraints."""
    _check_history(spec, x, h)
    return shift_allowed_codes(spec, x.code, h.codes)


def free_positions(spec: CoarseGrainingSpec, k: int) -> list[int]:
    """Window positions read by some history step but not fixed by ``x``."""
    offs = _window_offsets(spec)
    fixed = {off + b for off, w in zip(offs, spec.s) for b in range(w)}
    seen = {off + j + b for j in range(1, k + 1) for off, w in zip(offs, spec.s) for b in range(w)}
    return sorted(seen - fixed)


def enumerate_allowed_codes(
    spec: CoarseGrainingSpec, x_code: int, k: int, limit: int = DEFAULT_CELL_LIMIT
) -> list[tuple[int, ...]]:
    offs = _window_offsets(spec)
    free = free_positions(spec, k)
    if (1 << len(free)) > limit:
        raise CapacityError(f"{1 << len(free)} allowed histories exceed limit {limit}")
    base: dict[int, int] = {}
    rest = spec.specified_bits
    for off, width in zip(offs, spec.s):
        rest -= width
        block = (x_code >> rest) & ((1 << width) - 1)
        for b in range(width):
            base[off + b] = (block >> (width - 1 - b)) & 1
    out = []
    for bits in itertools.product((0, 1), repeat=len(free)):
        L = dict(base)
        L.update(zip(free, bits))
        codes = []
        for j in range(1, k + 1):
            code = 0
            for off, width in zip(offs, spec.s):
                for b in range(width):
                    code = (code << 1) | L[off + j + b]
            codes.append(code)
        out.append(tuple(codes))
    return sorted(out)


def enumerate_allowed(spec: CoarseGrainingSpec, x: CellLabel, k: int, limit: int = DEFAULT_CELL_LIMIT) -> list[HistoryLabel]:
    """Allowed histories, built by fixing ``x`` and running over the free bits."""
    if not x.conforms(spec):
        raise SpecError(f"initial label {x} does not match block lengths {spec.s}", code="SHAPE")
    return [HistoryLabel.from_codes(spec, c) for c in enumerate_allowed_codes(spec, x.code, k, limit)]


def _exponent(spec: CoarseGrainingSpec, k: int) -> int:
    if k < 0:
        raise SpecError("k must be non-negative", code="RANGE")
    if k > min(spec.s):
        warnings.warn(
            f"k={k} exceeds min(s)={min(spec.s)}: outside the regime of the closed forms",
            UnsupportedRegimeWarning,
            stacklevel=3,
        )
    return k + sum(min(k, m) for m in spec.m)


def allowed_count(spec: CoarseGrainingSpec, k: int) -> int:
    return 1 << _exponent(spec, k)


def predicted_probability(spec: CoarseGrainingSpec, k: int) -> Fraction:
    return Fraction(1, 1 << _exponent(spec, k))


def predicted_entropy(spec: CoarseGrainingSpec, k: int) -> int:
    return _exponent(spec, k)


def regime(spec: CoarseGrainingSpec, k: int) -> str:
    if not spec.m:
        return "long"
    if k < min(spec.m):
        return "short"
    if k >= max(spec.m):
        return "long"
    return "intermediate"


@dataclass(frozen=True)
class Prediction:
    k: int
    allowed_count: int
    probability_each: Fraction
    entropy_bits: int
    regime: str
    supported: bool = True

    def __post_init__(self):
        if self.allowed_count * self.probability_each != 1:
            raise SpecError("allowed_count * probability_each must equal 1", code="RANGE")


def predict(spec: CoarseGrainingSpec, k: int) -> Prediction:
    supported = k <= min(spec.s)
    with warnings.catch_warnings():
        if not supported:
            warnings.simplefilter("ignore", UnsupportedRegimeWarning)
        e = _exponent(spec, k)
    if not supported:
        warnings.warn(f"k={k} exceeds min(s)={min(spec.s)}", UnsupportedRegimeWarning, stacklevel=2)
    return Prediction(k, 1 << e, Fraction(1, 1 << e), e, regime(spec, k), supported)

