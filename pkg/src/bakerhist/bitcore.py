"""Bit strings, coarse-graining parameters, cell/history labels and box diagrams.

Conventions used throughout the package:

* bit 1 of any label is its most significant bit, so a length-N string
  ``xi_1 ... xi_N`` encodes the integer ``sum(xi_l * 2**(N - l))``;
* substrings are 1-based and inclusive, ``alpha[k:s] = alpha_k ... alpha_s``;
* a coarse-graining is the pattern ``l boxes, y^1, m_1 boxes, y^2, ..., y^lam,
  r boxes`` over the N symbols of the frame-n basis label.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import AdvisoryWarning, CapacityError, SpecError

BOX = "□"
DEFAULT_CELL_LIMIT = 1 << 20


@total_ordering
@dataclass(frozen=True)
class BitString:
    """Packed binary string: ``value`` holds the bits, bit 1 most significant."""

    value: int
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("length must be non-negative")
        if not 0 <= self.value < (1 << self.length) and not (self.length == 0 and self.value == 0):
            raise ValueError(f"value {self.value} does not fit in {self.length} bits")

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        text = text.strip()
        if any(c not in "01" for c in text):
            raise ValueError(f"not a bit string: {text!r}")
        return cls(int(text, 2) if text else 0, len(text))

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitString":
        value, length = 0, 0
        for b in bits:
            if b not in (0, 1):
                raise ValueError(f"bit must be 0 or 1, got {b!r}")
            value = (value << 1) | b
            length += 1
        return cls(value, length)

    def __len__(self) -> int:
        return self.length

    def __iter__(self) -> Iterator[int]:
        for i in range(1, self.length + 1):
            yield self.bit(i)

    def __str__(self) -> str:
        return format(self.value, f"0{self.length}b") if self.length else ""

    def __lt__(self, other: "BitString") -> bool:
        return (self.length, self.value) < (other.length, other.value)

    def bit(self, i: int) -> int:
        """1-based bit access."""
        if not 1 <= i <= self.length:
            raise IndexError(f"bit index {i} outside 1..{self.length}")
        return (self.value >> (self.length - i)) & 1

    def substring(self, kappa: int, sigma: int) -> "BitString":
        """``alpha_{kappa:sigma}``; requires ``1 <= kappa <= sigma <= len``."""
        if not 1 <= kappa <= sigma <= self.length:
            raise IndexError(f"substring {kappa}:{sigma} undefined for length {self.length}")
        width = sigma - kappa + 1
        return BitString((self.value >> (self.length - sigma)) & ((1 << width) - 1), width)

    def concat(self, other: "BitString") -> "BitString":
        return BitString((self.value << other.length) | other.value, self.length + other.length)

    def reversed(self) -> "BitString":
        return BitString.from_bits(reversed(list(self)))


def binary_fraction(bits: BitString | str | Sequence[int]) -> Fraction:
    """Exact value of ``0.b_1 ... b_j 1`` (binary), always in (0, 1)."""
    if isinstance(bits, str):
        bits = BitString.from_str(bits)
    elif not isinstance(bits, BitString):
        bits = BitString.from_bits(bits)
    return Fraction(2 * bits.value + 1, 1 << (bits.length + 1))


@dataclass(frozen=True)
class CoarseGrainingSpec:
    """One member of the hierarchical coarse-graining family.

    ``s`` holds the specified-block lengths ``s_1..s_lam`` and ``m`` the
    island lengths ``m_1..m_{lam-1}`` that separate them.
    """

    N: int
    n: int
    l: int
    r: int
    s: tuple[int, ...]
    m: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(int(v) for v in self.s))
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        for problem in _spec_problems(self.N, self.n, self.l, self.r, self.s, self.m):
            raise SpecError(problem[1], code=problem[0])

    @property
    def lam(self) -> int:
        return len(self.s)

    @property
    def gamma(self) -> int:
        return self.N - self.l - self.r

    @property
    def coarse_bits(self) -> int:
        """``l + r + sum(m)``: log2 of the rank of every cell."""
        return self.l + self.r + sum(self.m)

    @property
    def specified_bits(self) -> int:
        return sum(self.s)

    @property
    def cell_count(self) -> int:
        return 1 << self.specified_bits

    @property
    def offsets(self) -> tuple[int, ...]:
        """0-based start of each specified block within the N-symbol label."""
        out, pos = [], self.l
        for i, width in enumerate(self.s):
            out.append(pos)
            pos += width + (self.m[i] if i < len(self.m) else 0)
        return tuple(out)

    def advisories(self) -> list[str]:
        notes = []
        if self.l + self.s[0] > self.n:
            notes.append(f"l+s_1={self.l + self.s[0]} exceeds n={self.n}")
        if self.r + self.s[-1] > self.N - self.n:
            notes.append(f"r+s_lam={self.r + self.s[-1]} exceeds N-n={self.N - self.n}")
        return notes

    def as_dict(self) -> dict:
        return {"N": self.N, "n": self.n, "l": self.l, "r": self.r, "s": list(self.s), "m": list(self.m)}

    def with_l(self, l: int) -> "CoarseGrainingSpec":
        """Classical-limit sweep step: move l and N together, keep n - l fixed."""
        dl = l - self.l
        return CoarseGrainingSpec(self.N + dl, self.n + dl, l, self.r, self.s, self.m)


def _spec_problems(N, n, l, r, s, m) -> list[tuple[str, str]]:
    problems = []
    if len(s) < 1:
        problems.append(("SHAPE", "at least one specified block is required"))
        return problems
    if len(m) != len(s) - 1:
        problems.append(("SHAPE", f"expected {len(s) - 1} island lengths for {len(s)} blocks, got {len(m)}"))
        return problems
    if any(v < 1 for v in s):
        problems.append(("SHAPE", "every block length s_i must be >= 1"))
    if any(v < 0 for v in m):
        problems.append(("SHAPE", "island lengths m_i must be >= 0"))
    if min(N, l, r) < 0:
        problems.append(("RANGE", "N, l, r must be non-negative"))
    if l + r + sum(m) + sum(s) != N:
        problems.append(("SUM_MISMATCH", f"l+r+sum(m)+sum(s)={l + r + sum(m) + sum(s)} != N={N}"))
    if not 0 <= n <= N - 1:
        problems.append(("RANGE", f"n={n} outside 0..N-1"))
    if not l < n:
        problems.append(("RANGE", f"l={l} must be < n={n}"))
    if not r < N - n:
        problems.append(("RANGE", f"r={r} must be < N-n={N - n}"))
    return problems


def parse_spec(raw: Mapping) -> CoarseGrainingSpec:
    """Validate a mapping with keys N, n, l, r, s, m.

    Raises ``SpecError`` whose ``code`` names the first violated invariant;
    the advisory ``l+s_1 <= n`` / ``r+s_lam <= N-n`` constraints only warn.
    """
    missing = [key for key in ("N", "n", "l", "r", "s") if key not in raw]
    if missing:
        raise SpecError(f"missing fields: {', '.join(missing)}", code="SHAPE")
    try:
        N, n, l, r = (int(raw[key]) for key in ("N", "n", "l", "r"))
        s = tuple(int(v) for v in raw["s"])
        m = tuple(int(v) for v in raw.get("m", ()))
    except (TypeError, ValueError) as exc:
        raise SpecError(f"malformed spec field: {exc}", code="SHAPE") from exc
    spec = CoarseGrainingSpec(N, n, l, r, s, m)
    for note in spec.advisories():
        warnings.warn(note, AdvisoryWarning, stacklevel=2)
    return spec


@total_ordering
@dataclass(frozen=True)
class CellLabel:
    """The specified strings ``(y^1, ..., y^lam)`` of one partition cell."""

    blocks: tuple[BitString, ...]

    def __lt__(self, other: "CellLabel") -> bool:
        return self.code < other.code

    @property
    def concat(self) -> BitString:
        out = BitString(0, 0)
        for b in self.blocks:
            out = out.concat(b)
        return out

    @property
    def code(self) -> int:
        """Integer value of ``y^1 ... y^lam`` (the enumeration index)."""
        return self.concat.value

    def conforms(self, spec: CoarseGrainingSpec) -> bool:
        return tuple(len(b) for b in self.blocks) == spec.s

    def __str__(self) -> str:
        return ",".join(str(b) for b in self.blocks)

    @classmethod
    def from_code(cls, spec: CoarseGrainingSpec, code: int) -> "CellLabel":
        blocks, shift = [], spec.specified_bits
        for width in spec.s:
            shift -= width
            blocks.append(BitString((code >> shift) & ((1 << width) - 1), width))
        return cls(tuple(blocks))

    @classmethod
    def parse(cls, spec: CoarseGrainingSpec, text: str) -> "CellLabel":
        """Accepts ``"110,01"`` or the concatenation ``"11001"``."""
        text = text.strip()
        if "," in text:
            label = cls(tuple(BitString.from_str(part) for part in text.split(",")))
        else:
            bits = BitString.from_str(text)
            if len(bits) != spec.specified_bits:
                raise SpecError(f"label {text!r} has {len(bits)} bits, expected {spec.specified_bits}", code="SHAPE")
            label = cls.from_code(spec, bits.value)
        if not label.conforms(spec):
            raise SpecError(f"label {text!r} does not match block lengths {spec.s}", code="SHAPE")
        return label


@total_ordering
@dataclass(frozen=True)
class HistoryLabel:
    steps: tuple[CellLabel, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.steps)

    def __lt__(self, other: "HistoryLabel") -> bool:
        return self.codes < other.codes

    @property
    def codes(self) -> tuple[int, ...]:
        return tuple(step.code for step in self.steps)

    def __str__(self) -> str:
        return "|".join(str(step) for step in self.steps)

    @classmethod
    def from_codes(cls, spec: CoarseGrainingSpec, codes: Iterable[int]) -> "HistoryLabel":
        return cls(tuple(CellLabel.from_code(spec, c) for c in codes))


def enumerate_cells(spec: CoarseGrainingSpec, limit: int = DEFAULT_CELL_LIMIT) -> list[CellLabel]:
    """All ``2**sum(s)`` cell labels in lexicographic order."""
    if spec.cell_count > limit:
        raise CapacityError(f"{spec.cell_count} cells exceed limit {limit}")
    return [CellLabel.from_code(spec, code) for code in range(spec.cell_count)]


def enumerate_histories(spec: CoarseGrainingSpec, k: int, limit: int = DEFAULT_CELL_LIMIT) -> list[HistoryLabel]:
    total = spec.cell_count**k
    if total > limit:
        raise CapacityError(f"{total} histories exceed limit {limit}")
    return [HistoryLabel.from_codes(spec, codes) for codes in itertools.product(range(spec.cell_count), repeat=k)]


def _diagram_line(spec: CoarseGrainingSpec, label: CellLabel, dot_after: int | None) -> str:
    groups: list[str] = [BOX * spec.l]
    for i, block in enumerate(label.blocks):
        groups.append(str(block))
        if i < len(spec.m):
            groups.append(BOX * spec.m[i])
    groups.append(BOX * spec.r)
    # symbols with a separator flag: a space goes between non-empty groups
    chars: list[str] = []
    seps: list[bool] = []
    for group in (g for g in groups if g):
        for j, c in enumerate(group):
            chars.append(c)
            seps.append(j == 0 and bool(chars[:-1]))
    out = []
    for pos, (c, space_before) in enumerate(zip(chars, seps)):
        if dot_after is not None and pos == dot_after:
            out.append(".")
        elif space_before:
            out.append(" ")
        out.append(c)
    if dot_after is not None and dot_after == len(chars):
        out.append(".")
    return "".join(out)


def render_diagram(spec: CoarseGrainingSpec, label: CellLabel | HistoryLabel, show_dot: bool = True) -> str:
    """Box diagram, one line per event; the dot sits after symbol ``n``."""
    dot = spec.n if show_dot else None
    if isinstance(label, HistoryLabel):
        return "\n".join(_diagram_line(spec, step, dot) for step in label.steps)
    if not label.conforms(spec):
        raise SpecError(f"label {label} does not match block lengths {spec.s}", code="SHAPE")
    return _diagram_line(spec, label, dot)
