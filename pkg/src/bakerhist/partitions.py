"""Coarse-grained projective partitions in frame n, as index predicates.

A cell is never stored as a matrix. The owning cell of a frame-n basis
index is read off by extracting the specified blocks from its bit string,
so completeness and orthogonality hold exactly by integer arithmetic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .bitcore import DEFAULT_CELL_LIMIT, CellLabel, CoarseGrainingSpec, enumerate_cells
from .errors import CapacityError, FrameMismatchError, SpecError
from .hilbert import StateVector

FULL_SCAN_LIMIT = 1 << 28  # cells * indices above which verification samples


def extract_codes(indices: np.ndarray, N: int, offsets: Sequence[int], widths: Sequence[int]) -> np.ndarray:
    """Concatenated block bits of each N-bit index (blocks at 0-based offsets)."""
    idx = np.asarray(indices, dtype=np.int64)
    code = np.zeros_like(idx)
    for off, width in zip(offsets, widths):
        code = (code << width) | ((idx >> (N - off - width)) & ((1 << width) - 1))
    return code


def cell_members(N: int, offsets: Sequence[int], widths: Sequence[int], code: int) -> np.ndarray:
    """Sorted indices whose extracted blocks equal ``code``, built constructively."""
    fixed_mask, pattern, shift = 0, 0, sum(widths)
    for off, width in zip(offsets, widths):
        shift -= width
        low = N - off - width
        fixed_mask |= ((1 << width) - 1) << low
        pattern |= ((code >> shift) & ((1 << width) - 1)) << low
    free = [b for b in range(N) if not (fixed_mask >> b) & 1]
    counter = np.arange(1 << len(free), dtype=np.int64)
    out = np.full_like(counter, pattern)
    for j, b in enumerate(free):
        out |= ((counter >> j) & 1) << b
    return np.sort(out)


@dataclass(frozen=True)
class Partition:
    spec: CoarseGrainingSpec

    @property
    def offsets(self) -> tuple[int, ...]:
        return self.spec.offsets

    @property
    def cell_count(self) -> int:
        return self.spec.cell_count

    @property
    def rank(self) -> int:
        return 1 << self.spec.coarse_bits

    @property
    def cells(self) -> list[CellLabel]:
        return enumerate_cells(self.spec)

    def codes(self, indices: np.ndarray) -> np.ndarray:
        """Owning cell code of each frame-n index."""
        return extract_codes(indices, self.spec.N, self.offsets, self.spec.s)

    def members(self, cell: CellLabel | int) -> np.ndarray:
        code = cell if isinstance(cell, int) else cell.code
        return cell_members(self.spec.N, self.offsets, self.spec.s, code)

    def contains(self, cell: CellLabel | int, indices: np.ndarray) -> np.ndarray:
        """Membership by masked comparison, independent of ``codes``."""
        code = cell if isinstance(cell, int) else cell.code
        mask, pattern = self._mask_pattern(code)
        return (np.asarray(indices, dtype=np.int64) & mask) == pattern

    def _mask_pattern(self, code: int) -> tuple[int, int]:
        N, mask, pattern, shift = self.spec.N, 0, 0, self.spec.specified_bits
        for off, width in zip(self.offsets, self.spec.s):
            shift -= width
            low = N - off - width
            mask |= ((1 << width) - 1) << low
            pattern |= ((code >> shift) & ((1 << width) - 1)) << low
        return mask, pattern

    def split_codes(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell code contributions of the momentum and position registers.

        Returns ``(mcode, pcode)`` with ``mcode[A]`` for every momentum integer
        ``A = sum_{i<=n} xi_i 2**(i-1)`` and ``pcode[P]`` for every position
        integer ``P``; the code of the index is ``mcode[A] | pcode[P]``.
        """
        from .bakermap import bit_reverse_table

        N, n = self.spec.N, self.spec.n
        top = bit_reverse_table(n).astype(np.int64) << (N - n)
        mcode = self.codes(top)
        pcode = self.codes(np.arange(1 << (N - n), dtype=np.int64))
        return mcode, pcode

    def to_json(self) -> str:
        return json.dumps(
            {
                "spec": self.spec.as_dict(),
                "cell_count": self.cell_count,
                "rank": self.rank,
                "offsets": list(self.offsets),
            }
        )


def build_partition(spec: CoarseGrainingSpec, limit: int = DEFAULT_CELL_LIMIT) -> Partition:
    if spec.cell_count > limit:
        raise CapacityError(f"{spec.cell_count} cells exceed limit {limit}")
    return Partition(spec)


def project(partition: Partition, cell: CellLabel | int, psi: StateVector) -> StateVector:
    if psi.frame != partition.spec.n:
        raise FrameMismatchError(f"projection acts in frame {partition.spec.n}, state is in frame {psi.frame}")
    if psi.N != partition.spec.N:
        raise SpecError(f"state has N={psi.N}, partition N={partition.spec.N}", code="SHAPE")
    keep = partition.contains(cell, np.arange(psi.dim))
    return StateVector(np.where(keep, psi.amplitudes, 0), psi.frame)


@dataclass(frozen=True)
class InitialState:
    """Uniform mixture over the frame-n basis states of one cell."""

    spec: CoarseGrainingSpec
    x: CellLabel
    weight: Fraction
    members: np.ndarray

    @property
    def trace(self) -> Fraction:
        return self.weight * len(self.members)


def initial_ensemble(spec: CoarseGrainingSpec, x: CellLabel) -> InitialState:
    if not x.conforms(spec):
        raise SpecError(f"label {x} does not match block lengths {spec.s}", code="SHAPE")
    members = cell_members(spec.N, spec.offsets, spec.s, x.code)
    members.setflags(write=False)
    return InitialState(spec, x, Fraction(1, 1 << spec.coarse_bits), members)


@dataclass(frozen=True)
class PartitionReport:
    ok: bool
    checked: int
    sampled: bool
    violations: int
    first_offending: int | None
    detail: str = ""


def verify_masks(masks: Sequence[np.ndarray], indices: np.ndarray | None = None) -> PartitionReport:
    """Every index must be covered by exactly one mask."""
    masks = [np.asarray(m, dtype=bool) for m in masks]
    count = np.zeros(masks[0].shape[0], dtype=np.int64)
    for m in masks:
        count += m
    idx = np.arange(count.shape[0]) if indices is None else np.asarray(indices)
    bad = idx[count[idx] != 1]
    first = int(bad[0]) if bad.size else None
    detail = "" if first is None else f"index {first} covered {int(count[first])} times"
    return PartitionReport(bad.size == 0, int(idx.size), False, int(bad.size), first, detail)


def verify_partition(partition: Partition, seed: int = 0, sample: int = 4096) -> PartitionReport:
    """Count, for every index, how many cells claim it (sampled when large).

    Also checks that each cell owns exactly ``rank`` indices and that the
    masked-comparison membership agrees with block extraction.
    """
    spec = partition.spec
    D = 1 << spec.N
    sampled = D * partition.cell_count > FULL_SCAN_LIMIT
    if sampled:
        rng = np.random.default_rng(seed)
        idx = np.unique(rng.integers(0, D, size=sample, dtype=np.int64))
    else:
        idx = np.arange(D, dtype=np.int64)
    count = np.zeros(idx.shape[0], dtype=np.int64)
    for code in range(partition.cell_count):
        count += partition.contains(code, idx)
    bad = np.nonzero(count != 1)[0]
    if bad.size:
        first = int(idx[bad[0]])
        return PartitionReport(False, int(idx.size), sampled, int(bad.size), first,
                               f"index {first} claimed by {int(count[bad[0]])} cells")
    owner = partition.codes(idx)
    for code in np.unique(owner)[:64]:
        members = partition.members(int(code))
        if members.size != partition.rank or not np.all(partition.codes(members) == code):
            return PartitionReport(False, int(idx.size), sampled, 1, int(members[0]),
                                   f"cell {int(code)} has {members.size} members, expected rank {partition.rank}")
    return PartitionReport(True, int(idx.size), sampled, 0, None)


def refinement_check(spec: CoarseGrainingSpec) -> PartitionReport:
    """Each multi-block cell is the union of single-block cells over island fillings.

    The single-block partition specifies the whole window ``l .. N-r``; a
    coarse cell ``(y^1, ..., y^lam)`` must equal the union of the fine cells
    ``y^1 z^1 y^2 ... y^lam`` over all island strings ``z``.
    """
    if spec.lam == 1:
        return PartitionReport(True, 0, False, 0, None, "single block: nothing to refine")
    fine = CoarseGrainingSpec(spec.N, spec.n, spec.l, spec.r, (spec.gamma,), ())
    idx = np.arange(1 << spec.N, dtype=np.int64)
    coarse_codes = Partition(spec).codes(idx)
    fine_codes = Partition(fine).codes(idx)
    # drop island bits from the fine code, independently of block extraction
    window = spec.gamma
    recovered = np.zeros_like(fine_codes)
    pos = 0
    for i, width in enumerate(spec.s):
        chunk = (fine_codes >> (window - pos - width)) & ((1 << width) - 1)
        recovered = (recovered << width) | chunk
        pos += width + (spec.m[i] if i < len(spec.m) else 0)
    bad = np.nonzero(recovered != coarse_codes)[0]
    first = int(bad[0]) if bad.size else None
    return PartitionReport(bad.size == 0, int(idx.size), False, int(bad.size), first)
