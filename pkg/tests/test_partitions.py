"""Bitmask partitions, projections and the initial ensemble."""

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bakerhist.bitcore import CellLabel, CoarseGrainingSpec, parse_spec
from bakerhist.errors import FrameMismatchError, SpecError
from bakerhist.hilbert import StateVector
from bakerhist.partitions import (
    build_partition,
    cell_members,
    extract_codes,
    initial_ensemble,
    project,
    refinement_check,
    verify_masks,
    verify_partition,
)

from conftest import coarse_specs


def brute_members(spec: CoarseGrainingSpec, code: int) -> list[int]:
    """String-level scan: read the blocks off the printed N-bit label."""
    target = format(code, f"0{spec.specified_bits}b") if spec.specified_bits else ""
    out = []
    for f in range(1 << spec.N):
        bits = format(f, f"0{spec.N}b")
        got = "".join(bits[off:off + w] for off, w in zip(spec.offsets, spec.s))
        if got == target:
            out.append(f)
    return out


def test_two_bit_membership_example():
    # block of width 1 at offset 1 in a 2-bit label: xi_2 = 0 -> {00, 10}
    assert cell_members(2, [1], [1], 0).tolist() == [0, 2]
    assert cell_members(2, [1], [1], 1).tolist() == [1, 3]


@given(coarse_specs(max_N=10), st.data())
@settings(max_examples=60, deadline=None)
def test_members_match_string_scan(spec, data):
    code = data.draw(st.integers(0, spec.cell_count - 1))
    part = build_partition(spec)
    assert part.members(code).tolist() == brute_members(spec, code)
    idx = np.arange(1 << spec.N)
    assert np.array_equal(part.contains(code, idx), part.codes(idx) == code)


@given(coarse_specs(max_N=12))
@settings(max_examples=40, deadline=None)
def test_partition_is_complete_and_disjoint(spec):
    rep = verify_partition(build_partition(spec))
    assert rep.ok and rep.violations == 0 and not rep.sampled


def test_verify_masks_detects_overlap_and_gap():
    good = [np.array([1, 0, 1, 0], bool), np.array([0, 1, 0, 1], bool)]
    assert verify_masks(good).ok
    overlap = [np.array([1, 1, 1, 0], bool), np.array([0, 1, 0, 1], bool)]
    rep = verify_masks(overlap)
    assert not rep.ok and rep.first_offending == 1
    gap = [np.array([1, 0, 0, 0], bool), np.array([0, 1, 0, 1], bool)]
    assert verify_masks(gap).first_offending == 2


def test_projection_algebra():
    spec = parse_spec({"N": 6, "n": 3, "l": 1, "r": 1, "s": [2, 1], "m": [1]})
    part = build_partition(spec)
    rng = np.random.default_rng(0)
    psi = StateVector(rng.normal(size=64) + 1j * rng.normal(size=64), 3)
    total = np.zeros(64, dtype=complex)
    for code in range(part.cell_count):
        once = project(part, code, psi)
        assert np.array_equal(project(part, code, once).amplitudes, once.amplitudes)
        other = (code + 1) % part.cell_count
        assert not np.any(project(part, other, once).amplitudes)
        total += once.amplitudes
    assert np.array_equal(total, psi.amplitudes)
    with pytest.raises(FrameMismatchError):
        project(part, 0, StateVector(psi.amplitudes, 0))


def test_split_codes_reassemble_full_codes():
    spec = parse_spec({"N": 9, "n": 5, "l": 2, "r": 1, "s": [2, 2], "m": [2]})
    part = build_partition(spec)
    mcode, pcode = part.split_codes()
    from bakerhist.bakermap import bit_reverse_table

    rev = bit_reverse_table(spec.n)
    for f in range(1 << spec.N):
        A, P = int(rev[f >> (spec.N - spec.n)]), f & ((1 << (spec.N - spec.n)) - 1)
        assert mcode[A] | pcode[P] == part.codes(np.array([f]))[0]


def test_initial_ensemble_weights():
    spec = parse_spec({"N": 12, "n": 6, "l": 3, "r": 2, "s": [3, 2], "m": [2]})
    init = initial_ensemble(spec, CellLabel.parse(spec, "011,01"))
    assert init.weight == Fraction(1, 2**7)
    assert init.trace == 1 and len(init.members) == 128
    pure = CoarseGrainingSpec(3, 1, 0, 0, (3,), ())
    single = initial_ensemble(pure, CellLabel.parse(pure, "101"))
    assert single.weight == 1 and single.members.tolist() == [5]
    with pytest.raises(SpecError):
        initial_ensemble(spec, CellLabel.parse(CoarseGrainingSpec(5, 3, 0, 0, (5,), ()), "01101"))


@given(coarse_specs(max_N=11))
@settings(max_examples=30, deadline=None)
def test_refinement_of_single_block_partition(spec):
    assert refinement_check(spec).ok


def test_extract_codes_and_json():
    spec = parse_spec({"N": 6, "n": 3, "l": 1, "r": 1, "s": [2, 1], "m": [1]})
    assert extract_codes(np.array([0b011010]), 6, spec.offsets, spec.s).tolist() == [0b111]
    doc = json.loads(build_partition(spec).to_json())
    assert doc == {"spec": spec.as_dict(), "cell_count": 8, "rank": 8, "offsets": [1, 4]}


def test_large_partition_is_sampled():
    spec = parse_spec({"N": 18, "n": 9, "l": 3, "r": 3, "s": [6, 6], "m": [0]})
    rep = verify_partition(build_partition(spec), seed=1, sample=512)
    assert rep.ok and rep.sampled
