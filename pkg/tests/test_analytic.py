"""Shift condition, allowed-history enumeration and closed-form predictions."""

from __future__ import annotations

import itertools
import warnings
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bakerhist.analytic import (
    allowed_count,
    enumerate_allowed,
    enumerate_allowed_codes,
    predict,
    predicted_entropy,
    predicted_probability,
    regime,
    shift_allowed,
)
from bakerhist.bitcore import CellLabel, CoarseGrainingSpec, HistoryLabel, enumerate_histories
from bakerhist.errors import SpecError, UnsupportedRegimeWarning

from conftest import coarse_specs


def shifted_strings(spec: CoarseGrainingSpec, x_code: int, k: int) -> set[tuple[int, ...]]:
    """Oracle: slide every window string of length gamma + k and read the blocks."""
    rel = [off - spec.l for off in spec.offsets]

    def read(L, j):
        code = 0
        for off, w in zip(rel, spec.s):
            for b in range(w):
                code = (code << 1) | L[off + j + b]
        return code

    out = set()
    for L in itertools.product((0, 1), repeat=spec.gamma + k):
        if read(L, 0) == x_code:
            out.add(tuple(read(L, j) for j in range(1, k + 1)))
    return out


def small_spec(**kw) -> CoarseGrainingSpec:
    return CoarseGrainingSpec(**kw)


def test_local_one_step_example():
    spec = small_spec(N=8, n=4, l=2, r=2, s=(4,), m=())
    x = CellLabel.parse(spec, "0110")
    allowed = [str(h) for h in enumerate_allowed(spec, x, 1)]
    assert allowed == ["1100", "1101"]
    assert shift_allowed(spec, x, HistoryLabel((CellLabel.parse(spec, "1101"),)))
    assert not shift_allowed(spec, x, HistoryLabel((CellLabel.parse(spec, "0110"),)))


def test_two_scale_island_feeds_block():
    spec = small_spec(N=12, n=6, l=3, r=2, s=(3, 2), m=(2,))
    x = CellLabel.parse(spec, "011,01")
    hs = enumerate_allowed(spec, x, 3)
    assert len(hs) == 32
    # the first bit of block 2 at step 1 is x's block-2 tail: always 1
    assert {h.steps[0].blocks[1].bit(1) for h in hs} == {1}
    assert [allowed_count(spec, k) for k in (1, 2)] == [4, 16]


@given(coarse_specs(max_N=12, max_lam=3, max_s=3, max_m=2), st.data())
@settings(max_examples=200, deadline=None)
def test_enumeration_is_exactly_the_shift_filter(spec, data):
    k = data.draw(st.integers(0, min(spec.s)))
    x_code = data.draw(st.integers(0, spec.cell_count - 1))
    x = CellLabel.from_code(spec, x_code)
    listed = enumerate_allowed(spec, x, k)
    assert len(listed) == 2 ** (k + sum(min(k, m) for m in spec.m)) == allowed_count(spec, k)
    assert predicted_probability(spec, k) * allowed_count(spec, k) == 1
    assert {h.codes for h in listed} == shifted_strings(spec, x_code, k)
    if spec.cell_count**k <= 4096:
        filtered = [h for h in enumerate_histories(spec, k) if shift_allowed(spec, x, h)]
        assert filtered == listed


@pytest.mark.parametrize("s,m,k", [((3, 2), (2,), 3), ((3, 2), (2,), 4), ((3, 2, 2), (2, 2), 3), ((2,), (), 4)])
def test_count_beyond_block_length_matches_oracle(s, m, k):
    spec = small_spec(N=sum(s) + sum(m) + 3, n=2, l=1, r=2, s=s, m=m)
    with pytest.warns(UnsupportedRegimeWarning):
        count = allowed_count(spec, k)
    codes = enumerate_allowed_codes(spec, 0b1 if spec.cell_count > 1 else 0, k)
    assert len(codes) == count == len(shifted_strings(spec, 0b1, k))


def test_predict_examples():
    three = small_spec(N=16, n=6, l=3, r=2, s=(3, 2, 2), m=(2, 2))
    assert predict(three, 1).entropy_bits == 3
    two = small_spec(N=16, n=6, l=3, r=2, s=(3, 5), m=(3,))
    assert predict(two, 5).entropy_bits == 8
    one = small_spec(N=14, n=6, l=3, r=2, s=(9,), m=())
    assert predicted_entropy(one, 7) == 7
    assert predicted_probability(one, 7) == Fraction(1, 128)


def test_regimes_and_support_flag():
    spec = small_spec(N=16, n=6, l=3, r=2, s=(3, 2, 2), m=(1, 3))
    assert [regime(spec, k) for k in (0, 1, 2, 3)] == ["short", "intermediate", "intermediate", "long"]
    assert regime(small_spec(N=7, n=4, l=1, r=1, s=(5,), m=()), 2) == "long"
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert predict(spec, 2).supported
    with pytest.warns(UnsupportedRegimeWarning):
        p = predict(spec, 3)
    assert not p.supported and p.allowed_count * p.probability_each == 1


def test_label_mismatch_and_negative_k():
    spec = small_spec(N=8, n=4, l=2, r=2, s=(4,), m=())
    other = small_spec(N=8, n=4, l=2, r=2, s=(2, 2), m=(0,))
    with pytest.raises(SpecError):
        shift_allowed(spec, CellLabel.parse(other, "01,10"), HistoryLabel(()))
    with pytest.raises(SpecError):
        allowed_count(spec, -1)
