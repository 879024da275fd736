"""Shared hypothesis strategies and small fixtures."""

from __future__ import annotations

import warnings

import pytest
from hypothesis import strategies as st

from bakerhist.bitcore import CoarseGrainingSpec
from bakerhist.errors import AdvisoryWarning


@st.composite
def coarse_specs(draw, max_N: int = 16, max_lam: int = 3, max_s: int = 3, max_m: int = 2, max_lr: int = 3):
    """Valid specs: l < n < N - r and the block sum equal to N."""
    lam = draw(st.integers(1, max_lam))
    s = tuple(draw(st.lists(st.integers(1, max_s), min_size=lam, max_size=lam)))
    m = tuple(draw(st.lists(st.integers(0, max_m), min_size=lam - 1, max_size=lam - 1)))
    l = draw(st.integers(0, max_lr))
    r = draw(st.integers(0, max_lr))
    N = l + r + sum(s) + sum(m)
    if N > max_N or N - r - 1 < l + 1:
        # shrink towards something valid instead of rejecting
        s, m, l, r = (2,), (), 0, 0
        N = 2
    n = draw(st.integers(l + 1, N - r - 1))
    return CoarseGrainingSpec(N, n, l, r, s, m)


@pytest.fixture(autouse=True)
def _quiet_advisories():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AdvisoryWarning)
        yield
