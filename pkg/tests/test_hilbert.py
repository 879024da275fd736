"""State vectors, dense operators and the dump format."""

from __future__ import annotations

import numpy as np
import pytest

from bakerhist.errors import CapacityError, FrameMismatchError, SpecError
from bakerhist.hilbert import (
    DenseOperator,
    StateVector,
    adjoint_dense,
    apply_dense,
    basis_vector,
    check_dense_capacity,
    compose_dense,
    identity,
    inner,
)


def random_state(rng, N, frame=0) -> StateVector:
    v = rng.normal(size=1 << N) + 1j * rng.normal(size=1 << N)
    return StateVector(v / np.linalg.norm(v), frame)


def test_state_is_immutable_copy():
    raw = np.zeros(4, dtype=complex)
    psi = StateVector(raw, 0)
    raw[0] = 1
    assert psi.amplitudes[0] == 0
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 1
    assert psi.N == 2 and psi.dim == 4


def test_shape_and_frame_validation():
    with pytest.raises(SpecError):
        StateVector(np.zeros(3), 0)
    with pytest.raises(SpecError):
        StateVector(np.zeros(4), 3)
    with pytest.raises(SpecError):
        DenseOperator(np.zeros((4, 2)), 0, 0)


def test_frame_mismatch_is_refused():
    a, b = basis_vector(0, 3, frame=0), basis_vector(0, 3, frame=2)
    with pytest.raises(FrameMismatchError):
        inner(a, b)
    with pytest.raises(FrameMismatchError):
        a + b
    with pytest.raises(FrameMismatchError):
        apply_dense(identity(3, frame=1), a)


def test_inner_is_conjugate_linear_in_first_argument():
    rng = np.random.default_rng(1)
    a, b = random_state(rng, 4), random_state(rng, 4)
    assert inner(a.scaled(1j), b) == pytest.approx(-1j * inner(a, b))
    assert inner(a, a) == pytest.approx(1.0)


def test_compose_and_adjoint():
    rng = np.random.default_rng(2)
    m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    A = DenseOperator(m, 0, 0)
    psi = random_state(rng, 3)
    lhs = apply_dense(compose_dense(adjoint_dense(A), A), psi).amplitudes
    rhs = m.conj().T @ (m @ psi.amplitudes)
    assert np.allclose(lhs, rhs)


def test_dump_roundtrip(tmp_path):
    psi = random_state(np.random.default_rng(3), 5, frame=2)
    path = tmp_path / "psi.bin"
    psi.dump(path)
    back = StateVector.load(path)
    assert back.frame == 2 and np.array_equal(back.amplitudes, psi.amplitudes)
    raw = path.read_bytes()
    assert raw[:4] == b"BHSV" and len(raw) == 16 + 16 * 32
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(SpecError):
        StateVector.load(path)


def test_dense_capacity_guard():
    check_dense_capacity(12)
    with pytest.raises(CapacityError):
        check_dense_capacity(13)
    with pytest.raises(CapacityError):
        identity(14)
