"""State vectors and dense operators on the 2^N-dimensional qubit space.

Dense operators are the reference path only. Every state and operator
carries a frame tag and cross-frame arithmetic is refused.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError, FrameMismatchError, SpecError

N_DENSE_MAX = 12
DUMP_MAGIC = b"BHSV"
DUMP_VERSION = 1


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


def _qubits(dim: int) -> int:
    N = dim.bit_length() - 1
    if dim < 1 or (1 << N) != dim:
        raise SpecError(f"dimension {dim} is not a power of two", code="SHAPE")
    return N


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    frame: int

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1:
            raise SpecError("amplitudes must be one-dimensional", code="SHAPE")
        object.__setattr__(self, "amplitudes", amps)
        if not 0 <= self.frame <= self.N:
            raise SpecError(f"frame {self.frame} outside 0..{self.N}", code="RANGE")

    @property
    def N(self) -> int:
        return _qubits(self.amplitudes.shape[0])

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def scaled(self, c: complex) -> "StateVector":
        return StateVector(c * self.amplitudes, self.frame)

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_frames(self.frame, other.frame)
        return StateVector(self.amplitudes + other.amplitudes, self.frame)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _check_frames(self.frame, other.frame)
        return StateVector(self.amplitudes - other.amplitudes, self.frame)

    def dump(self, path: str | Path) -> None:
        header = DUMP_MAGIC + struct.pack("<III", DUMP_VERSION, self.N, self.frame)
        body = self.amplitudes.astype("<c16").tobytes()
        Path(path).write_bytes(header + body)

    @classmethod
    def load(cls, path: str | Path) -> "StateVector":
        raw = Path(path).read_bytes()
        if raw[:4] != DUMP_MAGIC:
            raise SpecError("not a state dump (bad magic)", code="SHAPE")
        version, N, frame = struct.unpack("<III", raw[4:16])
        if version != DUMP_VERSION:
            raise SpecError(f"unsupported dump version {version}", code="SHAPE")
        amps = np.frombuffer(raw[16:], dtype="<c16")
        if amps.shape[0] != 1 << N:
            raise SpecError("dump length does not match header", code="SHAPE")
        return cls(amps, frame)


@dataclass(frozen=True, eq=False)
class DenseOperator:
    entries: np.ndarray
    row_frame: int
    col_frame: int

    def __post_init__(self):
        mat = _frozen(self.entries)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise SpecError(f"operator must be square, got shape {mat.shape}", code="SHAPE")
        _qubits(mat.shape[0])
        object.__setattr__(self, "entries", mat)

    @property
    def N(self) -> int:
        return _qubits(self.entries.shape[0])

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _check_frames(a: int, b: int) -> None:
    if a != b:
        raise FrameMismatchError(f"frame {a} does not match frame {b}", expected=a, got=b)


def check_dense_capacity(N: int, limit: int = N_DENSE_MAX) -> None:
    if N > limit:
        raise CapacityError(f"dense path refused for N={N} > {limit}", N=N, limit=limit)


def basis_vector(index: int, N: int, frame: int = 0) -> StateVector:
    if not 0 <= index < (1 << N):
        raise SpecError(f"index {index} outside 0..{(1 << N) - 1}", code="RANGE")
    amps = np.zeros(1 << N, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(amps, frame)


def identity(N: int, frame: int = 0) -> DenseOperator:
    check_dense_capacity(N)
    return DenseOperator(np.eye(1 << N, dtype=np.complex128), frame, frame)


def inner(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    if a.dim != b.dim:
        raise SpecError("state dimensions differ", code="SHAPE")
    _check_frames(a.frame, b.frame)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def apply_dense(op: DenseOperator, psi: StateVector) -> StateVector:
    if op.dim != psi.dim:
        raise SpecError("operator and state dimensions differ", code="SHAPE")
    _check_frames(op.col_frame, psi.frame)
    return StateVector(op.entries @ psi.amplitudes, op.row_frame)


def compose_dense(a: DenseOperator, b: DenseOperator) -> DenseOperator:
    """``a @ b``; ``a``'s column frame must match ``b``'s row frame."""
    if a.dim != b.dim:
        raise SpecError("operator dimensions differ", code="SHAPE")
    _check_frames(a.col_frame, b.row_frame)
    return DenseOperator(a.entries @ b.entries, a.row_frame, b.col_frame)


def adjoint_dense(a: DenseOperator) -> DenseOperator:
    return DenseOperator(a.entries.conj().T, a.col_frame, a.row_frame)
