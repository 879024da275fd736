"""Mixed position/momentum qubit bases and the quantum baker's map B_n.

Frame ``nu`` is the orthonormal basis ``|xi_1 ... xi_nu . xi_{nu+1} ... xi_N>``
whose first ``nu`` symbols are momentum-like and the rest position bits.
A frame-``nu`` ``StateVector`` holds coordinates in that basis, indexed by
``f = sum(xi_l * 2**(N - l))``; frame 0 holds plain position amplitudes.

Two independent routes are provided:

* ``basis_state`` builds each basis vector literally as a tensor product of
  single-qubit factors; ``frame_dense`` stacks those columns (oracle path);
* ``frame_apply`` uses the closed form of the same matrix, an antiperiodic
  DFT on the momentum bits, evaluated with FFTs (fast path).

Closed form: with ``A = sum_{i<=nu} xi_i 2**(i-1)`` (momentum bits read
least-significant first) and ``R`` the trailing ``N - nu`` bits of ``f``, the
basis vector sits at position indices ``R * 2**nu + Q`` with amplitude
``2**(-nu/2) * exp(2j*pi*(Q + 1/2)*(A + 1/2) / 2**nu)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .bitcore import BitString, binary_fraction
from .errors import FrameMismatchError, SpecError
from .hilbert import (
    DenseOperator,
    StateVector,
    adjoint_dense,
    check_dense_capacity,
)


@dataclass(frozen=True)
class BakerParams:
    N: int
    n: int

    def __post_init__(self):
        if self.N < 1:
            raise SpecError(f"N={self.N} must be >= 1", code="RANGE")
        if not 0 <= self.n <= self.N - 1:
            raise SpecError(f"n={self.n} outside 0..{self.N - 1}", code="RANGE")

    @property
    def D(self) -> int:
        return 1 << self.N


@dataclass(frozen=True)
class FrameTransform:
    """``to_frame=True`` maps position amplitudes to frame-``nu`` coordinates."""

    N: int
    nu: int
    to_frame: bool = True

    def __post_init__(self):
        if not 0 <= self.nu <= self.N:
            raise SpecError(f"frame {self.nu} outside 0..{self.N}", code="RANGE")

    @property
    def source(self) -> int:
        return 0 if self.to_frame else self.nu

    @property
    def target(self) -> int:
        return self.nu if self.to_frame else 0

    def inverse(self) -> "FrameTransform":
        return FrameTransform(self.N, self.nu, not self.to_frame)


def _phase(frac: Fraction, scale: int = 1) -> complex:
    """``exp(i*pi*scale*frac)`` reduced mod 2 first so large labels stay exact."""
    x = (frac * scale) % 2
    return cmath.exp(1j * math.pi * float(x))


# --- literal construction (oracle path) -------------------------------------


def basis_state(params: BakerParams | int, nu: int, xi: BitString | str) -> StateVector:
    """Frame-``nu`` basis vector with label ``xi``, as position amplitudes.

    Built as the explicit tensor product: a global phase, the position qubits
    ``xi_{nu+1} ... xi_N`` in the leading slots, then one Fourier qubit
    ``|0> + exp(2 pi i 0.xi_j...xi_1 1)|1>`` per ``j = 1..nu``.
    """
    N = params.N if isinstance(params, BakerParams) else int(params)
    if isinstance(xi, str):
        xi = BitString.from_str(xi)
    if len(xi) != N:
        raise SpecError(f"label has {len(xi)} bits, expected {N}", code="SHAPE")
    if not 0 <= nu <= N:
        raise SpecError(f"frame {nu} outside 0..{N}", code="RANGE")
    bits = list(xi)
    head = bits[:nu]
    glob = 2.0 ** (-nu / 2) * _phase(binary_fraction(head[::-1]))
    out = np.array([glob], dtype=np.complex128)
    for b in bits[nu:]:
        out = np.kron(out, np.array([1.0 - b, float(b)], dtype=np.complex128))
    for j in range(1, nu + 1):
        qubit = np.array([1.0, _phase(binary_fraction(head[:j][::-1]), 2)], dtype=np.complex128)
        out = np.kron(out, qubit)
    return StateVector(out, 0)


@lru_cache(maxsize=16)
def frame_dense(N: int, nu: int) -> DenseOperator:
    """Matrix whose column ``f`` is ``basis_state(nu, f)`` for nu >= 1.

    Frame 0 coordinates are plain position amplitudes, so ``nu = 0`` gives the
    identity (the basis vectors ``|.xi>`` themselves carry a factor ``i``).
    """
    check_dense_capacity(N)
    D = 1 << N
    if nu == 0:
        return DenseOperator(np.eye(D, dtype=np.complex128), 0, 0)
    cols = [basis_state(N, nu, BitString(f, N)).amplitudes for f in range(D)]
    return DenseOperator(np.stack(cols, axis=1), 0, nu)


# --- closed form (fast path) -------------------------------------------------


def bit_reverse_table(width: int) -> np.ndarray:
    idx = np.arange(1 << width, dtype=np.int64)
    out = np.zeros_like(idx)
    for b in range(width):
        out |= ((idx >> b) & 1) << (width - 1 - b)
    return out


def adft(x: np.ndarray, axis: int = 0) -> np.ndarray:
    """Antiperiodic DFT ``F[Q, A] = M**-0.5 exp(2 pi i (Q+1/2)(A+1/2) / M)``."""
    M = x.shape[axis]
    shape = [1] * x.ndim
    shape[axis] = M
    ramp = np.exp(1j * np.pi * np.arange(M) / M).reshape(shape)
    y = np.fft.ifft(x * ramp, axis=axis, norm="ortho")
    return (np.exp(1j * np.pi / (2 * M)) * ramp) * y


def adft_inv(y: np.ndarray, axis: int = 0) -> np.ndarray:
    M = y.shape[axis]
    shape = [1] * y.ndim
    shape[axis] = M
    ramp = np.exp(-1j * np.pi * np.arange(M) / M).reshape(shape)
    x = np.fft.fft(y * ramp, axis=axis, norm="ortho")
    return (np.exp(-1j * np.pi / (2 * M)) * ramp) * x


def adft_matrix(M: int) -> np.ndarray:
    q = np.arange(M) + 0.5
    return np.exp(2j * np.pi * np.outer(q, q) / M) / math.sqrt(M)


def from_frame(coords: np.ndarray, N: int, nu: int) -> np.ndarray:
    """Frame-``nu`` coordinates to position amplitudes."""
    if nu == 0:
        return np.array(coords, dtype=np.complex128, copy=True)
    M, rest = 1 << nu, 1 << (N - nu)
    rev = bit_reverse_table(nu)
    grid = np.asarray(coords, dtype=np.complex128).reshape(M, rest)[rev]  # rows by A
    return adft(grid, axis=0).T.reshape(-1)  # [Q, R] -> index R*M + Q


def to_frame(amps: np.ndarray, N: int, nu: int) -> np.ndarray:
    """Position amplitudes to frame-``nu`` coordinates."""
    if nu == 0:
        return np.array(amps, dtype=np.complex128, copy=True)
    M, rest = 1 << nu, 1 << (N - nu)
    rev = bit_reverse_table(nu)
    grid = adft_inv(np.asarray(amps, dtype=np.complex128).reshape(rest, M).T, axis=0)
    return grid[rev].reshape(-1)  # rev is its own inverse


def frame_apply(t: FrameTransform, psi: StateVector) -> StateVector:
    if psi.N != t.N:
        raise SpecError(f"state has N={psi.N}, transform N={t.N}", code="SHAPE")
    if psi.frame != t.source:
        raise FrameMismatchError(f"state in frame {psi.frame}, transform expects {t.source}")
    fn = to_frame if t.to_frame else from_frame
    return StateVector(fn(psi.amplitudes, t.N, t.nu), t.target)


# --- the map -----------------------------------------------------------------


def _dot_phase(n: int) -> complex:
    # <xi|_0 = -i <q|: only B_0 sees the frame-0 label phase
    return -1j if n == 0 else 1.0


def baker_apply(params: BakerParams, psi: StateVector) -> StateVector:
    """``B_n psi`` with output in the input's frame (0 or n)."""
    N, n = params.N, params.n
    if psi.N != N:
        raise SpecError(f"state has N={psi.N}, map N={N}", code="SHAPE")
    c = _dot_phase(n)
    if psi.frame == 0:
        return StateVector(c * from_frame(to_frame(psi.amplitudes, N, n), N, n + 1), 0)
    if psi.frame == n:
        return StateVector(c * to_frame(from_frame(psi.amplitudes, N, n + 1), N, n), n)
    raise FrameMismatchError(f"baker map B_{n} accepts frames 0 or {n}, got {psi.frame}")


def baker_dense(params: BakerParams) -> DenseOperator:
    """``sum_xi |xi>_{n+1} <xi|_n`` in position representation, from oracle columns."""
    N, n = params.N, params.n
    check_dense_capacity(N)
    G_next = frame_dense(N, n + 1).entries
    G_here = frame_dense(N, n).entries
    B = _dot_phase(n) * (G_next @ G_here.conj().T)
    return DenseOperator(B, 0, 0)


def frame_overlap_dense(params: BakerParams) -> DenseOperator:
    """``S = G_n^dag G_{n+1}``: the map written in frame-n coordinates."""
    N, n = params.N, params.n
    check_dense_capacity(N)
    S = _dot_phase(params.n) * (frame_dense(N, n).entries.conj().T @ frame_dense(N, n + 1).entries)
    return DenseOperator(S, n, n)


@dataclass(frozen=True)
class UnitarityReport:
    max_deviation: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_deviation <= self.tol


def verify_unitarity(op: DenseOperator | FrameTransform | BakerParams, tol: float = 1e-12) -> UnitarityReport:
    """``max |(U^dag U - I)_ij|`` over the full index set."""
    if isinstance(op, FrameTransform):
        U = frame_dense(op.N, op.nu)
        if op.to_frame:
            U = adjoint_dense(U)
        mat = U.entries
    elif isinstance(op, BakerParams):
        mat = baker_dense(op).entries
    else:
        mat = op.entries
    dev = np.abs(mat.conj().T @ mat - np.eye(mat.shape[0]))
    return UnitarityReport(float(dev.max()), tol)


# --- reduced momentum-register kernel (used by the branch engine) -----------


@lru_cache(maxsize=None)
def _step_tables(M: int) -> tuple[np.ndarray, ...]:
    q2 = np.arange(2 * M)
    pre = np.exp(1j * np.pi * np.arange(M) / (2 * M))
    post = np.exp(1j * np.pi / (4 * M)) * np.exp(1j * np.pi * q2 / (2 * M))
    # the upper half of the (n+1)-bit register only adds a phase i(-1)^Q'
    flip_phase = 1j * (1 - 2 * (q2 & 1))
    pre_inv = np.exp(-1j * np.pi * np.arange(M) / M)
    post_inv = np.exp(-1j * np.pi / (2 * M)) * pre_inv
    return pre, post, flip_phase, pre_inv, post_inv


def momentum_step(amps: np.ndarray, flip: np.ndarray | None = None) -> np.ndarray:
    """One map step on the momentum register of frame-n coordinates.

    ``amps`` has shape ``(C, 2**n)``: row ``c`` is the momentum part (indexed
    by ``A``) of a frame-n vector with a fixed position integer ``P``.
    ``flip[c]`` is the top bit of that ``P``, which becomes the new most
    significant momentum bit. Returns shape ``(2, C, 2**n)``: entry ``[o]``
    is the momentum part attached to the shifted position
    ``((P << 1) mod 2**(N-n)) | o``.

    Same arithmetic as ``adft_inv(half of adft(padded))`` with the phase
    ramps cached and applied in place.
    """
    C, M = amps.shape
    pre, post, flip_phase, pre_inv, post_inv = _step_tables(M)
    padded = np.zeros((C, 2 * M), dtype=np.complex128)
    np.multiply(amps, pre, out=padded[:, :M])
    phi = np.fft.ifft(padded, axis=1, norm="ortho")
    del padded
    phi *= post
    if flip is not None and np.any(flip):
        phi[flip] *= flip_phase
    halves = phi.reshape(C, 2, M)
    halves *= pre_inv
    out = np.fft.fft(halves, axis=2, norm="ortho")
    out *= post_inv
    return out.transpose(1, 0, 2)
