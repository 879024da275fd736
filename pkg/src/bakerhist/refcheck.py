"""Dense reference evaluation of the decoherence functional (small N only).

Everything here is built from explicit 2^N x 2^N matrices: the map from
``bakermap.baker_dense``, projectors ``G_n diag(mask) G_n^dag`` from the
literal basis columns, and the initial density matrix of one cell. Class
operators keep the Heisenberg-picture tail ``B^{-t} P B^{t}`` so that its
cancellation against the reduced chain ``P_k B ... P_1 B`` is checked rather
than assumed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bakermap import BakerParams, baker_dense, frame_dense
from .bitcore import CellLabel, CoarseGrainingSpec, HistoryLabel
from .errors import CapacityError, SpecError
from .hilbert import check_dense_capacity
from .histories import EngineConfig, gram_entry, run_branch_tree
from .partitions import build_partition, initial_ensemble

ORACLE_N_MAX = 8
ORACLE_HISTORY_LIMIT = 4096

Codes = tuple[int, ...]


@dataclass(frozen=True)
class DenseFunctional:
    histories: list[Codes]
    D: np.ndarray  # from U^dag-dressed class operators
    D_reduced: np.ndarray  # from the chain P_k B ... P_1 B

    def labels(self, spec: CoarseGrainingSpec) -> list[HistoryLabel]:
        return [HistoryLabel.from_codes(spec, h) for h in self.histories]

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.D - self.D.conj().T).max()) if self.D.size else 0.0

    def reduced_form_defect(self) -> float:
        return float(np.abs(self.D - self.D_reduced).max()) if self.D.size else 0.0

    def diagonal_sum(self) -> float:
        return float(np.real(np.trace(self.D)))


def _projectors(spec: CoarseGrainingSpec, G: np.ndarray) -> dict[int, np.ndarray]:
    part = build_partition(spec)
    idx = np.arange(1 << spec.N)
    out = {}
    for code in range(spec.cell_count):
        mask = part.contains(code, idx).astype(float)
        out[code] = (G * mask) @ G.conj().T
    return out


def dense_decoherence_functional(
    spec: CoarseGrainingSpec,
    x: CellLabel,
    baker: BakerParams,
    k: int,
    histories: Sequence[Codes | HistoryLabel] | None = None,
    n_max: int = ORACLE_N_MAX,
    history_limit: int = ORACLE_HISTORY_LIMIT,
) -> DenseFunctional:
    """``D[a, b] = Tr[C_a rho C_b^dag]`` over ``histories`` (all when None).

    The trace is taken in the eigenbasis of ``rho`` (the cell's frame-n basis
    vectors with weight ``w``), so only ``C_a v`` products are materialized.
    """
    if spec.N > n_max:
        raise CapacityError(f"dense oracle refused for N={spec.N} > {n_max}", N=spec.N)
    check_dense_capacity(spec.N)
    if (baker.N, baker.n) != (spec.N, spec.n):
        raise SpecError("baker parameters do not match the spec", code="RANGE")
    if histories is None:
        total = spec.cell_count**k
        if total > history_limit:
            raise CapacityError(f"{total} histories exceed oracle limit {history_limit}")
        hist = [tuple(c) for c in itertools.product(range(spec.cell_count), repeat=k)]
    else:
        hist = [h.codes if isinstance(h, HistoryLabel) else tuple(h) for h in histories]

    B = baker_dense(baker).entries
    G = frame_dense(spec.N, spec.n).entries
    P = _projectors(spec, G)
    init = initial_ensemble(spec, x)
    w = float(init.weight)
    V = G[:, init.members]  # eigenvectors of rho

    powers = [np.eye(1 << spec.N, dtype=np.complex128)]
    for _ in range(k):
        powers.append(B @ powers[-1])
    heis = {(t, c): powers[t].conj().T @ P[c] @ powers[t] for t in range(1, k + 1) for c in set(sum(hist, ()))}

    dressed, reduced = [], []
    for h in hist:
        C = np.eye(1 << spec.N, dtype=np.complex128)
        X = np.eye(1 << spec.N, dtype=np.complex128)
        for t, c in enumerate(h, start=1):
            C = heis[(t, c)] @ C
            X = P[c] @ B @ X
        dressed.append(C @ V)
        reduced.append(X @ V)

    def gram(vecs: list[np.ndarray]) -> np.ndarray:
        # [a, b] = w * sum_f <C_b v_f, C_a v_f>
        flat = np.stack([v.reshape(-1) for v in vecs])
        return w * (flat @ flat.conj().T)

    if not hist:
        empty = np.zeros((0, 0), dtype=np.complex128)
        return DenseFunctional([], empty, empty)
    return DenseFunctional(hist, gram(dressed), gram(reduced))


@dataclass(frozen=True)
class EngineComparison:
    max_abs_dev: float
    where: tuple[Codes, Codes] | None
    pruned_mass: float
    entries: int


def compare_engines(
    spec: CoarseGrainingSpec,
    x: CellLabel,
    baker: BakerParams,
    k: int,
    prune_tol: float = 0.0,
    floor: float = 1e-14,
) -> EngineComparison:
    """Entrywise max deviation between the dense and branch-tree functionals."""
    dense = dense_decoherence_functional(spec, x, baker, k)
    tree = run_branch_tree(initial_ensemble(spec, x), build_partition(spec), baker, k,
                           EngineConfig(prune_tol=prune_tol, keep_tol=None))
    recorded = tree.probs[k]
    worst, where = 0.0, None
    count = 0
    for i, a in enumerate(dense.histories):
        for j, b in enumerate(dense.histories):
            ref = dense.D[i, j]
            got = gram_entry(tree, a, b) if (a in recorded and b in recorded) else 0j
            if abs(ref) <= floor and abs(got) <= floor:
                continue
            count += 1
            dev = abs(ref - got)
            if dev > worst:
                worst, where = dev, (a, b)
    return EngineComparison(worst, where, tree.pruned_mass, count)
