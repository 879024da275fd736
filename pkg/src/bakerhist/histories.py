"""Branch-tree evaluation of decoherence functionals for coarse-grained histories.

The engine never forms 2^N-dimensional objects. A frame-n basis index splits
into a momentum integer ``A`` (n bits) and a position integer ``P``; one map
step mixes ``A`` with the top bit of ``P`` and shifts ``P`` left, feeding in
a fresh bottom bit ``o`` (see ``bakermap.momentum_step``). A branch is
therefore stored as blocks: for each position integer ``P`` a matrix with one
row per ensemble member and one column per momentum integer inside the
current cell.

Every member of the initial cell is a frame-n basis state of weight
``w = 2**-(l + r + sum(m))``, so ``D[a, b] = w * sum_members <branch_b, branch_a>``.

Subtrees below depth 1 can be evaluated on a thread pool. Only the reduction
order is fixed (sorted by cell code); the execution order is not, and the
results are identical for any thread count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .bakermap import BakerParams, bit_reverse_table, momentum_step
from .bitcore import CellLabel, CoarseGrainingSpec, HistoryLabel
from .errors import CapacityError, InvariantViolation, NegativeProbabilityError, SpecError
from .hilbert import StateVector
from .partitions import InitialState, Partition

Codes = tuple[int, ...]
FULL_GRAM_LIMIT = 4096
SAMPLED_PAIRS = 100_000
MASS_TOL = 1e-6


@dataclass(frozen=True)
class EngineConfig:
    """Engine knobs.

    ``prune_tol``: a member whose branch has squared norm below this (i.e.
    relative to its weight) is dropped from that branch.
    ``expand_tol``: prefixes with probability below this are recorded but not
    expanded; their mass counts as pruned at every deeper level. 0 expands all.
    ``keep_tol``: which nodes keep their branch blocks for off-diagonal work;
    ``None`` keeps all, a float applies to every depth, a sequence is per depth.
    ``anchors``: stored nodes (with probabilities) to overlap every visited
    node against; see ``run_anchored``.
    """

    prune_tol: float = 1e-9
    expand_tol: float = 0.0
    threads: int = 1
    keep_tol: float | Sequence[float] | None = None
    max_nodes: int = 2_000_000
    anchors: Mapping[Codes, tuple[float, "NodeData"]] | None = None

    def keep_threshold(self, depth: int) -> float:
        if self.keep_tol is None:
            return -1.0
        if isinstance(self.keep_tol, (int, float)):
            return float(self.keep_tol)
        return float(self.keep_tol[depth])


@dataclass
class NodeData:
    """Branch blocks of one history prefix.

    ``mval`` is the momentum part of the last cell code; block columns are the
    momentum integers ``rows_of[mval]``. ``groups`` holds
    ``(P, member_ids, block)`` triples sorted by ``P``, ``block`` of shape
    ``(len(member_ids), len(rows_of[mval]))``.
    """

    mval: int
    groups: list[tuple[int, np.ndarray, np.ndarray]]

    @property
    def columns(self) -> int:
        return sum(ids.size for _, ids, _ in self.groups)


@dataclass
class _Subtree:
    probs: dict[Codes, float] = field(default_factory=dict)
    dropped: list[float] = field(default_factory=list)
    nodes: dict[Codes, NodeData] = field(default_factory=dict)
    overlap: dict[int, "Overlap"] = field(default_factory=dict)


@dataclass(frozen=True, order=True)
class Overlap:
    """Largest normalized overlap seen at one depth and the pair realizing it."""

    value: float
    anchor: Codes = ()
    partner: Codes = ()


def _better(a: Overlap | None, b: Overlap) -> Overlap:
    # ties go to the lexicographically smallest pair, whatever the visit order
    if a is None or b.value > a.value:
        return b
    if b.value == a.value and (b.anchor, b.partner) < (a.anchor, a.partner):
        return b
    return a


class _Kernel:
    """Static tables for one (spec, x) run."""

    def __init__(self, partition: Partition, init: InitialState, cfg: EngineConfig, k: int):
        spec = partition.spec
        self.spec, self.cfg, self.k = spec, cfg, k
        self.N, self.n = spec.N, spec.n
        self.pbits = spec.N - spec.n
        self.pmask = (1 << self.pbits) - 1
        self.rev = bit_reverse_table(self.n)
        self.mcode, self.pcode = partition.split_codes()
        self.rows_of = {int(v): np.nonzero(self.mcode == v)[0] for v in np.unique(self.mcode)}
        self.mvals = sorted(self.rows_of)
        self.sel_of = {v: _as_slice(r) for v, r in self.rows_of.items()}
        self.weight = float(init.weight)
        self.n_members = len(init.members)
        self.anchor_index: dict[tuple[int, int], list[tuple[Codes, float, NodeData]]] = {}
        for codes, (p, data) in sorted((cfg.anchors or {}).items()):
            if codes:
                self.anchor_index.setdefault((len(codes), codes[-1]), []).append((codes, p, data))

    def root(self, members: np.ndarray) -> NodeData:
        f = np.asarray(members, dtype=np.int64)
        A = self.rev[f >> self.pbits]
        P = f & self.pmask
        mvals = np.unique(self.mcode[A])
        if mvals.size != 1:
            raise InvariantViolation("initial members span several momentum cells")
        mval = int(mvals[0])
        rows = self.rows_of[mval]
        groups = []
        for p in np.unique(P):
            ids = np.nonzero(P == p)[0]
            block = np.zeros((ids.size, rows.size), dtype=np.complex128)
            block[np.arange(ids.size), np.searchsorted(rows, A[ids])] = 1.0
            groups.append((int(p), ids.astype(np.int64), block))
        return NodeData(mval, groups)

    def step(self, node: NodeData) -> tuple[list[tuple[int, float, NodeData]], float]:
        """Apply one map step and split by cell.

        Returns ``(children, dropped)``: children as ``(cell_code, p, data)``
        sorted by code, and the weighted mass removed by member pruning.
        """
        rows = self.sel_of[node.mval]
        total = node.columns
        full = np.zeros((total, 1 << self.n), dtype=np.complex128)
        flip = np.zeros(total, dtype=bool)
        spans = []
        start = 0
        for P, ids, block in node.groups:
            stop = start + ids.size
            full[start:stop, rows] = block
            flip[start:stop] = bool(P >> (self.pbits - 1))
            spans.append((P, ids, start, stop))
            start = stop
        out = momentum_step(full, flip)
        del full

        # gather by shifted position integer; parents landing on the same P'
        # are summed per member
        landed: dict[int, list[tuple[np.ndarray, np.ndarray]]] = {}
        for P, ids, a, b in spans:
            for o in (0, 1):
                P2 = ((P << 1) & self.pmask) | o
                landed.setdefault(P2, []).append((ids, out[o, a:b]))

        # split by cell: momentum part from columns, position part from P'
        raw: dict[int, list[tuple[int, np.ndarray, np.ndarray, np.ndarray]]] = {}
        mval_of: dict[int, int] = {}
        for P2 in sorted(landed):
            parts = landed[P2]
            ids, block = parts[0] if len(parts) == 1 else _merge_rows(parts)
            pc = int(self.pcode[P2])
            power = block.real**2 + block.imag**2
            for mv in self.mvals:
                r = self.sel_of[mv]
                norms = power[:, r].sum(axis=1)
                if not np.any(norms > 0):
                    continue
                raw.setdefault(mv | pc, []).append((P2, ids, block[:, r], norms))
                mval_of[mv | pc] = mv

        children = []
        dropped = 0.0
        tol = self.cfg.prune_tol
        for code in sorted(raw):
            parts = raw[code]
            member_norm = np.zeros(self.n_members)
            for _, ids, _, norms in parts:
                member_norm += np.bincount(ids, weights=norms, minlength=self.n_members)
            cut = (member_norm > 0) & (member_norm < tol)
            if np.any(cut):
                dropped += self.weight * float(member_norm[cut].sum())
            alive = (member_norm > 0) & ~cut
            if not np.any(alive):
                continue
            groups = []
            for P2, ids, sub, norms in parts:
                keep = alive[ids] & (norms > 0)
                if np.all(keep):
                    groups.append((P2, ids, sub))
                elif np.any(keep):
                    groups.append((P2, ids[keep], sub[keep]))
            p = self.weight * float(member_norm[alive].sum())
            children.append((code, p, NodeData(mval_of[code], groups)))
        return children, dropped

    def expand(self, codes: Codes, p: float, data: NodeData) -> _Subtree:
        """Depth-first expansion of one subtree in sorted cell order.

        ``dropped[j]`` is the mass first lost at depth ``j``; the caller makes
        it cumulative.
        """
        k = self.k
        out = _Subtree(dropped=[0.0] * (k + 1))
        stack = [(codes, p, data)]
        while stack:
            codes, p, data = stack.pop()
            depth = len(codes)
            out.probs[codes] = p
            if codes and p > 0:
                for a, pa, adata in self.anchor_index.get((depth, codes[-1]), ()):
                    if a != codes:
                        v = abs(self.weight * _block_inner(adata, data)) / math.sqrt(pa * p)
                        out.overlap[depth] = _better(out.overlap.get(depth), Overlap(v, a, codes))
            if len(out.probs) > self.cfg.max_nodes:
                raise CapacityError(f"more than {self.cfg.max_nodes} live branches", limit=self.cfg.max_nodes)
            if p >= self.cfg.keep_threshold(depth):
                out.nodes[codes] = _compact(data)
            if depth == k:
                continue
            if p < self.cfg.expand_tol:
                out.dropped[depth + 1] += p
                continue
            children, lost = self.step(data)
            out.dropped[depth + 1] += lost
            for code, cp, cdata in reversed(children):
                stack.append((codes + (code,), cp, cdata))
        return out


def _block_inner(a: NodeData, b: NodeData) -> complex:
    """``sum_members <branch_b, branch_a>`` (unweighted)."""
    if a.mval != b.mval:
        return 0j  # disjoint momentum rows
    right = {P: (ids, block) for P, ids, block in b.groups}
    acc = 0j
    for P, ids_a, block_a in a.groups:
        if P not in right:
            continue
        ids_b, block_b = right[P]
        if ids_a.size == ids_b.size and np.array_equal(ids_a, ids_b):
            acc += complex(np.vdot(block_b, block_a))
            continue
        _, ia, ib = np.intersect1d(ids_a, ids_b, assume_unique=True, return_indices=True)
        if ia.size:
            acc += complex(np.vdot(block_b[ib], block_a[ia]))
    return acc


def _compact(data: NodeData) -> NodeData:
    # blocks may be views into a parent's step output; detach stored ones
    return NodeData(data.mval, [(P, ids, np.ascontiguousarray(b)) for P, ids, b in data.groups])


def _as_slice(rows: np.ndarray) -> slice | np.ndarray:
    if rows.size and np.all(np.diff(rows) == 1):
        return slice(int(rows[0]), int(rows[-1]) + 1)
    return rows


def _merge_rows(parts: Sequence[tuple[np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    ids = np.concatenate([p[0] for p in parts])
    block = np.concatenate([p[1] for p in parts], axis=0)
    order = np.argsort(ids, kind="stable")
    ids, block = ids[order], block[order]
    if np.all(ids[1:] != ids[:-1]):
        return ids, block
    uniq, inv = np.unique(ids, return_inverse=True)
    acc = np.zeros((uniq.size, block.shape[1]), dtype=np.complex128)
    np.add.at(acc, inv, block)
    return uniq, acc


@dataclass
class BranchTree:
    """Depth-``k`` tree of history prefixes for one initial cell.

    ``probs[j]`` maps every recorded depth-``j`` prefix (a tuple of cell codes)
    to its probability; ``pruned_by_depth[j]`` is the mass discarded up to
    depth ``j``, so ``sum(probs[j].values()) + pruned_by_depth[j] == 1``.
    """

    spec: CoarseGrainingSpec
    init: InitialState
    k: int
    probs: list[dict[Codes, float]]
    pruned_by_depth: list[float]
    nodes: dict[Codes, NodeData]
    rows_of: dict[int, np.ndarray]
    runtime_ms: float = 0.0
    overlap: dict[int, Overlap] | None = None  # filled by run_anchored

    @property
    def pruned_mass(self) -> float:
        return self.pruned_by_depth[self.k]

    @property
    def weight(self) -> float:
        return float(self.init.weight)

    def probabilities(self, depth: int | None = None) -> dict[Codes, float]:
        return self.probs[self.k if depth is None else depth]

    def mass_defect(self, depth: int | None = None) -> float:
        j = self.k if depth is None else depth
        return abs(math.fsum(self.probs[j].values()) + self.pruned_by_depth[j] - 1.0)

    def branch_vector(self, history: Codes | HistoryLabel, member: int) -> StateVector:
        """Full frame-n branch vector (unweighted) of one member."""
        codes = history.codes if isinstance(history, HistoryLabel) else tuple(history)
        N, n = self.spec.N, self.spec.n
        amps = np.zeros(1 << N, dtype=np.complex128)
        node = self.nodes.get(codes)
        if node is None:
            if codes in self.probs[len(codes)]:
                raise KeyError(f"branch blocks for {codes} were not kept")
            return StateVector(amps, n)
        top = bit_reverse_table(n)[self.rows_of[node.mval]].astype(np.int64) << (N - n)
        for P, ids, block in node.groups:
            hit = np.searchsorted(ids, member)
            if hit < ids.size and ids[hit] == member:
                amps[top | P] += block[hit]
        return StateVector(amps, n)


def run_branch_tree(
    init: InitialState,
    partition: Partition,
    baker: BakerParams,
    k: int,
    config: EngineConfig = EngineConfig(),
) -> BranchTree:
    spec = partition.spec
    if baker.N != spec.N or baker.n != spec.n:
        raise SpecError(f"baker (N={baker.N}, n={baker.n}) does not match spec (N={spec.N}, n={spec.n})", code="RANGE")
    if init.spec != spec:
        raise SpecError("initial state and partition use different specs", code="SHAPE")
    if k < 0:
        raise SpecError("k must be non-negative", code="RANGE")
    t0 = time.perf_counter()
    kern = _Kernel(partition, init, config, k)
    root = kern.root(init.members)

    probs: list[dict[Codes, float]] = [{} for _ in range(k + 1)]
    dropped = [0.0] * (k + 1)
    nodes: dict[Codes, NodeData] = {}
    overlap: dict[int, Overlap] = {}
    probs[0][()] = float(init.trace)
    if config.keep_threshold(0) <= 1.0:
        nodes[()] = root
    if k > 0:
        first, lost = kern.step(root)
        dropped[1] += lost
        jobs = [((code,), p, data) for code, p, data in first]
        if config.threads > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                subtrees = list(pool.map(lambda job: kern.expand(*job), jobs))
        else:
            subtrees = [kern.expand(*job) for job in jobs]
        for sub in subtrees:  # fixed reduction order: sorted first-step cell
            for codes, p in sub.probs.items():
                probs[len(codes)][codes] = p
            for j, v in enumerate(sub.dropped):
                dropped[j] += v
            nodes.update(sub.nodes)
            for j, ov in sub.overlap.items():
                overlap[j] = _better(overlap.get(j), ov)
        total = sum(len(d) for d in probs)
        if total > config.max_nodes:
            raise CapacityError(f"{total} live branches exceed limit {config.max_nodes}", limit=config.max_nodes)
    pruned = list(np.cumsum(dropped))
    probs = [dict(sorted(d.items())) for d in probs]
    tree = BranchTree(spec, init, k, probs, [float(v) for v in pruned], nodes, kern.rows_of, _ms(t0))
    if config.anchors is not None:
        tree.overlap = overlap
    return tree


def run_anchored(
    init: InitialState,
    partition: Partition,
    baker: BakerParams,
    k: int,
    thresholds: Sequence[float],
    config: EngineConfig = EngineConfig(),
) -> BranchTree:
    """Two passes: find the support, then overlap every prefix against it.

    Pass one keeps the blocks of prefixes with ``p > thresholds[depth]`` (the
    support). Pass two replays the same tree with those nodes as anchors and
    records, per depth, the largest ``|D[a, b]| / sqrt(p_a p_b)`` over anchors
    ``a`` and every recorded prefix ``b != a``. Only pairs with equal last
    cells can be nonzero, so no other blocks need to be stored.
    """
    first = run_branch_tree(init, partition, baker, k, replace(config, keep_tol=tuple(thresholds), anchors=None))
    anchors = {
        codes: (p, first.nodes[codes])
        for j in range(1, k + 1)
        for codes, p in first.probs[j].items()
        if p > thresholds[j] and codes in first.nodes
    }
    second = run_branch_tree(init, partition, baker, k, replace(config, keep_tol=math.inf, anchors=anchors))
    if second.probs != first.probs:
        raise InvariantViolation("replayed tree differs from the first pass")
    first.overlap = {j: second.overlap.get(j, Overlap(0.0)) for j in range(1, k + 1)}
    first.runtime_ms += second.runtime_ms
    return first


def _ms(t0: float) -> float:
    return (time.perf_counter() - t0) * 1000.0


# --- decoherence functional -------------------------------------------------


def gram_entry(tree: BranchTree, alpha: Codes, beta: Codes) -> complex:
    """``D[alpha, beta] = w * sum_members <branch_beta, branch_alpha>``."""
    a, b = tree.nodes.get(tuple(alpha)), tree.nodes.get(tuple(beta))
    if a is None or b is None:
        missing = alpha if a is None else beta
        if tuple(missing) in tree.probs[len(missing)]:
            raise KeyError(f"branch blocks for {missing} were not kept")
        return 0j
    return tree.weight * _block_inner(a, b)


def decoherence_matrix(tree: BranchTree, histories: Sequence[Codes]) -> np.ndarray:
    h = [tuple(c) for c in histories]
    D = np.zeros((len(h), len(h)), dtype=np.complex128)
    for i, a in enumerate(h):
        for j in range(i, len(h)):
            D[i, j] = gram_entry(tree, a, h[j])
            D[j, i] = np.conj(D[i, j])
    return D


@dataclass(frozen=True)
class EpsilonResult:
    epsilon: float
    defined: bool
    mode: str
    pairs: int
    worst: tuple[Codes, Codes] | None = None
    seed: int | None = None


def gram_offdiagonal(
    tree: BranchTree,
    histories: Sequence[Codes] | None = None,
    mode: str = "auto",
    count: int = SAMPLED_PAIRS,
    seed: int = 0,
    depth: int | None = None,
    full_limit: int = FULL_GRAM_LIMIT,
) -> EpsilonResult:
    """Largest normalized off-diagonal ``|D[a,b]| / sqrt(D[a,a] D[b,b])``.

    ``histories`` defaults to every recorded prefix at ``depth``. Pairs whose
    last cells differ vanish exactly and are skipped in full mode.
    """
    j = tree.k if depth is None else depth
    hist = sorted(tree.probs[j]) if histories is None else [tuple(h) for h in histories]
    if j == 0 or len(hist) < 2:
        return EpsilonResult(0.0, False, "none", 0)
    if mode == "auto":
        mode = "full" if len(hist) <= full_limit else "sampled"
    diag = {h: gram_entry(tree, h, h).real for h in hist}
    best, worst, pairs = 0.0, None, 0

    def consider(a: Codes, b: Codes) -> None:
        nonlocal best, worst, pairs
        pairs += 1
        den = math.sqrt(diag[a] * diag[b])
        if den <= 0:
            return
        v = abs(gram_entry(tree, a, b)) / den
        if v > best:
            best, worst = v, (a, b)

    if mode == "full":
        if len(hist) > full_limit:
            raise CapacityError(f"full Gram over {len(hist)} histories exceeds {full_limit}")
        by_last: dict[int, list[Codes]] = {}
        for h in hist:
            by_last.setdefault(h[-1], []).append(h)
        for group in by_last.values():
            for i, a in enumerate(group):
                for b in group[i + 1:]:
                    consider(a, b)
        return EpsilonResult(best, True, "full", pairs, worst)
    if mode != "sampled":
        raise SpecError(f"unknown off-diagonal mode {mode!r}", code="SHAPE")
    rng = np.random.default_rng(seed)
    for _ in range(count):
        i, k2 = rng.choice(len(hist), size=2, replace=False)
        a, b = hist[int(i)], hist[int(k2)]
        if a[-1] == b[-1]:
            consider(a, b)
        else:
            pairs += 1
    return EpsilonResult(best, True, "sampled", pairs, worst, seed)


# --- entropy and reports ----------------------------------------------------


def entropy(probabilities: Mapping | Sequence[float] | np.ndarray) -> float:
    """Shannon entropy in bits; entries below 1e-15 contribute nothing."""
    values = list(probabilities.values()) if isinstance(probabilities, Mapping) else list(probabilities)
    terms = []
    for p in values:
        p = float(p)
        if p < -1e-12:
            raise NegativeProbabilityError(f"negative probability {p}", value=p)
        if p >= 1e-15:
            terms.append(-p * math.log2(p))
    if math.fsum(max(v, 0.0) for v in values) > 1 + MASS_TOL:
        raise InvariantViolation("probabilities sum above 1")
    return math.fsum(terms)


@dataclass
class DecoherenceReport:
    spec: CoarseGrainingSpec
    x: CellLabel
    k: int
    probabilities: dict[HistoryLabel, float]
    epsilon: float
    epsilon_defined: bool
    epsilon_mode: str
    pruned_mass: float
    entropy_bits: float
    support_size: int
    threshold: float
    support: list[HistoryLabel]
    runtime_ms: float = 0.0
    epsilon_support: float = 0.0  # pairs inside the support only
    worst_pair: tuple[HistoryLabel, HistoryLabel] | None = None

    @property
    def total_probability(self) -> float:
        return math.fsum(self.probabilities.values())


def build_report(
    tree: BranchTree,
    depth: int | None = None,
    threshold: float = 0.0,
    mode: str = "auto",
    seed: int = 0,
    count: int = SAMPLED_PAIRS,
) -> DecoherenceReport:
    """Probabilities, entropy and epsilon at one depth.

    The support is every history with ``p > threshold``. ``epsilon_support``
    is taken over pairs within the support. When the tree came from
    ``run_anchored`` with the same threshold, ``epsilon`` is the anchored value
    (support history against any recorded history); otherwise it equals
    ``epsilon_support``.
    """
    j = tree.k if depth is None else depth
    spec = tree.spec
    probs = tree.probs[j]
    total = math.fsum(probs.values())
    if abs(total + tree.pruned_by_depth[j] - 1.0) > MASS_TOL:
        raise InvariantViolation(f"mass defect {total + tree.pruned_by_depth[j] - 1.0:.3e} at depth {j}")
    support = [h for h, p in probs.items() if p > threshold]
    eps = gram_offdiagonal(tree, support, mode=mode, count=count, seed=seed, depth=j)
    value, defined, used, worst = eps.epsilon, eps.defined, eps.mode, eps.worst
    if tree.overlap is not None and j > 0:
        ov = tree.overlap[j]
        value, defined, used = max(ov.value, eps.epsilon), True, "anchored"
        worst = (ov.anchor, ov.partner) if ov.value >= eps.epsilon and ov.anchor else eps.worst
    labels = {HistoryLabel.from_codes(spec, h): p for h, p in probs.items()}
    return DecoherenceReport(
        spec=spec,
        x=tree.init.x,
        k=j,
        probabilities=labels,
        epsilon=value,
        epsilon_defined=defined,
        epsilon_mode=used,
        pruned_mass=tree.pruned_by_depth[j],
        entropy_bits=entropy(probs),
        support_size=len(support),
        threshold=threshold,
        support=[HistoryLabel.from_codes(spec, h) for h in support],
        runtime_ms=tree.runtime_ms,
        epsilon_support=eps.epsilon,
        worst_pair=None if worst is None else tuple(HistoryLabel.from_codes(spec, h) for h in worst),
    )


def diagonal_probabilities(tree: BranchTree, depth: int | None = None) -> dict[HistoryLabel, float]:
    return {HistoryLabel.from_codes(tree.spec, h): p for h, p in tree.probabilities(depth).items()}


@dataclass(frozen=True)
class ShiftCheck:
    allowed_hits: int
    disallowed_hits: int
    disallowed_mass: float
    allowed_mass: float
    classified: int


def shift_support_check(report: DecoherenceReport, spec: CoarseGrainingSpec, x: CellLabel, threshold: float) -> ShiftCheck:
    """Classify histories with ``p > threshold`` by the shift condition.

    ``disallowed_mass`` and ``allowed_mass`` sum over every recorded history,
    not only those above the threshold.
    """
    from .analytic import shift_allowed

    allowed_hits = disallowed_hits = 0
    bad, good = [], []
    for h, p in report.probabilities.items():
        ok = shift_allowed(spec, x, h)
        (good if ok else bad).append(p)
        if p > threshold:
            if ok:
                allowed_hits += 1
            else:
                disallowed_hits += 1
    return ShiftCheck(allowed_hits, disallowed_hits, math.fsum(bad), math.fsum(good), allowed_hits + disallowed_hits)
