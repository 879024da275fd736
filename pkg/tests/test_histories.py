"""Branch-tree engine: bookkeeping, pruning, epsilon, entropy and reports."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import bakerhist.histories as histories
from bakerhist.analytic import shift_allowed_codes
from bakerhist.bakermap import BakerParams, momentum_step
from bakerhist.bitcore import CellLabel, CoarseGrainingSpec, enumerate_cells, parse_spec
from bakerhist.errors import CapacityError, InvariantViolation, NegativeProbabilityError
from bakerhist.histories import (
    EngineConfig,
    build_report,
    decoherence_matrix,
    entropy,
    gram_offdiagonal,
    run_anchored,
    run_branch_tree,
    shift_support_check,
)
from bakerhist.partitions import build_partition, initial_ensemble
from bakerhist.refcheck import compare_engines

LOCAL = CoarseGrainingSpec(8, 5, 3, 2, (3,), ())
TWO = CoarseGrainingSpec(10, 5, 2, 2, (2, 2), (2,))


def tree_for(spec, x="", k=2, **cfg):
    label = CellLabel.parse(spec, x) if x else CellLabel.from_code(spec, 0)
    return run_branch_tree(initial_ensemble(spec, label), build_partition(spec), BakerParams(spec.N, spec.n), k,
                           EngineConfig(**cfg))


def test_depth_zero_tree():
    tree = tree_for(LOCAL, "101", k=0)
    assert tree.probs == [{(): 1.0}] and tree.pruned_mass == 0
    rep = build_report(tree)
    assert rep.entropy_bits == 0 and rep.epsilon == 0 and not rep.epsilon_defined


@pytest.mark.parametrize("spec", [LOCAL, TWO])
def test_exact_mass_conservation_without_pruning(spec):
    tree = tree_for(spec, k=3, prune_tol=0.0)
    for j in range(4):
        assert abs(math.fsum(tree.probs[j].values()) - 1.0) < 1e-12
    assert tree.pruned_by_depth == [0.0] * 4


def test_mass_bookkeeping_with_pruning_and_expand_tol():
    tree = tree_for(TWO, k=4, prune_tol=1e-6, expand_tol=1e-3)
    assert tree.pruned_mass > 0
    for j in range(5):
        assert tree.mass_defect(j) < 1e-9
    assert all(a <= b for a, b in zip(tree.pruned_by_depth, tree.pruned_by_depth[1:]))


def test_prune_soundness():
    exact = tree_for(TWO, k=3, prune_tol=0.0)
    pruned = tree_for(TWO, k=3, prune_tol=1e-9)
    for h, p in exact.probs[3].items():
        assert abs(pruned.probs[3].get(h, 0.0) - p) <= pruned.pruned_mass + 1e-15


def test_branch_vectors_follow_the_class_operator_chain():
    """One member's branch equals P_y2 S P_y1 S e_f built from dense frame-n matrices."""
    from bakerhist.bakermap import frame_overlap_dense

    spec = LOCAL
    tree = tree_for(spec, "110", k=2, prune_tol=0.0)
    S = frame_overlap_dense(BakerParams(spec.N, spec.n)).entries
    part = build_partition(spec)
    idx = np.arange(1 << spec.N)
    member = 3
    f = int(tree.init.members[member])
    h = max(tree.probs[2], key=tree.probs[2].get)
    v = np.zeros(1 << spec.N, dtype=complex)
    v[f] = 1
    for code in h:
        v = np.where(part.contains(code, idx), S @ v, 0)
    assert np.allclose(tree.branch_vector(h, member).amplitudes, v, atol=1e-12)


def test_gram_matches_dense_decoherence_functional():
    spec = CoarseGrainingSpec(8, 4, 1, 1, (2, 2), (2,))
    rep = compare_engines(spec, CellLabel.parse(spec, "10,01"), BakerParams(spec.N, spec.n), 2)
    assert rep.max_abs_dev < 1e-10 and rep.entries > 0


def test_fine_grained_partition_is_orthogonal_after_one_step():
    spec = CoarseGrainingSpec(6, 3, 0, 0, (6,), ())
    tree = tree_for(spec, "011010", k=1, prune_tol=0.0)
    eps = gram_offdiagonal(tree, mode="full")
    assert eps.defined and eps.epsilon <= 1e-10


def test_decoherence_matrix_is_hermitian_with_probability_diagonal():
    tree = tree_for(TWO, k=2, prune_tol=0.0)
    hs = sorted(tree.probs[2])[:40]
    D = decoherence_matrix(tree, hs)
    assert np.allclose(D, D.conj().T)
    assert np.allclose(np.diag(D).real, [tree.probs[2][h] for h in hs])


def test_sampled_offdiagonal_is_seeded():
    tree = tree_for(TWO, k=2, prune_tol=0.0)
    a = gram_offdiagonal(tree, mode="sampled", count=500, seed=3)
    b = gram_offdiagonal(tree, mode="sampled", count=500, seed=3)
    full = gram_offdiagonal(tree, mode="full")
    assert a == b and a.seed == 3
    assert a.epsilon <= full.epsilon + 1e-15
    with pytest.raises(CapacityError):
        gram_offdiagonal(tree, mode="full", full_limit=10)


def test_anchored_epsilon_against_brute_force():
    spec = TWO
    x = CellLabel.parse(spec, "01,10")
    args = (initial_ensemble(spec, x), build_partition(spec), BakerParams(spec.N, spec.n), 3)
    thresholds = [0.5, 0.125, 1 / 32, 1 / 128]
    tree = run_anchored(*args, thresholds, EngineConfig(prune_tol=0.0))
    full = run_branch_tree(*args, EngineConfig(prune_tol=0.0))
    for j in (1, 2, 3):
        support = [h for h, p in full.probs[j].items() if p > thresholds[j]]
        best = 0.0
        for a in support:
            for b in full.probs[j]:
                if b != a:
                    v = abs(histories.gram_entry(full, a, b)) / math.sqrt(full.probs[j][a] * full.probs[j][b])
                    best = max(best, v)
        assert tree.overlap[j].value == pytest.approx(best, rel=1e-12, abs=1e-15)
        rep = build_report(tree, j, thresholds[j])
        assert rep.epsilon_mode == "anchored" and rep.epsilon >= rep.epsilon_support


def test_thread_count_does_not_change_results():
    one = tree_for(TWO, k=3, threads=1)
    many = tree_for(TWO, k=3, threads=4)
    assert one.probs == many.probs and one.pruned_by_depth == many.pruned_by_depth


def test_corrupted_phase_is_caught_by_oracle(monkeypatch):
    def bad_step(amps, flip=None):
        out = momentum_step(amps, flip)
        # momentum-dependent phase error on one output half (a constant would be a gauge)
        out[1] *= np.exp(0.3j * np.arange(out.shape[-1]) / out.shape[-1])
        return out

    monkeypatch.setattr(histories, "momentum_step", bad_step)
    rep = compare_engines(LOCAL, CellLabel.parse(LOCAL, "011"), BakerParams(LOCAL.N, LOCAL.n), 2)
    assert rep.max_abs_dev > 1e-6


def test_capacity_limit():
    with pytest.raises(CapacityError):
        tree_for(TWO, k=3, max_nodes=20)


def test_entropy_examples_and_errors():
    assert entropy([1.0]) == 0
    assert entropy([0.25] * 4) == 2
    assert entropy({"a": 2.0**-6 for _ in range(1)} | {i: 2.0**-6 for i in range(63)}) == pytest.approx(6)
    assert entropy([0.5, 0.5, 1e-16]) == 1
    with pytest.raises(NegativeProbabilityError):
        entropy([0.5, -1e-9])
    with pytest.raises(InvariantViolation):
        entropy([0.7, 0.7])


@given(st.integers(1, 10))
def test_uniform_entropy_is_exact(bits):
    assert entropy([2.0**-bits] * 2**bits) == bits


def test_report_and_shift_check():
    spec = LOCAL
    x = CellLabel.parse(spec, "011")
    tree = tree_for(spec, "011", k=2, prune_tol=0.0)
    rep = build_report(tree, 2, threshold=0.125)
    assert abs(rep.total_probability + rep.pruned_mass - 1) < 1e-6
    check = shift_support_check(rep, spec, x, 0.125)
    assert check.classified == rep.support_size
    assert check.allowed_mass + check.disallowed_mass == pytest.approx(rep.total_probability)
    empty = shift_support_check(rep, spec, x, 2.0)
    assert empty.classified == 0
    bad = sum(p for h, p in tree.probs[2].items() if not shift_allowed_codes(spec, x.code, h))
    assert check.disallowed_mass == pytest.approx(bad)


def _local_entropies(l: int, k: int = 2) -> dict[str, tuple[int, float]]:
    spec = parse_spec({"N": l + 6, "n": l + 2, "l": l, "r": 2, "s": [4]})
    out = {}
    for x in enumerate_cells(spec):
        tree = tree_for(spec, str(x), k=k, prune_tol=0.0, keep_tol=[0.5 / 2**j for j in range(k + 1)])
        rep = build_report(tree, k, threshold=0.5 / 2**k)
        out[str(x)] = (rep.support_size, rep.entropy_bits)
    return out


@pytest.mark.xfail(strict=True, reason="H depends on the leading bits of x at finite l; see the spread test")
def test_initial_cell_symmetry_local_case():
    values = _local_entropies(3)
    assert len({size for size, _ in values.values()}) == 1
    hs = [h for _, h in values.values()]
    assert max(hs) - min(hs) < 1e-6


def test_initial_cell_dependence_is_complement_symmetric_and_shrinks():
    spreads = []
    for l in (3, 5, 7):
        values = _local_entropies(l)
        assert {size for size, _ in values.values()} == {4}
        for x, (_, h) in values.items():
            flipped = "".join("1" if c == "0" else "0" for c in x)
            assert abs(values[flipped][1] - h) < 1e-9
        hs = [h for _, h in values.values()]
        spreads.append(max(hs) - min(hs))
    assert spreads[0] > spreads[1] > spreads[2]
