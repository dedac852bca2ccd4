# tests/test_inference.py

import itertools

import numpy as np
import pytest

from core.economy import UNASSIGNED
from core.errors import CycleError, ValidationError
from core.inference import (
    RelationSet,
    enumerate_consistent_rols,
    ever_assigned,
    is_consistent_rol,
    iterative_tree_merge,
    reassign_partition,
    stability_relations,
    teps_infer,
    transitive_closure,
    truncate_partition,
    wtt_infer,
)
from core.uncertainty import FeasibleClass, StudentPartition, assignment_probabilities, best_in_rol, programs_bitmask

FOUR_CLASS_ROL = (4, 3, 2, 1)
TAUS = (0, 20, 40, 60, 80, 100)


def test_four_class_relations_with_full_attention(four_class_partition):
    relations = teps_infer(four_class_partition, FOUR_CLASS_ROL, tau=100)
    assert relations.pairs == {(4, 3), (4, 1), (4, 0), (2, 1), (2, 0), (1, 0)}


def test_four_class_relations_ignore_least_likely_class(four_class_partition):
    relations = teps_infer(four_class_partition, FOUR_CLASS_ROL, tau=95)
    assert relations.pairs == {(4, 3), (2, 1), (2, 0), (1, 0)}


def test_four_class_wtt_relations():
    relations = wtt_infer(FOUR_CLASS_ROL, range(6))
    assert len(relations) == 14
    assert {(4, 3), (3, 2), (2, 1), (1, 0), (1, 5), (4, 0)} <= relations.pairs
    assert (0, 5) not in relations and (5, 0) not in relations


def test_top_attention_keeps_only_most_likely_class(four_class_partition):
    kept = truncate_partition(four_class_partition, 0)
    assert len(kept.classes) == 1 and kept.classes[0].count == 40
    assert teps_infer(four_class_partition, FOUR_CLASS_ROL, tau=0).pairs == {(4, 3)}


def test_attention_uses_exact_fractions():
    # 1/3 + 1/3 + 1/3: la suma exacta llega a 100 % sin errores de redondeo.
    classes = tuple(FeasibleClass(feasible=programs_bitmask([c, 3]), assigned=c, count=1) for c in range(3))
    partition = StudentPartition(classes=classes, n_draws=3)
    assert len(truncate_partition(partition, 100).classes) == 3
    assert len(truncate_partition(partition, "66.67").classes) == 2


def test_truncation_rejects_bad_input(four_class_partition):
    with pytest.raises(ValidationError):
        truncate_partition(four_class_partition, 101)
    with pytest.raises(ValidationError):
        truncate_partition(StudentPartition(classes=(), n_draws=1), 50)


def test_stability_relations_are_grouped_by_rol_rank(four_class_partition):
    family = stability_relations(four_class_partition, FOUR_CLASS_ROL)
    assert family == [
        frozenset({(4, 3), (4, 1)}),
        frozenset({(2, 1), (2, 0)}),
        frozenset({(1, 0)}),
    ]


def test_mismatched_assignment_is_rejected():
    partition = StudentPartition(classes=(FeasibleClass(programs_bitmask([0, 1]), assigned=1, count=1),), n_draws=1)
    with pytest.raises(ValidationError):
        stability_relations(partition, (0, 1))


def test_outside_option_relations():
    partition = StudentPartition(
        classes=(
            FeasibleClass(programs_bitmask([0, 2]), assigned=0, count=3),
            FeasibleClass(programs_bitmask([2]), assigned=UNASSIGNED, count=1),
        ),
        n_draws=4,
    )
    relations = teps_infer(partition, (0, 1), tau=100, outside=3)
    assert relations.pairs == {(0, 2), (0, 3), (3, 2)}
    assert teps_infer(partition, (0, 1), tau=100).pairs == {(0, 2)}


def test_cycle_is_reported():
    with pytest.raises(CycleError) as caught:
        transitive_closure([(0, 1), (1, 2), (2, 0)])
    assert sorted(caught.value.cycle) == [0, 1, 2]


def _random_partition(rng, n_programs=5, max_classes=4, n_draws=20):
    rol = tuple(int(c) for c in rng.permutation(n_programs)[: rng.integers(1, n_programs + 1)])
    n_classes = int(rng.integers(1, max_classes + 1))
    masks = set()
    while len(masks) < n_classes:
        members = rng.random(n_programs) < 0.5
        members[rng.choice(rol)] = True
        masks.add(programs_bitmask(np.flatnonzero(members)))
    cuts = np.sort(rng.choice(np.arange(1, n_draws), size=n_classes - 1, replace=False))
    counts = np.diff(np.concatenate([[0], cuts, [n_draws]]))
    classes = sorted(
        (FeasibleClass(feasible=m, assigned=best_in_rol(m, rol), count=int(k)) for m, k in zip(sorted(masks), counts)),
        key=lambda cls: (-cls.count, cls.feasible),
    )
    return StudentPartition(classes=tuple(classes), n_draws=n_draws), rol


def _assert_nested(n_students, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n_students):
        partition, rol = _random_partition(rng)
        chain = [teps_infer(partition, rol, tau) for tau in TAUS] + [wtt_infer(rol, range(5))]
        for smaller, larger in zip(chain, chain[1:]):
            assert smaller.issubset(larger)


def test_relations_are_nested_in_attention_quick():
    _assert_nested(1500, seed=5)


@pytest.mark.slow
def test_relations_are_nested_in_attention_full():
    _assert_nested(10_000, seed=6)


def _reachability(adjacency):
    n = adjacency.shape[0]
    reach = adjacency.astype(int)
    power = adjacency.astype(int)
    for _ in range(n):
        power = np.minimum(power @ adjacency.astype(int), 1)
        reach = np.minimum(reach + power, 1)
    return {(int(i), int(j)) for i, j in np.argwhere(reach)}


def test_closure_equals_matrix_reachability():
    rng = np.random.default_rng(13)
    for _ in range(1000):
        n = int(rng.integers(2, 11))
        order = rng.permutation(n)
        upper = np.triu(rng.random((n, n)) < 0.3, k=1)
        adjacency = np.zeros((n, n), dtype=bool)
        adjacency[np.ix_(order, order)] = upper
        pairs = [(int(i), int(j)) for i, j in np.argwhere(adjacency)]
        assert transitive_closure(pairs).pairs == _reachability(adjacency)


def test_tree_merge_matches_reachability_closure():
    rng = np.random.default_rng(17)
    for _ in range(500):
        partition, rol = _random_partition(rng)
        family = stability_relations(partition, rol)
        merged = iterative_tree_merge(family)
        assert merged.pairs == teps_infer(partition, rol, 100).pairs


def test_consistency_checks(four_class_partition):
    relations = teps_infer(four_class_partition, FOUR_CLASS_ROL, tau=100)
    assigned = ever_assigned(four_class_partition)
    assert assigned == {1, 2, 4}
    assert is_consistent_rol((4, 2, 1), relations, assigned)
    assert is_consistent_rol((4, 3, 2, 1, 0, 5), relations, assigned)
    assert is_consistent_rol((2, 4, 1), relations, assigned)
    assert not is_consistent_rol((1, 2, 4), relations, assigned)
    assert not is_consistent_rol((4, 2), relations, assigned)


def test_consistent_rols_reinfer_the_same_relations():
    rng = np.random.default_rng(23)
    checked = 0
    for _ in range(500):
        partition, rol = _random_partition(rng, n_programs=4)
        if any(cls.assigned == UNASSIGNED for cls in partition.classes):
            continue
        relations = teps_infer(partition, rol, 100)
        distribution = assignment_probabilities(partition, 4)
        candidates = enumerate_consistent_rols(relations, ever_assigned(partition), range(4))
        assert tuple(rol) in candidates
        for candidate in candidates:
            replayed = reassign_partition(partition, candidate)
            assert teps_infer(replayed, candidate, 100) == relations
            np.testing.assert_allclose(assignment_probabilities(replayed, 4), distribution)
        checked += 1
    assert checked == 500


def test_relation_set_helpers():
    rel = RelationSet.of([(2, 1), (1, 0)])
    assert list(rel) == [(1, 0), (2, 1)]
    assert rel.programs() == {0, 1, 2}
    assert not rel.closed
    assert transitive_closure(rel).pairs == {(2, 1), (1, 0), (2, 0)}
    assert all(x != y for x, y in itertools.chain(rel, transitive_closure(rel)))
