# tests/test_uncertainty.py

from fractions import Fraction

import numpy as np
import pytest

from core.economy import UNASSIGNED, Economy, PriorityRules, Program, RuleMode, TieBreak
from core.errors import ValidationError
from core.uncertainty import (
    FeasibilityStatus,
    LotteryDraw,
    PartitionMode,
    admission_probabilities,
    assignment_probabilities,
    best_in_rol,
    bitmask_programs,
    build_feasible_partition,
    draw_lottery,
    feasibility_status,
    programs_bitmask,
    realize_scores,
    simulate_cutoff_distribution,
)
from core.rng import stream


def _market(lottery_economy, seed=3, n_students=12, n_programs=4):
    rng = np.random.default_rng(seed)
    intrinsic = rng.integers(0, 2, size=(n_students, n_programs))
    economy = lottery_economy([3, 2, 4, 2][:n_programs], intrinsic=intrinsic, n_groups=2)
    rols = [tuple(int(c) for c in rng.permutation(n_programs)[: rng.integers(1, n_programs + 1)])
            for _ in range(n_students)]
    return economy, rols


def test_partition_counts_add_up_and_classes_are_sorted(lottery_economy):
    economy, rols = _market(lottery_economy)
    partitions = build_feasible_partition(economy, rols, n_draws=200, seed=1)
    assert len(partitions) == economy.n_students
    for partition, rol in zip(partitions, rols):
        assert sum(cls.count for cls in partition.classes) == 200
        counts = [cls.count for cls in partition.classes]
        assert counts == sorted(counts, reverse=True)
        assert sum(partition.probability(cls) for cls in partition.classes) == Fraction(1)
        for cls in partition.classes:
            assert cls.assigned == best_in_rol(cls.feasible, rol)
            if cls.assigned != UNASSIGNED:
                assert cls.assigned in cls.programs()


def test_partition_is_reproducible_and_independent_of_workers(lottery_economy):
    economy, rols = _market(lottery_economy)
    first = build_feasible_partition(economy, rols, n_draws=60, seed=9)
    again = build_feasible_partition(economy, rols, n_draws=60, seed=9)
    parallel = build_feasible_partition(economy, rols, n_draws=60, seed=9, workers=2)
    assert first == again == parallel
    other = build_feasible_partition(economy, rols, n_draws=60, seed=10)
    assert other != first


def test_independent_protocol_uses_own_draw_count(lottery_economy):
    economy, rols = _market(lottery_economy)
    partitions = build_feasible_partition(economy, rols, n_draws=40, seed=2, mode=PartitionMode.INDEPENDENT,
                                          n_own_draws=75)
    assert all(p.n_draws == 75 for p in partitions)
    assert all(sum(cls.count for cls in p.classes) == 75 for p in partitions)


def test_undersubscribed_market_has_zero_cutoffs(lottery_economy):
    economy = lottery_economy([5, 5], n_students=3)
    rols = [(0, 1), (1,), (0,)]
    cutoffs = simulate_cutoff_distribution(economy, rols, n_draws=10, seed=0)
    assert cutoffs.shape == (10, 2)
    assert (cutoffs == 0).all()
    partitions = build_feasible_partition(economy, rols, n_draws=10, seed=0)
    # Todo es factible siempre: una sola clase por estudiante.
    assert all(len(p.classes) == 1 and p.classes[0].feasible == programs_bitmask([0, 1]) for p in partitions)


def test_cutoff_draws_reject_invalid_count(lottery_economy):
    economy = lottery_economy([1], n_students=1)
    with pytest.raises(ValidationError):
        simulate_cutoff_distribution(economy, [(0,)], n_draws=0, seed=0)


def test_lottery_scores_follow_group_plus_lottery():
    rules = PriorityRules(modes=(RuleMode.LOTTERY_COARSE, RuleMode.LOTTERY_COARSE), n_groups=(2, 4))
    intrinsic = np.array([[1, 3], [0, 0]])
    draw = LotteryDraw(lottery=np.array([0.5, 0.25]))
    scores = realize_scores(rules, intrinsic, draw)
    np.testing.assert_allclose(scores, [[0.75, 0.875], [0.125, 0.0625]])


def test_mtb_draws_one_number_per_program():
    rules = PriorityRules(modes=(RuleMode.LOTTERY_COARSE,) * 3, n_groups=(1, 1, 1), tiebreak=TieBreak.MTB)
    draw = draw_lottery(rules, 4, stream(0, 1))
    assert draw.lottery.shape == (4, 3)
    assert draw.exam is None


def test_exam_draw_is_shared_across_exam_programs():
    rules = PriorityRules(modes=(RuleMode.EXAM, RuleMode.EXAM, RuleMode.LOTTERY_COARSE), n_groups=(1, 1, 1))
    draw = draw_lottery(rules, 5, stream(4, 1))
    scores = realize_scores(rules, np.zeros((5, 3), dtype=int), draw)
    np.testing.assert_allclose(scores[:, 0], scores[:, 1])
    np.testing.assert_allclose(scores[:, 0], draw.exam)


def test_deterministic_programs_use_known_scores():
    programs = [Program(id=0, capacity=1, rule_mode=RuleMode.DETERMINISTIC)]
    economy = Economy(programs=programs, intrinsic=np.zeros((2, 1)), known_scores=np.array([[0.2], [0.9]]))
    partitions = build_feasible_partition(economy, [(0,), (0,)], n_draws=5, seed=0)
    assert [p.classes[0].assigned for p in partitions] == [UNASSIGNED, 0]
    assert all(len(p.classes) == 1 for p in partitions)


def test_group_out_of_range_is_rejected():
    rules = PriorityRules(modes=(RuleMode.LOTTERY_COARSE,), n_groups=(2,))
    with pytest.raises(ValidationError):
        realize_scores(rules, np.array([[2]]), LotteryDraw(lottery=np.array([0.1])))


def test_probabilities_and_status(four_class_partition):
    assigned = assignment_probabilities(four_class_partition, 6)
    np.testing.assert_allclose(assigned, [0, 0.30, 0.25, 0, 0.45, 0])
    admitted = admission_probabilities(four_class_partition, 6)
    np.testing.assert_allclose(admitted, [0.55, 0.60, 0.25, 0.40, 0.45, 0])
    status = feasibility_status(four_class_partition, (4, 3, 2, 1), 6)
    assert status[0] == FeasibilityStatus.EVER_FEASIBLE_UNRANKED
    assert status[4] == FeasibilityStatus.RANKED
    assert status[5] == FeasibilityStatus.NEVER_FEASIBLE_UNRANKED


def test_bitmask_helpers():
    assert bitmask_programs(programs_bitmask([0, 3, 5])) == [0, 3, 5]
    assert best_in_rol(programs_bitmask([1, 2]), (3, 2, 1)) == 2
    assert best_in_rol(programs_bitmask([0]), (3, 2, 1)) == UNASSIGNED


def test_cutoffs_do_not_depend_on_thread_count(lottery_economy):
    economy, rols = _market(lottery_economy)
    single = simulate_cutoff_distribution(economy, rols, n_draws=40, seed=6, workers=1)
    threaded = simulate_cutoff_distribution(economy, rols, n_draws=40, seed=6, workers=2)
    np.testing.assert_array_equal(single, threaded)


def test_single_lottery_feasible_sets_form_a_chain(lottery_economy):
    # Mismo ROL para todos y sin prioridades: los cortes quedan ordenados 0 > 1 > 2 en cada sorteo.
    economy = lottery_economy([1, 2, 3], n_students=8)
    rols = [(0, 1, 2)] * 8
    partitions = build_feasible_partition(economy, rols, n_draws=300, seed=4)
    chain = [programs_bitmask(programs) for programs in ([], [2], [1, 2], [0, 1, 2])]
    for partition in partitions:
        masks = sorted(cls.feasible for cls in partition.classes)
        assert set(masks) <= set(chain)
        assert all(small & big == small for small, big in zip(masks, masks[1:]))


@pytest.mark.slow
def test_largest_program_never_fills_under_truthful_reports():
    from experiments.synthetic_economy import McConfig, generate_economy

    synthetic = generate_economy(McConfig(), 0, pool=1)
    cutoffs = simulate_cutoff_distribution(synthetic.economy, synthetic.true_rols, n_draws=50, seed=12)
    assert (cutoffs[:, 0] == 0).all()
