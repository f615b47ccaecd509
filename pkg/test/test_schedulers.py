"""
This module tests the schedulers module.
"""
from fractions import Fraction

import numpy as np
import pytest

from src.exceptions import InstanceTooLargeError
from src.model import (
    QueueState,
    Schedule,
    SystemConfig,
    hd_weight,
    weight
)
from src.schedulers import (
    POLICIES,
    BruteForceMode,
    Policy,
    brute_force_maxweight,
    get_policy,
    greedy_mgg,
    halfduplex_first_drop,
    halfduplex_maxweight,
    iter_selections,
    maxweight_alg1,
    naive_lqf,
    tightness_instance
)
from . import random_instance, random_users


def lqf_weight(users, queues, config) -> int:
    """
    The weight of users placed longest queue first in the leading slots.
    """
    schedule = Schedule.from_users(queues.lqf_order(users), config.k_minislots)
    return weight(schedule, queues, config)


def hd_optimum(queues, config) -> int:
    """
    The half-duplex weight maximised over every number of probed users.
    """
    top = [queues[user] for user in queues.lqf_order()]
    return max(
        (config.k_minislots - m) * sum(top[:m])
        for m in range(min(config.n_users, config.k_minislots) + 1)
    )


# pylint: disable=invalid-name, too-few-public-methods, too-many-arguments
class TestIterSelections:
    """
    Selection enumeration tester.
    """
    @pytest.mark.parametrize("caps, budget, expected", [
        ((1, 1), 2, [(0, 0), (0, 1), (1, 0), (1, 1)]),
        ((1, 1), 1, [(0, 0), (0, 1), (1, 0)]),
        ((2,), 5, [(0,), (1,), (2,)]),
        ((2, 1), 0, [(0, 0)])
    ])
    def test_iter_selections(self, caps, budget, expected):
        """
        Test the mixed-radix order and the budget.
        """
        assert list(iter_selections(caps, budget)) == expected


class TestMaxWeightAlg1:
    """
    Optimal MaxWeight search tester.
    """

    def test_one_user_per_group(self):
        """
        Test three groups of unit queues schedule one user per group.
        """
        config = SystemConfig.from_group_sizes([3, 3, 3], 4)
        result = maxweight_alg1(QueueState([1] * 9), config)
        assert result.weight == 6
        assert result.selection.counts == (1, 1, 1)
        assert result.policy_tag is Policy.MAXWEIGHT_ALG1

    def test_single_user(self):
        """
        Test a single user takes the first slot.
        """
        result = maxweight_alg1(QueueState([7]), SystemConfig(5, [1]))
        assert result.schedule.slots == (1, 0, 0, 0, 0)
        assert result.weight == 28

    def test_empty_system(self):
        """
        Test a system without users idles.
        """
        result = maxweight_alg1(QueueState([]), SystemConfig(3, [], 1))
        assert result.schedule.slots == (0, 0, 0)
        assert result.weight == 0

    def test_many_small_groups(self):
        """
        Test many singleton groups with few slots only visit feasible
        selections.
        """
        config = SystemConfig.from_group_sizes([1] * 24, 2)
        queues = QueueState(range(1, 25))
        assert len(list(iter_selections([1] * 24, 2))) == 301
        result = maxweight_alg1(queues, config)
        assert result.weight == 24
        assert result.schedule.slots[0] == 24
        assert result.selection.total <= 2
        assert result.weight == greedy_mgg(queues, config).weight

    def test_matches_brute_force(self):
        """
        Test the search matches exhaustive enumeration of every vector.
        """
        rng = np.random.default_rng(1)
        for _ in range(2000):
            config, queues = random_instance(rng, 6, 6, 4)
            assert maxweight_alg1(queues, config).weight \
                == brute_force_maxweight(queues, config).weight

    def test_schedule_shape(self):
        """
        Test the schedule has no interior idle slot, is longest queue first
        and its weight and rates match the model.
        """
        rng = np.random.default_rng(8)
        for _ in range(500):
            config, queues = random_instance(rng, 12, 10, 4)
            result = maxweight_alg1(queues, config)
            users = result.schedule.scheduled_users
            assert not result.schedule.has_interior_zero
            assert list(users) == queues.lqf_order(users)
            assert result.weight == weight(result.schedule, queues, config)
            result.selection.validate(config)

    def test_first_selection_wins_ties(self):
        """
        Test ties go to the first selection in mixed-radix order.
        """
        result = maxweight_alg1(QueueState([0, 0]), SystemConfig(3, [1, 2]))
        assert result.selection.counts == (0, 0)
        assert result.schedule.slots == (0, 0, 0)


class TestGreedyMgg:
    """
    Marginal gain-based greedy policy tester.
    """

    def test_worst_case(self):
        """
        Test the worst-case instance for K = 4 yields (K^2 - 1) / 3.
        """
        config, queues = tightness_instance(4)
        result = greedy_mgg(queues, config)
        assert result.weight == 5
        assert result.policy_tag is Policy.GREEDY_MGG

    def test_zero_queues(self):
        """
        Test empty queues are all placed with zero gain.
        """
        config = SystemConfig(3, [1, 1, 2, 2])
        result = greedy_mgg(QueueState.zeros(4), config)
        assert result.weight == 0
        assert result.schedule.slots == (1, 2, 3)
        assert all(evaluation.gain == 0 for evaluation in result.evaluations)

    def test_distinct_groups_match_alg1(self):
        """
        Test users in distinct groups with positive queues and N < K are
        all scheduled longest queue first, as by the optimal search.
        """
        rng = np.random.default_rng(4)
        for _ in range(300):
            k = int(rng.integers(2, 10))
            n = int(rng.integers(1, k))
            config = SystemConfig(k, list(range(1, n + 1)))
            queues = QueueState(
                int(queue) for queue in rng.integers(1, 50, size=n)
            )
            greedy = greedy_mgg(queues, config)
            optimal = maxweight_alg1(queues, config)
            assert greedy.schedule == optimal.schedule
            assert greedy.weight == optimal.weight

    def test_gain_signs(self):
        """
        Test every placement had a non-negative gain and every skip a
        negative one.
        """
        rng = np.random.default_rng(6)
        for _ in range(500):
            config, queues = random_instance(rng, 20, 10, 5)
            result = greedy_mgg(queues, config)
            placed = [
                evaluation.user
                for evaluation in result.evaluations
                if evaluation.placed
            ]
            for evaluation in result.evaluations:
                assert (evaluation.gain >= 0) is evaluation.placed
            assert tuple(placed) == result.schedule.scheduled_users
            assert result.weight == sum(
                evaluation.gain
                for evaluation in result.evaluations
                if evaluation.placed
            )

    def test_two_thirds_and_half_duplex_bounds(self):
        """
        Test the greedy weight is at least 2/3 of the optimum and at least the
        half-duplex optimum.
        """
        rng = np.random.default_rng(2023)
        for _ in range(10_000):
            config, queues = random_instance(rng, 30, 15, 4)
            greedy = greedy_mgg(queues, config).weight
            optimal = maxweight_alg1(queues, config).weight
            assert Fraction(greedy) >= Fraction(2, 3) * optimal
            assert greedy <= optimal
            assert greedy >= halfduplex_maxweight(queues, config).weight


class TestBruteForce:
    """
    Brute-force oracle tester.
    """

    @pytest.mark.parametrize("mode", list(BruteForceMode))
    @pytest.mark.parametrize("k", [1, 2, 5])
    def test_single_user(self, mode, k):
        """
        Test a single user takes the first slot.
        """
        result = brute_force_maxweight(
            QueueState([3]),
            SystemConfig(k, [1]),
            mode
        )
        assert result.weight == 3 * (k - 1)
        assert result.policy_tag is Policy.BRUTE_FORCE

    def test_modes_agree(self):
        """
        Test both enumeration modes find the same maximum.
        """
        config = SystemConfig(4, [1, 2, 1, 2])
        queues = QueueState([4, 3, 2, 1])
        weights = {
            brute_force_maxweight(queues, config, mode).weight
            for mode in BruteForceMode
        }
        assert len(weights) == 1

    def test_modes_agree_random(self):
        """
        Test both enumeration modes agree on random instances.
        """
        rng = np.random.default_rng(12)
        for _ in range(200):
            config, queues = random_instance(rng, 5, 5, 3)
            assert brute_force_maxweight(
                queues,
                config,
                BruteForceMode.FULL_VECTORS
            ).weight == brute_force_maxweight(
                queues,
                config,
                BruteForceMode.SUBSET_PERMUTATIONS
            ).weight

    def test_worst_case_optimum(self):
        """
        Test the worst-case instance for K = 4 has optimum K(K - 1) / 2.
        """
        config, queues = tightness_instance(4)
        assert brute_force_maxweight(queues, config).weight == 6
        assert maxweight_alg1(queues, config).weight == 6

    @pytest.mark.parametrize("mode, n, k", [
        (BruteForceMode.FULL_VECTORS, 7, 3),
        (BruteForceMode.FULL_VECTORS, 3, 7),
        (BruteForceMode.SUBSET_PERMUTATIONS, 9, 3)
    ])
    def test_too_large(self, mode, n, k):
        """
        Test instances beyond the enumeration limits are rejected.
        """
        with pytest.raises(InstanceTooLargeError):
            brute_force_maxweight(
                QueueState.zeros(n),
                SystemConfig(k, [1] * n),
                mode
            )


class TestHalfDuplex:
    """
    Half-duplex MaxWeight tester.
    """
    @pytest.mark.parametrize("q, k, expected_m, expected_weight", [
        ([5, 4, 1], 4, 2, 18),
        ([1, 4, 5], 4, 2, 18),
        ([7], 5, 1, 28),
        ([0, 0, 0], 4, 0, 0)
    ])
    def test_halfduplex(self, q, k, expected_m, expected_weight):
        """
        Test the number of probed users and the half-duplex weight.
        """
        config = SystemConfig(k, [1] * len(q))
        queues = QueueState(q)
        result = halfduplex_maxweight(queues, config)
        assert len(result.schedule.scheduled_users) == expected_m
        assert result.weight == expected_weight
        assert result.weight == hd_weight(result.schedule, queues, config)
        assert result.policy_tag is Policy.HALF_DUPLEX_MW

    def test_ignores_groups(self):
        """
        Test the half-duplex weight does not depend on the groups.
        """
        queues = QueueState([6, 5, 4, 3])
        weights = {
            halfduplex_maxweight(queues, SystemConfig(6, group_of)).weight
            for group_of in ([1, 1, 1, 1], [1, 2, 3, 4], [2, 1, 2, 1])
        }
        assert len(weights) == 1

    def test_rates(self):
        """
        Test every probed user receives K - m.
        """
        result = halfduplex_maxweight(
            QueueState([5, 4, 1]),
            SystemConfig(4, [1, 2, 3])
        )
        assert result.rates == (2, 2, 0)

    def test_full_scan(self):
        """
        Test the scan finds the half-duplex optimum and the first drop in
        weight gives the same weight.
        """
        rng = np.random.default_rng(21)
        for _ in range(2000):
            config, queues = random_instance(rng, 20, 15, 4)
            result = halfduplex_maxweight(queues, config)
            assert result.weight == hd_optimum(queues, config)
            users = queues.lqf_order()[:halfduplex_first_drop(queues, config)]
            assert hd_weight(
                Schedule.from_users(users, config.k_minislots),
                queues,
                config
            ) == result.weight


class TestNaiveLqf:
    """
    Naive longest-queue-first tester.
    """

    def test_same_group(self):
        """
        Test two same-group users both only receive the idle last slot.
        """
        config = SystemConfig(3, [1, 1])
        queues = QueueState([5, 5])
        result = naive_lqf(queues, config)
        assert result.schedule.slots == (1, 2, 0)
        assert result.weight == weight(result.schedule, queues, config)
        assert result.weight == 10

    def test_distinct_groups_match_greedy(self):
        """
        Test users in distinct groups are scheduled as by the greedy policy.
        """
        rng = np.random.default_rng(17)
        for _ in range(300):
            n = int(rng.integers(1, 12))
            k = int(rng.integers(1, 12))
            config = SystemConfig(k, list(range(1, n + 1)))
            queues = QueueState(
                int(queue) for queue in rng.integers(0, 50, size=n)
            )
            assert naive_lqf(queues, config).schedule \
                == greedy_mgg(queues, config).schedule

    def test_empty_system(self):
        """
        Test a system without users idles.
        """
        result = naive_lqf(QueueState([]), SystemConfig(3, [], 1))
        assert result.schedule.slots == (0, 0, 0)
        assert result.weight == 0


class TestSelectionSwap:
    """
    Same-group swap property tester.
    """

    def test_swap_for_longer_queue(self):
        """
        Test swapping a selected user for an unselected user of the same
        group with a longer queue never lowers the longest-queue-first weight.
        """
        rng = np.random.default_rng(31)
        checked = 0
        while checked < 1000:
            config, queues = random_instance(rng, 6, 6, 3)
            selected = random_users(rng, config, 1)
            base = lqf_weight(selected, queues, config)
            for user in selected:
                for other in config.members(config.group(user)):
                    if other in selected or queues[other] <= queues[user]:
                        continue
                    swapped = [other if x == user else x for x in selected]
                    assert lqf_weight(swapped, queues, config) >= base
                    checked += 1


class TestTightness:
    """
    Worst-case instance tester.
    """
    @pytest.mark.parametrize("k, sizes", [
        (2, (1,)),
        (4, (2, 1, 1)),
        (8, (4, 2, 1, 1, 1, 1, 1))
    ])
    def test_instance(self, k, sizes):
        """
        Test the group sizes of the instance.
        """
        config, queues = tightness_instance(k)
        assert config.group_sizes == sizes
        assert queues.q == (1,) * config.n_users

    @pytest.mark.parametrize("k", [4, 8, 16, 32, 64])
    def test_ratio(self, k):
        """
        Test the greedy weight is (K^2 - 1) / 3 against K(K - 1) / 2.
        """
        config, queues = tightness_instance(k)
        greedy = greedy_mgg(queues, config).weight
        assert greedy == (k * k - 1) // 3
        assert Fraction(greedy, k * (k - 1) // 2) \
            == Fraction(2 * (k + 1), 3 * k)

    def test_optimum(self):
        """
        Test the optimal search reaches K(K - 1) / 2 for K = 8.
        """
        config, queues = tightness_instance(8)
        assert maxweight_alg1(queues, config).weight == 28

    @pytest.mark.parametrize("k", [0, 1, 3, 12])
    def test_invalid(self, k):
        """
        Test K must be a power of two of at least 2.
        """
        with pytest.raises(ValueError):
            tightness_instance(k)


class TestPolicies:
    """
    Policy registry tester.
    """

    def test_registry(self):
        """
        Test every registered policy produces a result for its own objective.
        """
        config = SystemConfig(4, [1, 2, 1, 2])
        queues = QueueState([4, 3, 2, 1])
        for name in POLICIES:
            result = get_policy(name)(queues, config)
            result.schedule.validate(config)
            if result.policy_tag is Policy.HALF_DUPLEX_MW:
                expected = hd_weight(result.schedule, queues, config)
            else:
                expected = weight(result.schedule, queues, config)
            assert result.weight == expected
            assert result.to_dict()["policy"] == result.policy_tag.value

    def test_invalid_name(self):
        """
        Test an unknown policy name is rejected.
        """
        with pytest.raises(ValueError):
            get_policy("round-robin")
