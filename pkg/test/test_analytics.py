"""
This module tests the analytics module.
"""
from fractions import Fraction

import numpy as np
import pytest

from src.analytics import (
    GainBranch,
    GainParams,
    capacity_point,
    fd_bound,
    fd_capacity,
    fd_gain,
    gain_branch,
    gain_by_branch,
    hd_capacity,
    hd_sum_rate,
    sum_rate,
    verify_sumrate_optimum
)
from src.exceptions import InstanceTooLargeError, InvalidInputError
from src.model import Schedule, SystemConfig, UserSelection, rate_vector
from . import random_instance, random_users


# pylint: disable=invalid-name, too-few-public-methods
class TestSumRate:
    """
    Sum-rate tester.
    """

    def test_pair(self):
        """
        Test one user from each of two groups.
        """
        config = SystemConfig(4, [1, 2])
        selection = UserSelection([1, 1])
        assert sum_rate(selection, config) == 5
        assert hd_sum_rate(selection, config) == 4

    def test_matches_rate_vector(self):
        """
        Test the sum-rate equals the total rate of the selected users in the
        leading slots, whatever their order.
        """
        rng = np.random.default_rng(5)
        for _ in range(1000):
            config, _ = random_instance(rng, 12, 10, 4)
            users = random_users(rng, config)
            counts = [0] * config.n_groups
            for user in users:
                counts[config.group(user) - 1] += 1
            schedule = Schedule.from_users(users, config.k_minislots)
            assert sum(rate_vector(schedule, config)) \
                == sum_rate(UserSelection(counts), config)

    def test_invalid_selection(self):
        """
        Test an infeasible selection is rejected.
        """
        with pytest.raises(InvalidInputError):
            sum_rate(UserSelection([2, 0]), SystemConfig(4, [1, 2]))


class TestCapacity:
    """
    Capacity magnitude tester.
    """
    @pytest.mark.parametrize("n, k, expected", [
        (20, 15, Fraction(45, 16)),
        (4, 15, Fraction(11)),
        (10, 20, Fraction(10)),
        (1, 1, Fraction(1, 4))
    ])
    def test_hd_capacity(self, n, k, expected):
        """
        Test both branches of the half-duplex magnitude.
        """
        assert hd_capacity(n, k) == expected

    @pytest.mark.parametrize("n, k, i, expected", [
        (20, 15, 4, Fraction(9, 2)),
        (4, 15, 4, Fraction(25, 2)),
        (12, 15, 4, Fraction(15, 2))
    ])
    def test_fd_capacity(self, n, k, i, expected):
        """
        Test both branches of the full-duplex magnitude.
        """
        assert fd_capacity(n, k, i) == expected

    def test_single_group(self):
        """
        Test a single group has no full-duplex gain.
        """
        for n in range(1, 40):
            for k in range(1, 40):
                assert fd_capacity(n, k, 1) == hd_capacity(n, k)

    def test_continuity(self):
        """
        Test both branches meet at N = IK / (I + 1).
        """
        for i in range(1, 10):
            for k in range(1, 30):
                n = Fraction(i * k, i + 1)
                assert Fraction(i * k * k, 2 * (i + 1)) \
                    == n * (2 * i * k - n - i * n) / (2 * i)

    def test_integer_optimum(self):
        """
        Test the enumerated optimum reaches the continuous bound when the
        continuous optimum is an integer selection.
        """
        selection, rate = verify_sumrate_optimum(20, 15, 4)
        assert selection.counts == (3, 3, 3, 3)
        assert rate == 90
        assert rate == fd_bound(20, 15, 4)

    def test_bound_dominates(self):
        """
        Test the continuous bound is never below the integer optimum.
        """
        for n, k, i in [(8, 6, 2), (9, 7, 3), (4, 15, 4), (30, 15, 3)]:
            _, rate = verify_sumrate_optimum(n, k, i)
            assert rate <= fd_bound(n, k, i)

    def test_too_large(self):
        """
        Test oversized enumerations are rejected.
        """
        with pytest.raises(InstanceTooLargeError):
            verify_sumrate_optimum(1000, 100, 5)

    @pytest.mark.parametrize("n, k, i", [
        (0, 15, 4),
        (20, 0, 4),
        (20, 15, 0)
    ])
    def test_invalid(self, n, k, i):
        """
        Test non-positive sizes are rejected.
        """
        with pytest.raises(ValueError):
            fd_capacity(n, k, i)

    def test_capacity_point(self):
        """
        Test the capacity point of a concrete system.
        """
        point = capacity_point(20, 15, 4)
        assert point.nu_hd == Fraction(45, 16)
        assert point.nu_fd == Fraction(9, 2)
        assert point.gain == Fraction(8, 5)
        assert point.regime_branch is GainBranch.MANY_USERS
        assert point.bound_fd == 90
        assert point.equal_groups
        assert point.to_dict()["gain_exact"] == "8/5"

    def test_unequal_groups(self):
        """
        Test a user count that is not a multiple of the groups is flagged.
        """
        assert not capacity_point(10, 15, 4).equal_groups


class TestGain:
    """
    Full-duplex gain tester.
    """
    @pytest.mark.parametrize("alpha, i, expected", [
        (1, 10, Fraction(20, 11)),
        (Fraction(1, 2), 4, Fraction(8, 5)),
        (2, 4, Fraction(11, 8)),
        (3, 2, Fraction(9, 8)),
        (5, 1, Fraction(1))
    ])
    def test_fd_gain(self, alpha, i, expected):
        """
        Test the gain on each branch.
        """
        assert fd_gain(GainParams(alpha, i)).gain == expected

    @pytest.mark.parametrize("alpha, i, expected", [
        (Fraction(5, 4), 4, GainBranch.MANY_USERS),
        (Fraction(3, 2), 4, GainBranch.MODERATE),
        (2, 4, GainBranch.MODERATE),
        ("2.25", 4, GainBranch.FEW_USERS),
        (2, 1, GainBranch.MANY_USERS)
    ])
    def test_gain_branch(self, alpha, i, expected):
        """
        Test boundary points belong to the lower branch.
        """
        assert gain_branch(GainParams(alpha, i)) is expected

    def test_continuity(self):
        """
        Test adjacent branches agree on their shared boundary.
        """
        for i in range(1, 101):
            first = GainParams(Fraction(i + 1, i), i)
            assert gain_by_branch(first, GainBranch.MANY_USERS) \
                == gain_by_branch(first, GainBranch.MODERATE)
            second = GainParams(2, i)
            assert gain_by_branch(second, GainBranch.MODERATE) \
                == gain_by_branch(second, GainBranch.FEW_USERS)

    def test_single_group_has_no_gain(self):
        """
        Test a single group with few users has gain 1.
        """
        for alpha in [2, Fraction(5, 2), 3, 10]:
            assert fd_gain(GainParams(alpha, 1)).gain == 1

    def test_gain_is_magnitude_ratio(self):
        """
        Test the gain equals the ratio of the normalised magnitudes and lies
        between 1 and 2I / (I + 1).
        """
        for i in range(1, 51):
            upper = Fraction(2 * i, i + 1)
            assert upper < 2
            for alpha in (Fraction(step, 10) for step in range(1, 101)):
                point = fd_gain(GainParams(alpha, i))
                assert point.gain == point.nu_fd / point.nu_hd
                assert 1 <= point.gain <= upper

    def test_undefined_branch(self):
        """
        Test the few users branch is undefined at alpha = 1.
        """
        with pytest.raises(ValueError):
            gain_by_branch(GainParams(1, 4), GainBranch.FEW_USERS)

    @pytest.mark.parametrize("alpha, i, exception", [
        (0, 4, ValueError),
        (-1, 4, ValueError),
        (1, 0, ValueError),
        (True, 4, TypeError)
    ])
    def test_invalid_params(self, alpha, i, exception):
        """
        Test invalid gain parameters are rejected.
        """
        with pytest.raises(exception):
            GainParams(alpha, i)
