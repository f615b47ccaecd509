"""
This module contains the closed-form sum-rate, capacity magnitude and
full-duplex gain formulas, with an integer enumeration oracle for the
sum-rate maximisation they rest on.

All formulas are evaluated exactly with fractions. The capacity magnitudes
are taken along the all-ones arrival direction and assume equal group sizes.
"""
from __future__ import annotations
from enum import Enum
from fractions import Fraction
import math
from typing import Any

from src import utils
from src.exceptions import InstanceTooLargeError
from src.model import SystemConfig, UserSelection
from src.schedulers import iter_selections

# Largest number of selections verify_sumrate_optimum will enumerate
MAX_ENUMERATION = 10**7


class GainBranch(Enum):
    """
    The branches of the full-duplex gain formula.
    """
    MANY_USERS = "many_users"  # alpha <= (I + 1) / I
    MODERATE = "moderate"  # (I + 1) / I <= alpha <= 2
    FEW_USERS = "few_users"  # alpha >= 2


class GainParams:
    """
    The inputs of the full-duplex gain formula.
    """

    def __init__(self, alpha: Any, n_groups: int) -> None:
        """
        Gain params init.

        Args:
            alpha: The ratio K / N, converted to an exact fraction
            n_groups: The number of groups (I)
        """
        self._alpha = utils.to_fraction(alpha, "alpha")
        if self._alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self._alpha}.")
        self._n_groups = utils.check_positive_int(n_groups, "n_groups")

    @property
    def alpha(self) -> Fraction:
        """
        The ratio K / N.
        """
        return self._alpha

    @property
    def n_groups(self) -> int:
        """
        The number of groups (I).
        """
        return self._n_groups

    def __repr__(self) -> str:
        return f"GainParams(alpha={self._alpha}, n_groups={self._n_groups})"


class CapacityPoint:
    """
    Half-duplex and full-duplex capacity magnitudes with their ratio.
    """

    def __init__(  # pylint: disable=too-many-arguments
        self,
        nu_hd: Fraction,
        nu_fd: Fraction,
        regime_branch: GainBranch,
        **kwargs
    ) -> None:
        """
        Capacity point init.

        Args:
            nu_hd: The half-duplex capacity magnitude
            nu_fd: The full-duplex capacity magnitude
            regime_branch: The gain formula branch the point falls in

        Keyword args:
            gain: The full-duplex gain, defaults to nu_fd / nu_hd
            bound_hd: The half-duplex sum-rate bound
            bound_fd: The full-duplex sum-rate bound
            equal_groups: Whether the equal group size assumption holds
        """
        self.nu_hd = Fraction(nu_hd)
        self.nu_fd = Fraction(nu_fd)
        self.regime_branch = regime_branch
        self.gain = Fraction(
            kwargs["gain"]
            if kwargs.get("gain") is not None
            else (self.nu_fd / self.nu_hd if self.nu_hd else 0)
        )
        self.bound_hd: Fraction | None = kwargs.get("bound_hd")
        self.bound_fd: Fraction | None = kwargs.get("bound_fd")
        self.equal_groups: bool = kwargs.get("equal_groups", True)

    def to_dict(self) -> dict[str, Any]:
        """
        Get the capacity point in a serialisable format.

        Returns:
            The magnitudes, gain and branch as a dictionary.
        """
        return {
            "nu_hd": float(self.nu_hd),
            "nu_fd": float(self.nu_fd),
            "gain": float(self.gain),
            "gain_exact": str(self.gain),
            "branch": self.regime_branch.value,
            "equal_groups": self.equal_groups
        }

    def __repr__(self) -> str:
        return (
            f"CapacityPoint(nu_hd={self.nu_hd}, nu_fd={self.nu_fd},"
            f" gain={self.gain}, branch={self.regime_branch.value})"
        )


# region Sum-rates
def _sum_rate(counts: tuple[int, ...], k_minislots: int) -> int:
    """
    Inter-group ordered pairs among the selected users plus the slots left
    after probing, times the selected users.
    """
    total = sum(counts)
    pairs = (total * total - sum(count * count for count in counts)) // 2
    return pairs + (k_minislots - total) * total


def sum_rate(selection: UserSelection, config: SystemConfig) -> int:
    """
    The total rate of any schedule placing the selected users in the
    leading slots, in any order.

    Args:
        selection: The user-selection vector
        config: The system config

    Returns:
        The full-duplex sum-rate.
    """
    selection.validate(config)
    return _sum_rate(selection.counts, config.k_minislots)


def hd_sum_rate(selection: UserSelection, config: SystemConfig) -> int:
    """
    The half-duplex sum-rate: every probed user receives the slots left
    after probing.

    Args:
        selection: The user-selection vector
        config: The system config

    Returns:
        The half-duplex sum-rate.
    """
    selection.validate(config)
    return (config.k_minislots - selection.total) * selection.total
# endregion Sum-rates


# region Capacity magnitudes
def hd_capacity(n_users: int, k_minislots: int) -> Fraction:
    """
    The half-duplex capacity magnitude.

    Args:
        n_users: The number of users (N)
        k_minislots: The number of mini-slots (K)

    Returns:
        K^2 / 4N when N >= K / 2, otherwise K - N.
    """
    n = utils.check_positive_int(n_users, "n_users")
    k = utils.check_positive_int(k_minislots, "k_minislots")
    if 2 * n >= k:
        return Fraction(k * k, 4 * n)
    return Fraction(k - n)


def fd_bound(n_users: int, k_minislots: int, n_groups: int) -> Fraction:
    """
    The full-duplex sum-rate bound over continuous equal-size selections.

    Args:
        n_users: The number of users (N)
        k_minislots: The number of mini-slots (K)
        n_groups: The number of groups (I)

    Returns:
        IK^2 / 2(I + 1) when N >= IK / (I + 1), otherwise
        N(2IK - N - IN) / 2I.
    """
    n = utils.check_positive_int(n_users, "n_users")
    k = utils.check_positive_int(k_minislots, "k_minislots")
    i = utils.check_positive_int(n_groups, "n_groups")
    if n * (i + 1) >= i * k:
        return Fraction(i * k * k, 2 * (i + 1))
    return Fraction(n * (2 * i * k - n - i * n), 2 * i)


def fd_capacity(n_users: int, k_minislots: int, n_groups: int) -> Fraction:
    """
    The full-duplex capacity magnitude of the randomised equal-share policy.

    The formula assumes N / I users per group; it is applied as-is
    otherwise.

    Args:
        n_users: The number of users (N)
        k_minislots: The number of mini-slots (K)
        n_groups: The number of groups (I)

    Returns:
        IK^2 / 2N(I + 1) when N >= IK / (I + 1), otherwise
        (2IK - N - IN) / 2I.
    """
    return fd_bound(n_users, k_minislots, n_groups) / n_users


def capacity_point(
    n_users: int,
    k_minislots: int,
    n_groups: int
) -> CapacityPoint:
    """
    Both capacity magnitudes and the gain for a concrete system.

    Args:
        n_users: The number of users (N)
        k_minislots: The number of mini-slots (K)
        n_groups: The number of groups (I)

    Returns:
        The capacity point, flagged when N is not a multiple of I.
    """
    nu_hd = hd_capacity(n_users, k_minislots)
    nu_fd = fd_capacity(n_users, k_minislots, n_groups)
    equal_groups = n_users % n_groups == 0
    if not equal_groups:
        utils.print_warning(
            f"N={n_users} is not a multiple of I={n_groups}; the capacity"
            " formulas assume equal group sizes."
        )
    return CapacityPoint(
        nu_hd,
        nu_fd,
        gain_branch(GainParams(Fraction(k_minislots, n_users), n_groups)),
        bound_hd=nu_hd * n_users,
        bound_fd=nu_fd * n_users,
        equal_groups=equal_groups
    )
# endregion Capacity magnitudes


# region Full-duplex gain
def gain_branch(params: GainParams) -> GainBranch:
    """
    The gain formula branch that applies to the parameters. Boundary points
    belong to the lower branch.

    Args:
        params: The gain parameters

    Returns:
        The branch.
    """
    i = params.n_groups
    if params.alpha <= Fraction(i + 1, i):
        return GainBranch.MANY_USERS
    if params.alpha <= 2:
        return GainBranch.MODERATE
    return GainBranch.FEW_USERS


def gain_by_branch(params: GainParams, branch: GainBranch) -> Fraction:
    """
    Evaluate one branch of the gain formula, whether or not it applies.

    Args:
        params: The gain parameters
        branch: The branch to evaluate

    Returns:
        The branch's gain expression at the parameters.
    """
    alpha, i = params.alpha, params.n_groups
    if branch is GainBranch.MANY_USERS:
        return Fraction(2 * i, i + 1)
    if branch is GainBranch.MODERATE:
        return 2 * (2 * i * alpha - 1 - i) / (i * alpha * alpha)
    if alpha == 1:
        raise ValueError("The few users branch is undefined at alpha = 1.")
    return 1 + Fraction(i - 1) / (2 * i * (alpha - 1))


def fd_gain(params: GainParams) -> CapacityPoint:
    """
    The full-duplex gain as a function of alpha = K / N and I.

    The capacity magnitudes of the returned point are per user count, i.e.
    nu / N, which depend on alpha alone.

    Args:
        params: The gain parameters

    Returns:
        The capacity point with its gain and branch.
    """
    alpha, i = params.alpha, params.n_groups
    branch = gain_branch(params)

    nu_hd = alpha * alpha / 4 if alpha <= 2 else alpha - 1
    if alpha <= Fraction(i + 1, i):
        nu_fd = i * alpha * alpha / (2 * (i + 1))
    else:
        nu_fd = (2 * i * alpha - 1 - i) / (2 * i)

    return CapacityPoint(
        nu_hd,
        nu_fd,
        branch,
        gain=gain_by_branch(params, branch)
    )
# endregion Full-duplex gain


# region Integer oracle
def verify_sumrate_optimum(
    n_users: int,
    k_minislots: int,
    n_groups: int
) -> tuple[UserSelection, int]:
    """
    Enumerate the integer selections with m_i <= N / I and sum(m) <= K for
    the largest full-duplex sum-rate.

    Args:
        n_users: The number of users (N)
        k_minislots: The number of mini-slots (K)
        n_groups: The number of groups (I)

    Returns:
        The first maximising selection in mixed-radix order and its
        sum-rate.
    """
    n = utils.check_positive_int(n_users, "n_users")
    k = utils.check_positive_int(k_minislots, "k_minislots")
    i = utils.check_positive_int(n_groups, "n_groups")
    cap = min(n // i, k)
    if math.pow(cap + 1, i) > MAX_ENUMERATION:
        raise InstanceTooLargeError(
            f"Enumerating {cap + 1}^{i} selections exceeds the limit of"
            f" {MAX_ENUMERATION}."
        )

    best_counts, best_rate = (0,) * i, -1
    for counts in iter_selections((cap,) * i, k):
        rate = _sum_rate(counts, k)
        if rate > best_rate:
            best_counts, best_rate = counts, rate
    return UserSelection(best_counts), best_rate
# endregion Integer oracle
