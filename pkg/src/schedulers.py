"""
This module contains the scheduling policies: the optimal MaxWeight search,
the marginal gain-based greedy policy, the half-duplex MaxWeight baseline,
a brute-force oracle and a naive longest-queue-first baseline.

Every policy is a pure function of (queues, config) returning a
ScheduleResult.
"""
from __future__ import annotations
from collections.abc import Iterator, Sequence
from enum import Enum
import functools
import itertools
from typing import Any, Callable, NamedTuple

import numpy as np

from src import utils
from src.exceptions import InstanceTooLargeError
from src.model import (
    DUMMY_USER,
    PrefixBuilder,
    QueueState,
    Schedule,
    SystemConfig,
    UserSelection,
    hd_rates,
    hd_weight,
    rate_vector,
    weight
)

# Rows of the selection grid evaluated per numpy pass
_GRID_CHUNK = 4096


class Policy(Enum):
    """
    The scheduling policies.
    """
    MAXWEIGHT_ALG1 = "MaxWeightAlg1"
    GREEDY_MGG = "GreedyMGG"
    BRUTE_FORCE = "BruteForce"
    HALF_DUPLEX_MW = "HalfDuplexMW"
    NAIVE_LQF = "NaiveLQF"


class BruteForceMode(Enum):
    """
    The schedules a brute-force search enumerates.
    """
    FULL_VECTORS = "FullVectors"
    SUBSET_PERMUTATIONS = "SubsetPermutations"


BRUTE_FORCE_LIMITS: dict[BruteForceMode, int] = {
    # mode : largest N and K accepted
    BruteForceMode.FULL_VECTORS: 6,
    BruteForceMode.SUBSET_PERMUTATIONS: 8
}


class MarginalGainEvaluation(NamedTuple):
    """
    One candidate evaluated by the greedy policy.
    """
    user: int
    slot: int
    gain: int
    placed: bool


class ScheduleResult:
    """
    The output of a scheduling policy.
    """

    def __init__(
        self,
        schedule: Schedule,
        weight_: int,
        policy_tag: Policy,
        rates: Sequence[int],
        **kwargs
    ) -> None:
        """
        Schedule result init.

        Args:
            schedule: The chosen scheduling vector
            weight_: The weight of the schedule under the policy's objective
            policy_tag: The policy that produced the schedule
            rates: The service each user receives, indexed by user id - 1

        Keyword args:
            selection: The user-selection vector behind the schedule
            evaluations: The greedy policy's marginal gain trace
        """
        utils.check_type(schedule, Schedule, "schedule")
        utils.check_type(policy_tag, Policy, "policy_tag")
        self._schedule = schedule
        self._weight = utils.check_non_negative_int(weight_, "weight")
        self._policy_tag = policy_tag
        self._rates = tuple(rates)
        self._selection: UserSelection | None = kwargs.get("selection")
        self._evaluations: tuple[MarginalGainEvaluation, ...] = tuple(
            kwargs.get("evaluations", ())
        )

    # region Properties
    @property
    def schedule(self) -> Schedule:
        """
        The chosen scheduling vector.
        """
        return self._schedule

    @property
    def weight(self) -> int:
        """
        The weight of the schedule.
        """
        return self._weight

    @property
    def policy_tag(self) -> Policy:
        """
        The policy that produced the schedule.
        """
        return self._policy_tag

    @property
    def rates(self) -> tuple[int, ...]:
        """
        The service each user receives, indexed by user id - 1.
        """
        return self._rates

    @property
    def selection(self) -> UserSelection | None:
        """
        The user-selection vector behind the schedule, if any.
        """
        return self._selection

    @property
    def evaluations(self) -> tuple[MarginalGainEvaluation, ...]:
        """
        The greedy policy's marginal gain trace.
        """
        return self._evaluations
    # endregion Properties

    def to_dict(self) -> dict[str, Any]:
        """
        Get the result in a serialisable format.

        Returns:
            The policy, schedule and weight as a dictionary.
        """
        return {
            "policy": self.policy_tag.value,
            "schedule": str(self.schedule),
            "weight": self.weight
        }

    def __repr__(self) -> str:
        return (
            f"ScheduleResult({self.policy_tag.value}, {self.schedule!r},"
            f" weight={self.weight})"
        )


def _selection_of(users: Sequence[int], config: SystemConfig) -> UserSelection:
    """
    Count the users taken from each group.
    """
    counts = [0] * config.n_groups
    for user in users:
        counts[config.group(user) - 1] += 1
    return UserSelection(counts)


def _full_duplex_result(
    users: Sequence[int],
    queues: QueueState,
    config: SystemConfig,
    policy_tag: Policy,
    **kwargs
) -> ScheduleResult:
    """
    Wrap users placed in the leading slots as a full-duplex result.
    """
    schedule = Schedule.from_users(users, config.k_minislots)
    kwargs.setdefault("selection", _selection_of(users, config))
    return ScheduleResult(
        schedule,
        weight(schedule, queues, config),
        policy_tag,
        rate_vector(schedule, config),
        **kwargs
    )


# region MaxWeight search
def iter_selections(
    caps: Sequence[int],
    budget: int
) -> Iterator[tuple[int, ...]]:
    """
    Iterate over all selections with m_i <= caps[i] and sum(m) <= budget in
    mixed-radix order, the first group being the most significant digit.

    Args:
        caps: The largest count for each group
        budget: The largest total count

    Yields:
        Each selection as a tuple of counts.
    """
    if not caps:
        yield ()
        return
    for count in range(min(caps[0], budget) + 1):
        for rest in iter_selections(caps[1:], budget - count):
            yield (count, *rest)


@functools.lru_cache(maxsize=128)
def _selection_grid(caps: tuple[int, ...], budget: int) -> np.ndarray:
    """
    All selections from iter_selections, in the same order, as a
    (selections, groups) array.
    """
    return np.array(
        list(iter_selections(caps, budget)),
        dtype=np.int64
    ).reshape(-1, len(caps))


def maxweight_alg1(
    queues: QueueState,
    config: SystemConfig
) -> ScheduleResult:
    """
    Find a MaxWeight schedule by searching over user-selection vectors.

    For every selection m the m_i longest queues of each group are placed in
    longest-queue-first order; the selection with the largest weight wins,
    the first one found on ties.

    Args:
        queues: The queue state
        config: The system config

    Returns:
        A maximum weight schedule.
    """
    queues.check_config(config)
    k = config.k_minislots
    order = queues.lqf_order()
    if not order:
        return _full_duplex_result([], queues, config, Policy.MAXWEIGHT_ALG1)

    # Every selected group's users appear in rank order within the LQF
    # order, so a user of rank r has m_g - r - 1 same-group users after it.
    group_index = np.array([config.group(user) - 1 for user in order])
    seen = [0] * config.n_groups
    rank = np.empty(len(order), dtype=np.int64)
    for position, group in enumerate(group_index):
        rank[position] = seen[group]
        seen[group] += 1
    backlog = np.array([queues[user] for user in order], dtype=np.int64)

    grid = _selection_grid(
        tuple(min(size, k) for size in config.group_sizes),
        k
    )
    best_weight, best_row = -1, 0
    for start in range(0, len(grid), _GRID_CHUNK):
        chunk = grid[start:start + _GRID_CHUNK]
        limit = chunk[:, group_index]
        selected = rank[None, :] < limit
        earlier = np.cumsum(selected, axis=1) - selected
        rates = k - earlier - limit + rank[None, :]
        weights = (selected * backlog[None, :] * rates).sum(axis=1)
        row = int(np.argmax(weights))
        if weights[row] > best_weight:
            best_weight, best_row = int(weights[row]), start + row

    counts = grid[best_row]
    users = [
        user
        for user, group, rank_ in zip(order, group_index, rank)
        if rank_ < counts[group]
    ]
    return _full_duplex_result(
        users,
        queues,
        config,
        Policy.MAXWEIGHT_ALG1,
        selection=UserSelection(int(count) for count in counts)
    )
# endregion MaxWeight search


# region Greedy
def greedy_mgg(queues: QueueState, config: SystemConfig) -> ScheduleResult:
    """
    The marginal gain-based greedy policy.

    Users are scanned longest queue first; each is appended to the next
    open slot iff its marginal gain there is non-negative. The scan stops
    once K users are placed.

    Args:
        queues: The queue state
        config: The system config

    Returns:
        The greedy schedule with its marginal gain trace.
    """
    builder = PrefixBuilder(queues, config)
    evaluations = []
    for user in queues.lqf_order():
        if builder.is_full:
            break
        slot = builder.next_slot
        gain = builder.gain(user)
        placed = gain >= 0
        if placed:
            builder.place(user)
        evaluations.append(MarginalGainEvaluation(user, slot, gain, placed))

    return _full_duplex_result(
        builder.schedule().scheduled_users,
        queues,
        config,
        Policy.GREEDY_MGG,
        evaluations=evaluations
    )
# endregion Greedy


# region Brute force
def _search_full_vectors(
    queues: QueueState,
    config: SystemConfig
) -> tuple[int, ...]:
    """
    Enumerate every length-K vector of distinct users and idle slots.

    Slots are filled from the last to the first so each placement's rate is
    known when it is made.
    """
    k = config.k_minislots
    candidates = [DUMMY_USER, *config.users]
    slots = [DUMMY_USER] * k
    used: set[int] = set()
    later_in_group: dict[int, int] = {}
    best: list[Any] = [-1, tuple(slots)]

    def fill(index: int, partial: int) -> None:
        if index < 0:
            if partial > best[0]:
                best[0], best[1] = partial, tuple(slots)
            return
        later = k - index - 1
        for user in candidates:
            if user in used:
                continue
            group = config.group(user)
            gain = queues[user] * (later - later_in_group.get(group, 0))
            slots[index] = user
            if user != DUMMY_USER:
                used.add(user)
            later_in_group[group] = later_in_group.get(group, 0) + 1
            fill(index - 1, partial + gain)
            later_in_group[group] -= 1
            used.discard(user)
        slots[index] = DUMMY_USER

    fill(k - 1, 0)
    return best[1]


def _leading_weight(
    users: Sequence[int],
    queues: QueueState,
    config: SystemConfig
) -> int:
    """
    The weight of users placed in the leading slots.
    """
    k = config.k_minislots
    total = 0
    later_in_group: dict[int, int] = {}
    for position in range(len(users) - 1, -1, -1):
        user = users[position]
        group = config.group(user)
        later = k - position - 1
        total += queues[user] * (later - later_in_group.get(group, 0))
        later_in_group[group] = later_in_group.get(group, 0) + 1
    return total


def _search_subset_permutations(
    queues: QueueState,
    config: SystemConfig
) -> tuple[int, ...]:
    """
    Enumerate every ordered subset of users placed in the leading slots.
    """
    best_weight, best_users = -1, ()
    for size in range(min(config.n_users, config.k_minislots) + 1):
        for users in itertools.permutations(config.users, size):
            candidate = _leading_weight(users, queues, config)
            if candidate > best_weight:
                best_weight, best_users = candidate, users
    return Schedule.from_users(best_users, config.k_minislots).slots


def brute_force_maxweight(
    queues: QueueState,
    config: SystemConfig,
    mode: BruteForceMode = BruteForceMode.FULL_VECTORS
) -> ScheduleResult:
    """
    Find a MaxWeight schedule by exhaustive enumeration.

    Args:
        queues: The queue state
        config: The system config
        mode: FULL_VECTORS enumerates every vector, idle slots anywhere;
            SUBSET_PERMUTATIONS only places users in the leading slots

    Returns:
        A maximum weight schedule, the first found on ties.
    """
    utils.check_type(mode, BruteForceMode, "mode")
    queues.check_config(config)
    limit = BRUTE_FORCE_LIMITS[mode]
    if config.n_users > limit or config.k_minislots > limit:
        raise InstanceTooLargeError(
            f"{mode.value} brute force supports N <= {limit} and K <= {limit},"
            f" got N={config.n_users} and K={config.k_minislots}."
        )

    if mode is BruteForceMode.FULL_VECTORS:
        slots = _search_full_vectors(queues, config)
    else:
        slots = _search_subset_permutations(queues, config)

    schedule = Schedule(slots)
    return ScheduleResult(
        schedule,
        weight(schedule, queues, config),
        Policy.BRUTE_FORCE,
        rate_vector(schedule, config),
        selection=_selection_of(schedule.scheduled_users, config)
    )
# endregion Brute force


# region Half-duplex
def halfduplex_maxweight(
    queues: QueueState,
    config: SystemConfig
) -> ScheduleResult:
    """
    The half-duplex MaxWeight baseline.

    Probing the m longest queues takes the first m mini-slots and each of
    them then receives K - m packets, whatever their groups. Every m is
    scanned and the smallest maximiser wins.

    Args:
        queues: The queue state
        config: The system config

    Returns:
        The half-duplex schedule, whose weight and rates are half-duplex.
    """
    queues.check_config(config)
    k = config.k_minislots
    order = queues.lqf_order()

    best_m, best_weight, backlog = 0, 0, 0
    for m in range(1, min(config.n_users, k) + 1):
        backlog += queues[order[m - 1]]
        candidate = (k - m) * backlog
        if candidate > best_weight:
            best_m, best_weight = m, candidate

    users = order[:best_m]
    schedule = Schedule.from_users(users, k)
    return ScheduleResult(
        schedule,
        hd_weight(schedule, queues, config),
        Policy.HALF_DUPLEX_MW,
        hd_rates(schedule, config),
        selection=_selection_of(users, config)
    )


def halfduplex_first_drop(queues: QueueState, config: SystemConfig) -> int:
    """
    The smallest m at which probing one more user lowers the half-duplex
    weight, or min(N, K) when that never happens.

    Args:
        queues: The queue state
        config: The system config

    Returns:
        The number of users to probe.
    """
    queues.check_config(config)
    k = config.k_minislots
    order = queues.lqf_order()
    limit = min(config.n_users, k)
    backlog = 0
    for m in range(limit):
        if queues[order[m]] * (k - m - 1) < backlog:
            return m
        backlog += queues[order[m]]
    return limit
# endregion Half-duplex


# region Naive LQF
def naive_lqf(queues: QueueState, config: SystemConfig) -> ScheduleResult:
    """
    Fill the slots with the min(N, K) longest queues, ignoring groups.

    Args:
        queues: The queue state
        config: The system config

    Returns:
        The longest-queue-first schedule.
    """
    queues.check_config(config)
    users = queues.lqf_order()[:config.k_minislots]
    return _full_duplex_result(users, queues, config, Policy.NAIVE_LQF)
# endregion Naive LQF


# region Worst-case instance
def tightness_instance(k_minislots: int) -> tuple[SystemConfig, QueueState]:
    """
    The instance on which the greedy policy attains exactly
    (K^2 - 1) / 3 against the optimum K(K - 1) / 2.

    K must be a power of two. There are K - 1 groups; group i holds K / 2^i
    users for i <= log2(K) and the remaining groups one user each. Every
    queue is 1 and ids run group by group so the greedy scan meets group 1
    first.

    Args:
        k_minislots: The number of mini-slots, a power of two

    Returns:
        The system config and queue state.
    """
    k = utils.check_positive_int(k_minislots, "k_minislots")
    if k < 2 or k & (k - 1):
        raise ValueError(f"k_minislots must be a power of two >= 2, got {k}.")
    sizes = [max(k >> group, 1) for group in range(1, k)]
    config = SystemConfig.from_group_sizes(sizes, k)
    return config, QueueState([1] * config.n_users)
# endregion Worst-case instance


PolicyFunction = Callable[[QueueState, SystemConfig], ScheduleResult]

POLICIES: dict[str, PolicyFunction] = {
    # CLI name : policy
    "maxweight": maxweight_alg1,
    "greedy": greedy_mgg,
    "halfduplex": halfduplex_maxweight,
    "naive-lqf": naive_lqf,
    "brute-force": brute_force_maxweight
}


def get_policy(name: str) -> PolicyFunction:
    """
    Look up a policy by its CLI name.

    Args:
        name: The policy name

    Returns:
        The policy function.
    """
    if name not in POLICIES:
        raise ValueError(
            f"Invalid policy {name!r}. Select from"
            f" {utils.join_with_different_last(POLICIES, ', ', ' or ')}."
        )
    return POLICIES[name]
