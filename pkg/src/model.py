"""
This module contains the system model: the static problem instance, queue
state, scheduling vectors and the rate, weight and marginal gain arithmetic
shared by every scheduler and the simulator.

User ids run from 1 to N. Slot entry 0 is the dummy user, which belongs to
the dummy group 0 and always has an empty queue.
"""
from __future__ import annotations
from collections.abc import Iterable, Sequence
from typing import Any, Iterator

import numpy as np

from src import utils
from src.exceptions import InvalidInputError, InvalidScheduleError

DUMMY_USER = 0
DUMMY_GROUP = 0


class SystemConfig:
    """
    A static problem instance: users, mini-slots per slot and user groups.
    """

    def __init__(
        self,
        k_minislots: int,
        group_of: Sequence[int],
        n_groups: int | None = None
    ) -> None:
        """
        System config init.

        Args:
            k_minislots: The number of mini-slots per time-slot (K)
            group_of: The group id of each user, indexed by user id - 1
            n_groups: The number of groups (I). Defaults to the largest
                group id in group_of. Groups without users are allowed.
        """
        self._k = utils.check_positive_int(k_minislots, "k_minislots")
        utils.check_type(group_of, (list, tuple, np.ndarray), "group_of")
        groups = tuple(
            utils.check_positive_int(group, "group_of entry")
            for group in group_of
        )

        if n_groups is None:
            n_groups = max(groups, default=1)
        self._n_groups = utils.check_positive_int(n_groups, "n_groups")
        if any(group > self._n_groups for group in groups):
            raise ValueError(
                f"Every group id must be in 1..{self._n_groups},"
                f" got {max(groups)}."
            )
        self._group_of = groups

        members: list[list[int]] = [[] for _ in range(self._n_groups)]
        for user, group in enumerate(groups, start=1):
            members[group - 1].append(user)
        self._members = tuple(tuple(users) for users in members)

    # region Constructors
    @classmethod
    def from_group_sizes(
        cls,
        group_sizes: Sequence[int],
        k_minislots: int
    ) -> SystemConfig:
        """
        Create a config where consecutive user ids fill each group in turn.

        Args:
            group_sizes: The number of users in each group
            k_minislots: The number of mini-slots per time-slot

        Returns:
            The system config.
        """
        utils.check_type(group_sizes, (list, tuple), "group_sizes")
        if not group_sizes:
            raise ValueError("group_sizes cannot be empty.")
        group_of = [
            group
            for group, size in enumerate(group_sizes, start=1)
            for _ in range(utils.check_non_negative_int(size, "group size"))
        ]
        return cls(k_minislots, group_of, len(group_sizes))

    @classmethod
    def random(
        cls,
        n_users: int,
        n_groups: int,
        k_minislots: int,
        rng: np.random.Generator
    ) -> SystemConfig:
        """
        Create a config where each user independently joins a uniformly
        chosen group.

        Args:
            n_users: The number of users
            n_groups: The number of groups
            k_minislots: The number of mini-slots per time-slot
            rng: The random generator to draw the assignment from

        Returns:
            The system config.
        """
        n_users = utils.check_non_negative_int(n_users, "n_users")
        n_groups = utils.check_positive_int(n_groups, "n_groups")
        group_of = rng.integers(1, n_groups + 1, size=n_users)
        return cls(k_minislots, [int(group) for group in group_of], n_groups)

    @classmethod
    def from_dict(cls, attributes: dict[str, Any]) -> SystemConfig:
        """
        Create a system config from an attributes dictionary.

        Args:
            attributes: The attributes of the system config

        Returns:
            A system config with the provided attributes.
        """
        return cls(
            attributes["k_minislots"],
            attributes["group_of"],
            attributes.get("n_groups")
        )
    # endregion Constructors

    # region Properties
    @property
    def n_users(self) -> int:
        """
        The number of users (N).
        """
        return len(self._group_of)

    @property
    def k_minislots(self) -> int:
        """
        The number of mini-slots per time-slot (K).
        """
        return self._k

    @property
    def n_groups(self) -> int:
        """
        The number of groups (I).
        """
        return self._n_groups

    @property
    def group_of(self) -> tuple[int, ...]:
        """
        The group id of each user, indexed by user id - 1.
        """
        return self._group_of

    @property
    def group_sizes(self) -> tuple[int, ...]:
        """
        The number of users in each group.
        """
        return tuple(len(users) for users in self._members)

    @property
    def users(self) -> range:
        """
        All user ids.
        """
        return range(1, self.n_users + 1)
    # endregion Properties

    def group(self, user: int) -> int:
        """
        The group of a user, or the dummy group for the dummy user.

        Args:
            user: The user id

        Returns:
            The group id.
        """
        if user == DUMMY_USER:
            return DUMMY_GROUP
        return self._group_of[user - 1]

    def members(self, group: int) -> tuple[int, ...]:
        """
        The users of a group in ascending id order.

        Args:
            group: The group id

        Returns:
            The user ids in the group.
        """
        if not 1 <= group <= self._n_groups:
            raise ValueError(
                f"group must be in 1..{self._n_groups}, got {group}."
            )
        return self._members[group - 1]

    # region Save
    def to_dict(self) -> dict[str, Any]:
        """
        Get all relevant attributes in a serialisable format.

        Attributes include:
            - k_minislots -- the number of mini-slots per time-slot
            - n_groups -- the number of groups
            - group_of -- the group id of each user

        Returns:
            Attributes listed above as a dictionary.
        """
        return {
            "k_minislots": self.k_minislots,
            "n_groups": self.n_groups,
            "group_of": list(self.group_of)
        }
    # endregion Save

    # region Built-ins
    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, type(self))
            and self._k == other._k
            and self._n_groups == other._n_groups
            and self._group_of == other._group_of
        )

    def __hash__(self) -> int:
        return hash((self._k, self._n_groups, self._group_of))

    def __repr__(self) -> str:
        return (
            f"SystemConfig(N={self.n_users}, K={self.k_minislots},"
            f" I={self.n_groups}, group_sizes={self.group_sizes})"
        )
    # endregion Built-ins


class QueueState:
    """
    The per-user packet backlog at a slot boundary.
    """

    def __init__(self, q: Iterable[int]) -> None:
        """
        Queue state init.

        Args:
            q: The queue-length of each user, indexed by user id - 1
        """
        self._q = tuple(
            utils.check_non_negative_int(value, "queue-length")
            for value in q
        )

    @classmethod
    def zeros(cls, n_users: int) -> QueueState:
        """
        Empty queues for every user.

        Args:
            n_users: The number of users

        Returns:
            The empty queue state.
        """
        return cls([0] * n_users)

    # region Properties
    @property
    def q(self) -> tuple[int, ...]:
        """
        The queue-lengths indexed by user id - 1.
        """
        return self._q

    @property
    def total(self) -> int:
        """
        The total backlog over all users.
        """
        return sum(self._q)
    # endregion Properties

    def check_config(self, config: SystemConfig) -> None:
        """
        Check the queue state matches the number of users in the config.

        Args:
            config: The system config
        """
        if len(self._q) != config.n_users:
            raise InvalidInputError(
                f"Expected {config.n_users} queue-lengths,"
                f" got {len(self._q)}."
            )

    def lqf_order(self, users: Iterable[int] | None = None) -> list[int]:
        """
        Order users longest queue-length first, ties by ascending id.

        Args:
            users: The users to order, defaults to all users

        Returns:
            The ordered user ids.
        """
        if users is None:
            users = range(1, len(self._q) + 1)
        return utils.lqf_order(self._q, users)

    # region Built-ins
    def __getitem__(self, user: int) -> int:
        """
        The queue-length of a user. The dummy user always has 0.
        """
        if user == DUMMY_USER:
            return 0
        return self._q[user - 1]

    def __len__(self) -> int:
        return len(self._q)

    def __iter__(self) -> Iterator[int]:
        return iter(self._q)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, type(self)) and self._q == other._q

    def __hash__(self) -> int:
        return hash(self._q)

    def __repr__(self) -> str:
        return f"QueueState({list(self._q)})"
    # endregion Built-ins


class Schedule:
    """
    A scheduling vector: the user probing in each mini-slot, 0 when idle.
    """

    def __init__(self, slots: Iterable[int]) -> None:
        """
        Schedule init.

        Args:
            slots: The user id probing in each mini-slot, 0 for idle
        """
        try:
            self._slots = tuple(
                utils.check_non_negative_int(user, "slot entry")
                for user in slots
            )
        except ValueError as exc:
            raise InvalidScheduleError(str(exc)) from exc

        users = [user for user in self._slots if user != DUMMY_USER]
        if len(users) != len(set(users)):
            raise InvalidScheduleError(
                f"A user is scheduled more than once in {list(self._slots)}."
            )

    # region Constructors
    @classmethod
    def idle(cls, k_minislots: int) -> Schedule:
        """
        The schedule with every slot idle.

        Args:
            k_minislots: The number of mini-slots

        Returns:
            The idle schedule.
        """
        return cls([DUMMY_USER] * k_minislots)

    @classmethod
    def from_users(cls, users: Sequence[int], k_minislots: int) -> Schedule:
        """
        Place users in the leading slots and pad the rest with idle slots.

        Args:
            users: The users in slot order
            k_minislots: The number of mini-slots

        Returns:
            The padded schedule.
        """
        if len(users) > k_minislots:
            raise InvalidScheduleError(
                f"Cannot place {len(users)} users in {k_minislots} slots."
            )
        return cls(list(users) + [DUMMY_USER] * (k_minislots - len(users)))
    # endregion Constructors

    # region Properties
    @property
    def slots(self) -> tuple[int, ...]:
        """
        The user id in each mini-slot.
        """
        return self._slots

    @property
    def scheduled_users(self) -> tuple[int, ...]:
        """
        The non-dummy users in slot order.
        """
        return tuple(user for user in self._slots if user != DUMMY_USER)

    @property
    def has_interior_zero(self) -> bool:
        """
        Whether an idle slot is followed by a busy slot.
        """
        seen_idle = False
        for user in self._slots:
            if user == DUMMY_USER:
                seen_idle = True
            elif seen_idle:
                return True
        return False
    # endregion Properties

    def validate(self, config: SystemConfig) -> None:
        """
        Check the schedule is valid for a config.

        Args:
            config: The system config
        """
        if len(self._slots) != config.k_minislots:
            raise InvalidScheduleError(
                f"Expected {config.k_minislots} slots,"
                f" got {len(self._slots)}."
            )
        if any(user > config.n_users for user in self._slots):
            raise InvalidScheduleError(
                f"User ids must be in 1..{config.n_users},"
                f" got {max(self._slots)}."
            )

    def shift_zeros_to_end(self) -> Schedule:
        """
        Move every idle slot behind the busy slots, keeping user order.

        Returns:
            The shifted schedule.
        """
        return Schedule.from_users(self.scheduled_users, len(self._slots))

    # region Built-ins
    def __len__(self) -> int:
        return len(self._slots)

    def __iter__(self) -> Iterator[int]:
        return iter(self._slots)

    def __getitem__(self, index: int) -> int:
        return self._slots[index]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, type(self)) and self._slots == other._slots

    def __hash__(self) -> int:
        return hash(self._slots)

    def __repr__(self) -> str:
        return f"Schedule({list(self._slots)})"

    def __str__(self) -> str:
        return utils.format_schedule(self._slots)
    # endregion Built-ins


class UserSelection:
    """
    The number of users chosen from each group.
    """

    def __init__(self, counts: Iterable[int]) -> None:
        """
        User selection init.

        Args:
            counts: The number of users to choose from each group
        """
        self._counts = tuple(
            utils.check_non_negative_int(count, "selection count")
            for count in counts
        )

    # region Properties
    @property
    def counts(self) -> tuple[int, ...]:
        """
        The count for each group.
        """
        return self._counts

    @property
    def total(self) -> int:
        """
        The total number of selected users.
        """
        return sum(self._counts)
    # endregion Properties

    def validate(self, config: SystemConfig) -> None:
        """
        Check the selection is feasible for a config.

        Args:
            config: The system config
        """
        if len(self._counts) != config.n_groups:
            raise InvalidInputError(
                f"Expected {config.n_groups} selection counts,"
                f" got {len(self._counts)}."
            )
        if self.total > config.k_minislots:
            raise InvalidInputError(
                f"Selection picks {self.total} users but only"
                f" {config.k_minislots} slots are available."
            )
        for group, (count, size) in enumerate(
            zip(self._counts, config.group_sizes),
            start=1
        ):
            if count > size:
                raise InvalidInputError(
                    f"Selection picks {count} users from group {group},"
                    f" which only has {size}."
                )

    # region Built-ins
    def __len__(self) -> int:
        return len(self._counts)

    def __iter__(self) -> Iterator[int]:
        return iter(self._counts)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, type(self)) and self._counts == other._counts

    def __hash__(self) -> int:
        return hash(self._counts)

    def __repr__(self) -> str:
        return f"UserSelection({list(self._counts)})"
    # endregion Built-ins


# region Rates and weights
def rate_vector(
    schedule: Schedule,
    config: SystemConfig
) -> tuple[int, ...]:
    """
    The downlink rate each user receives under a schedule.

    A user probing in slot i receives one packet in every later slot whose
    probing user is from a different group. Idle slots belong to the dummy
    group, so they count for every real user.

    Args:
        schedule: The scheduling vector
        config: The system config

    Returns:
        The rate of each user, indexed by user id - 1.
    """
    schedule.validate(config)
    rates = [0] * config.n_users
    later_slots = 0
    later_in_group: dict[int, int] = {}
    for user in reversed(schedule.slots):
        group = config.group(user)
        if user != DUMMY_USER:
            rates[user - 1] = later_slots - later_in_group.get(group, 0)
        later_slots += 1
        later_in_group[group] = later_in_group.get(group, 0) + 1
    return tuple(rates)


def weight(
    schedule: Schedule,
    queues: QueueState,
    config: SystemConfig
) -> int:
    """
    The MaxWeight objective: queue-length weighted sum of rates.

    Args:
        schedule: The scheduling vector
        queues: The queue state
        config: The system config

    Returns:
        The weight of the schedule.
    """
    queues.check_config(config)
    return sum(
        queue * rate
        for queue, rate in zip(queues.q, rate_vector(schedule, config))
    )


def marginal_gain(
    prefix: Schedule,
    j: int,
    candidate: int,
    queues: QueueState,
    config: SystemConfig
) -> int:
    """
    The weight change from placing a candidate in slot j, assuming no user
    is placed after it.

    The candidate gains one packet for each of the K - j remaining slots and
    blocks every earlier user of its own group for the same K - j slots.

    Args:
        prefix: A schedule whose slots 1..j-1 are determined
        j: The 1-based slot to place the candidate in
        candidate: The candidate user id
        queues: The queue state
        config: The system config

    Returns:
        The signed marginal gain.
    """
    queues.check_config(config)
    if not 1 <= j <= config.k_minislots:
        raise InvalidInputError(
            f"j must be in 1..{config.k_minislots}, got {j}."
        )
    if not 1 <= candidate <= config.n_users:
        raise InvalidInputError(
            f"candidate must be in 1..{config.n_users}, got {candidate}."
        )
    earlier = prefix.slots[:j - 1]
    if candidate in earlier:
        raise InvalidInputError(
            f"User {candidate} is already scheduled before slot {j}."
        )

    group = config.group(candidate)
    blocked = sum(
        queues[user]
        for user in earlier
        if user != DUMMY_USER and config.group(user) == group
    )
    return queues[candidate] * (config.k_minislots - j) - blocked


class PrefixBuilder:
    """
    Builds a schedule left to right, tracking the backlog already placed in
    each group so that marginal gains cost O(1).
    """

    def __init__(self, queues: QueueState, config: SystemConfig) -> None:
        """
        Prefix builder init.

        Args:
            queues: The queue state
            config: The system config
        """
        queues.check_config(config)
        self._queues = queues
        self._config = config
        self._users: list[int] = []
        self._placed_backlog = [0] * (config.n_groups + 1)
        self.total_gain = 0

    @property
    def next_slot(self) -> int:
        """
        The 1-based slot the next placement would occupy.
        """
        return len(self._users) + 1

    @property
    def is_full(self) -> bool:
        """
        Whether every slot has been placed.
        """
        return len(self._users) >= self._config.k_minislots

    def gain(self, candidate: int) -> int:
        """
        The marginal gain of placing a candidate in the next slot.

        Args:
            candidate: The candidate user id

        Returns:
            The signed marginal gain.
        """
        if self.is_full:
            raise InvalidInputError("Every slot has already been placed.")
        group = self._config.group(candidate)
        return (
            self._queues[candidate]
            * (self._config.k_minislots - self.next_slot)
            - self._placed_backlog[group]
        )

    def place(self, candidate: int) -> int:
        """
        Place a candidate in the next slot.

        Args:
            candidate: The candidate user id

        Returns:
            The marginal gain of the placement.
        """
        if candidate in self._users:
            raise InvalidInputError(f"User {candidate} is already placed.")
        gain = self.gain(candidate)
        self._users.append(candidate)
        self._placed_backlog[self._config.group(candidate)] += (
            self._queues[candidate]
        )
        self.total_gain += gain
        return gain

    def schedule(self) -> Schedule:
        """
        The schedule built so far, padded with idle slots.

        Returns:
            The schedule.
        """
        return Schedule.from_users(self._users, self._config.k_minislots)
# endregion Rates and weights


# region Half-duplex
def hd_rates(schedule: Schedule, config: SystemConfig) -> tuple[int, ...]:
    """
    The rates under half-duplex operation, where every probed user waits for
    the probing phase to finish and then receives K - m packets.

    Args:
        schedule: The scheduling vector, whose scheduled users are probed
        config: The system config

    Returns:
        The rate of each user, indexed by user id - 1.
    """
    schedule.validate(config)
    probed = schedule.scheduled_users
    rates = [0] * config.n_users
    for user in probed:
        rates[user - 1] = config.k_minislots - len(probed)
    return tuple(rates)


def hd_weight(
    schedule: Schedule,
    queues: QueueState,
    config: SystemConfig
) -> int:
    """
    The half-duplex weight: (K - m) times the backlog of the m probed users.

    Args:
        schedule: The scheduling vector
        queues: The queue state
        config: The system config

    Returns:
        The half-duplex weight.
    """
    queues.check_config(config)
    return sum(
        queue * rate
        for queue, rate in zip(queues.q, hd_rates(schedule, config))
    )
# endregion Half-duplex
