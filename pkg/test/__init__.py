"""
This module is the init module for the test package.
"""
import numpy as np

from src.model import QueueState, SystemConfig

FLOAT_TOLERANCE: float = 1e-12


def random_instance(
    rng: np.random.Generator,
    max_users: int,
    max_minislots: int,
    max_groups: int,
    max_queue: int = 100
) -> tuple[SystemConfig, QueueState]:
    """
    Draw a random system and queue state.

    Args:
        rng: The random generator
        max_users: The largest number of users
        max_minislots: The largest number of mini-slots
        max_groups: The largest number of groups
        max_queue: The largest queue-length

    Returns:
        The system config and queue state.
    """
    n_users = int(rng.integers(1, max_users + 1))
    k_minislots = int(rng.integers(1, max_minislots + 1))
    n_groups = int(rng.integers(1, max_groups + 1))
    config = SystemConfig.random(n_users, n_groups, k_minislots, rng)
    queues = QueueState(
        int(queue) for queue in rng.integers(0, max_queue + 1, size=n_users)
    )
    return config, queues


def random_users(
    rng: np.random.Generator,
    config: SystemConfig,
    minimum: int = 0
) -> list[int]:
    """
    Draw distinct users, at most one per mini-slot, in random order.

    Args:
        rng: The random generator
        config: The system config
        minimum: The smallest number of users to draw

    Returns:
        The user ids.
    """
    limit = min(config.n_users, config.k_minislots)
    count = int(rng.integers(minimum, limit + 1))
    return [int(user) for user in rng.permutation(config.n_users)[:count] + 1]
