"""
This module contains the discrete-time downlink queueing simulator:
Bernoulli batch arrivals, queue evolution under a scheduling policy and
empirical stability and capacity estimation.

Schedules are decided on the queue-lengths at the start of each slot,
before that slot's arrivals; the slot's service then applies to the queue
plus arrivals, so Q[t + 1] = max(Q[t] + A[t] - R[t], 0).
"""
from __future__ import annotations
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
import functools
import math
from fractions import Fraction
from typing import Any, NamedTuple, TypeVar

import numpy as np
from numpy.typing import NDArray
import pandas as pd
from tqdm import tqdm

from src import utils
from src.exceptions import BracketInvalidError, InvalidInputError
from src.model import QueueState, Schedule, SystemConfig
from src.schedulers import PolicyFunction

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_HORIZON = 200_000
DEFAULT_WINDOW = 0.5
# Stability threshold on the total queue growth, per mini-slot
THRESHOLD_PER_MINISLOT = Fraction(1, 100)

# Spawn keys separating the random streams drawn from one seed
STREAM_PURPOSES: dict[str, int] = {
    "arrivals": 0,
    "groups": 1
}


# region Arrivals
class ArrivalSpec:
    """
    I.i.d. batch arrivals: each slot user u receives batch_size packets with
    probability lambda_u and nothing otherwise.
    """

    def __init__(
        self,
        per_user_rate: Sequence[Any],
        batch_size: int
    ) -> None:
        """
        Arrival spec init.

        Args:
            per_user_rate: The scaled arrival rate lambda_u of each user
            batch_size: The packets in one arrival batch
        """
        utils.check_type(
            per_user_rate,
            (list, tuple, np.ndarray),
            "per_user_rate"
        )
        rates = tuple(
            utils.to_fraction(rate, "per_user_rate entry")
            for rate in per_user_rate
        )
        if any(not 0 <= rate <= 1 for rate in rates):
            raise ValueError("Every per_user_rate entry must be in [0, 1].")
        self._rates = rates
        self._batch_size = utils.check_positive_int(batch_size, "batch_size")
        self._thresholds = np.array([float(rate) for rate in rates])

    @classmethod
    def uniform(
        cls,
        n_users: int,
        rate: Any,
        batch_size: int
    ) -> ArrivalSpec:
        """
        The same arrival rate for every user.

        Args:
            n_users: The number of users
            rate: The scaled arrival rate shared by all users
            batch_size: The packets in one arrival batch

        Returns:
            The arrival spec.
        """
        return cls([rate] * n_users, batch_size)

    # region Properties
    @property
    def per_user_rate(self) -> tuple[Fraction, ...]:
        """
        The scaled arrival rate of each user.
        """
        return self._rates

    @property
    def batch_size(self) -> int:
        """
        The packets in one arrival batch.
        """
        return self._batch_size

    @property
    def n_users(self) -> int:
        """
        The number of users.
        """
        return len(self._rates)

    @property
    def thresholds(self) -> NDArray:
        """
        The arrival probabilities as floats.
        """
        return self._thresholds
    # endregion Properties


class ArrivalRng:
    """
    One independent counter-based random stream per user.

    Each user's uniforms depend only on the seed and the user, so a run
    reproduces bit for bit whatever else executes alongside it, and runs
    at different rates share the same underlying draws.
    """
    BLOCK = 4096

    def __init__(
        self,
        seed: int,
        n_users: int,
        purpose: str = "arrivals"
    ) -> None:
        """
        Arrival random stream init.

        Args:
            seed: The 64-bit seed
            n_users: The number of per-user streams
            purpose: The use of the streams, see STREAM_PURPOSES
        """
        seed = utils.check_non_negative_int(seed, "seed")
        if purpose not in STREAM_PURPOSES:
            raise ValueError(f"Unknown stream purpose {purpose!r}.")
        root = np.random.SeedSequence(
            seed,
            spawn_key=(STREAM_PURPOSES[purpose],)
        )
        self._generators = [
            np.random.Generator(np.random.Philox(child))
            for child in root.spawn(n_users)
        ]
        self._buffer = np.empty((n_users, 0))
        self._cursor = 0

    @property
    def n_users(self) -> int:
        """
        The number of per-user streams.
        """
        return len(self._generators)

    def uniforms(self) -> NDArray:
        """
        The next uniform draw in [0, 1) of every user.

        Returns:
            One draw per user.
        """
        if self._cursor == self._buffer.shape[1]:
            self._buffer = np.array(
                [stream.random(self.BLOCK) for stream in self._generators]
            ).reshape(self.n_users, self.BLOCK)
            self._cursor = 0
        draws = self._buffer[:, self._cursor]
        self._cursor += 1
        return draws


def generate_arrivals(spec: ArrivalSpec, rng: ArrivalRng) -> NDArray:
    """
    Draw one slot of arrivals.

    Args:
        spec: The arrival spec
        rng: The per-user random streams, advanced by one draw

    Returns:
        The packets arriving at each user.
    """
    if rng.n_users != spec.n_users:
        raise InvalidInputError(
            f"Expected {spec.n_users} random streams, got {rng.n_users}."
        )
    return (rng.uniforms() < spec.thresholds).astype(np.int64) \
        * spec.batch_size
# endregion Arrivals


# region Queue evolution
class SlotOutcome(NamedTuple):
    """
    The result of simulating one slot.
    """
    queues: QueueState
    schedule: Schedule
    rates: tuple[int, ...]
    delivered: tuple[int, ...]


def step(
    queues: QueueState,
    policy: PolicyFunction,
    arrivals: Sequence[int] | NDArray,
    config: SystemConfig
) -> SlotOutcome:
    """
    Simulate one slot.

    Args:
        queues: The queue-lengths at the start of the slot
        policy: The scheduling policy, applied to the pre-arrival queues
        arrivals: The packets arriving at each user this slot
        config: The system config

    Returns:
        The next queue state, the schedule, the offered rates and the
        delivered service, which never exceeds the backlog.
    """
    queues.check_config(config)
    arrivals = np.asarray(arrivals, dtype=np.int64)
    if arrivals.shape != (config.n_users,):
        raise InvalidInputError(
            f"Expected {config.n_users} arrivals, got {arrivals.shape}."
        )
    if (arrivals < 0).any():
        raise InvalidInputError("Arrivals must be non-negative.")

    result = policy(queues, config)
    result.schedule.validate(config)

    backlog = np.array(queues.q, dtype=np.int64) + arrivals
    delivered = np.minimum(np.array(result.rates, dtype=np.int64), backlog)
    return SlotOutcome(
        QueueState((backlog - delivered).tolist()),
        result.schedule,
        result.rates,
        tuple(delivered.tolist())
    )
# endregion Queue evolution


# region Trace
def window_start(horizon: int, window: float) -> int:
    """
    The first snapshot index of the measurement window.

    Args:
        horizon: The number of simulated slots
        window: The trailing fraction of the horizon to measure over

    Returns:
        The index into the horizon + 1 queue snapshots.
    """
    if not 0 < window <= 1:
        raise ValueError(f"window must be in (0, 1], got {window}.")
    return horizon - max(1, int(horizon * window))


def least_squares_slope(values: NDArray) -> float:
    """
    The least-squares slope of values against their index.

    Args:
        values: The series

    Returns:
        The fitted slope, 0 for fewer than two values.
    """
    if len(values) < 2:
        return 0.0
    return float(np.polyfit(np.arange(len(values)), values, 1)[0])


class SimulationTrace:
    """
    The time series produced by one simulation run.
    """

    def __init__(  # pylint: disable=too-many-arguments
        self,
        horizon: int,
        rng_seed: int,
        total_queue: NDArray,
        window: float = DEFAULT_WINDOW,
        **kwargs
    ) -> None:
        """
        Simulation trace init.

        Args:
            horizon: The number of simulated slots (T)
            rng_seed: The seed of the arrival streams
            total_queue: The total backlog at each of the T + 1 slot
                boundaries
            window: The trailing fraction of the horizon measured

        Keyword args:
            queue_series: (T + 1, N) per-user queue snapshots
            arrival_series: (T, N) arrivals
            rate_series: (T, N) offered rates
            delivered_series: (T, N) delivered service
            schedule_series: (T, K) scheduling vectors
        """
        self.horizon = horizon
        self.rng_seed = rng_seed
        self.window = window
        self.total_queue = total_queue
        self.window_start = window_start(horizon, window)
        self.queue_series: NDArray | None = kwargs.get("queue_series")
        self.arrival_series: NDArray | None = kwargs.get("arrival_series")
        self.rate_series: NDArray | None = kwargs.get("rate_series")
        self.delivered_series: NDArray | None = kwargs.get("delivered_series")
        self.schedule_series: NDArray | None = kwargs.get("schedule_series")

    @property
    def mean_queue(self) -> float:
        """
        The time-averaged total queue-length over the measurement window.
        """
        return float(self.total_queue[self.window_start:].mean())

    @property
    def growth_slope(self) -> float:
        """
        The least-squares growth of the total queue over the measurement
        window, in packets per slot.
        """
        return least_squares_slope(self.total_queue[self.window_start:])

    def to_frame(self) -> pd.DataFrame:
        """
        The per-slot trace as a data frame.

        Returns:
            One row per slot with the slot index, the queue-length of each
            user at the start of the slot, the service delivered to each
            user and the scheduling vector.
        """
        if self.queue_series is None or self.delivered_series is None \
                or self.schedule_series is None:
            raise ValueError("The trace was recorded without its series.")
        n_users = self.queue_series.shape[1]
        frame = pd.DataFrame({"slot": np.arange(self.horizon)})
        for user in range(1, n_users + 1):
            frame[f"q_{user}"] = self.queue_series[:-1, user - 1]
        for user in range(1, n_users + 1):
            frame[f"d_{user}"] = self.delivered_series[:, user - 1]
        frame["schedule"] = [
            utils.format_schedule(slots) for slots in self.schedule_series
        ]
        return frame


def run(  # pylint: disable=too-many-arguments, too-many-locals
    config: SystemConfig,
    policy: PolicyFunction,
    spec: ArrivalSpec,
    horizon: int,
    seed: int,
    **kwargs
) -> SimulationTrace:
    """
    Simulate the downlink for a number of slots.

    Args:
        config: The system config
        policy: The scheduling policy
        spec: The arrival spec
        horizon: The number of slots to simulate
        seed: The seed of the arrival streams

    Keyword args:
        initial_queues: The queue state at slot 0, defaults to empty
        window: The trailing fraction of the horizon to measure over
        keep_series: Whether to record every per-slot series, or only the
            total queue-length
        progress: Whether to display a progress bar

    Returns:
        The simulation trace.
    """
    horizon = utils.check_positive_int(horizon, "horizon")
    if spec.n_users != config.n_users:
        raise InvalidInputError(
            f"Expected {config.n_users} arrival rates, got {spec.n_users}."
        )
    queues: QueueState | None = kwargs.get("initial_queues")
    if queues is None:
        queues = QueueState.zeros(config.n_users)
    queues.check_config(config)
    keep_series = kwargs.get("keep_series", True)
    rng = ArrivalRng(seed, config.n_users)

    n, k = config.n_users, config.k_minislots
    total_queue = np.empty(horizon + 1, dtype=np.int64)
    total_queue[0] = queues.total
    if keep_series:
        queue_series = np.empty((horizon + 1, n), dtype=np.int64)
        queue_series[0] = queues.q
        arrival_series = np.empty((horizon, n), dtype=np.int64)
        rate_series = np.empty((horizon, n), dtype=np.int64)
        delivered_series = np.empty((horizon, n), dtype=np.int64)
        schedule_series = np.empty((horizon, k), dtype=np.int64)

    slots = range(horizon)
    if kwargs.get("progress", False):
        slots = tqdm(slots, desc="Simulating")
    for slot in slots:
        arrivals = generate_arrivals(spec, rng)
        outcome = step(queues, policy, arrivals, config)
        queues = outcome.queues
        total_queue[slot + 1] = queues.total
        if keep_series:
            queue_series[slot + 1] = queues.q
            arrival_series[slot] = arrivals
            rate_series[slot] = outcome.rates
            delivered_series[slot] = outcome.delivered
            schedule_series[slot] = outcome.schedule.slots

    series = {}
    if keep_series:
        series = {
            "queue_series": queue_series,
            "arrival_series": arrival_series,
            "rate_series": rate_series,
            "delivered_series": delivered_series,
            "schedule_series": schedule_series
        }
    return SimulationTrace(
        horizon,
        seed,
        total_queue,
        kwargs.get("window", DEFAULT_WINDOW),
        **series
    )
# endregion Trace


# region Stability
def default_threshold(config: SystemConfig) -> float:
    """
    The default stability threshold, 0.01 K packets per slot.

    Args:
        config: The system config

    Returns:
        The threshold on the total queue growth slope.
    """
    return float(THRESHOLD_PER_MINISLOT * config.k_minislots)


class ProbeResult(NamedTuple):
    """
    The stability verdict at one arrival rate.
    """
    arrival_rate: float
    mean_queue: float
    slope: float
    stable: bool


def probe_stability(  # pylint: disable=too-many-arguments
    config: SystemConfig,
    policy: PolicyFunction,
    arrival_rate: float,
    horizon: int,
    seed: int,
    **kwargs
) -> ProbeResult:
    """
    Simulate equal arrival rates and judge stability by the growth of the
    total queue over the measurement window.

    Args:
        config: The system config
        policy: The scheduling policy
        arrival_rate: The scaled arrival rate of every user
        horizon: The number of slots to simulate
        seed: The seed of the arrival streams

    Keyword args:
        threshold: The largest stable slope, defaults to 0.01 K
        window: The trailing fraction of the horizon to measure over
        batch_size: The arrival batch, defaults to K

    Returns:
        The probe result.
    """
    threshold = kwargs.get("threshold") or default_threshold(config)
    spec = ArrivalSpec.uniform(
        config.n_users,
        arrival_rate,
        kwargs.get("batch_size") or config.k_minislots
    )
    trace = run(
        config,
        policy,
        spec,
        horizon,
        seed,
        window=kwargs.get("window", DEFAULT_WINDOW),
        keep_series=False
    )
    slope = trace.growth_slope
    return ProbeResult(
        float(arrival_rate),
        trace.mean_queue,
        slope,
        slope < threshold
    )


class StabilityEstimate:
    """
    The empirical capacity boundary along the all-ones arrival direction.
    """

    def __init__(
        self,
        probes: Iterable[ProbeResult],
        boundary: float,
        criterion: float,
        tolerance: float
    ) -> None:
        """
        Stability estimate init.

        Args:
            probes: Every probe made, in any order
            boundary: The estimated largest stable arrival rate
            criterion: The slope threshold used
            tolerance: The bisection tolerance
        """
        self.probes = tuple(
            sorted(probes, key=lambda probe: probe.arrival_rate)
        )
        self.boundary = boundary
        self.criterion = criterion
        self.tolerance = tolerance

    @property
    def lambdas(self) -> tuple[float, ...]:
        """
        The tested arrival rates in ascending order.
        """
        return tuple(probe.arrival_rate for probe in self.probes)

    @property
    def verdicts(self) -> dict[float, bool]:
        """
        Whether each tested arrival rate was judged stable.
        """
        return {probe.arrival_rate: probe.stable for probe in self.probes}

    def __repr__(self) -> str:
        return (
            f"StabilityEstimate(boundary={self.boundary:.4f},"
            f" probes={len(self.probes)})"
        )


def estimate_capacity(  # pylint: disable=too-many-arguments
    config: SystemConfig,
    policy: PolicyFunction,
    bracket: tuple[float, float],
    tolerance: float,
    horizon: int,
    seed: int,
    **kwargs
) -> StabilityEstimate:
    """
    Bisect the arrival rate between a stable and an unstable end.

    Every probe reuses the same seed, so the probes differ only in their
    arrival rate.

    Args:
        config: The system config
        policy: The scheduling policy
        bracket: The stable low and unstable high arrival rates
        tolerance: The bracket width at which to stop
        horizon: The number of slots per probe
        seed: The seed of the arrival streams

    Keyword args:
        threshold: The largest stable slope, defaults to 0.01 K
        window: The trailing fraction of the horizon to measure over
        batch_size: The arrival batch, defaults to K
        progress: Whether to display a progress bar

    Returns:
        The estimate, whose boundary is the midpoint of the final bracket.
    """
    low, high = (float(end) for end in bracket)
    if not 0 <= low < high <= 1:
        raise BracketInvalidError(
            f"The bracket must satisfy 0 <= low < high <= 1, got"
            f" ({low}, {high})."
        )
    if tolerance <= 0:
        raise ValueError(f"tolerance must be > 0, got {tolerance}.")
    threshold = kwargs.get("threshold") or default_threshold(config)
    probe_kwargs = {
        "threshold": threshold,
        "window": kwargs.get("window", DEFAULT_WINDOW),
        "batch_size": kwargs.get("batch_size")
    }
    probe = functools.partial(
        probe_stability,
        config,
        policy,
        horizon=horizon,
        seed=seed,
        **probe_kwargs
    )

    probes = [probe(low), probe(high)]
    if not probes[0].stable:
        raise BracketInvalidError(
            f"The low end {low} of the bracket is not stable"
            f" (slope {probes[0].slope:.4f})."
        )
    if probes[1].stable:
        raise BracketInvalidError(
            f"The high end {high} of the bracket is stable"
            f" (slope {probes[1].slope:.4f})."
        )

    steps = max(0, math.ceil(math.log2((high - low) / tolerance)))
    with tqdm(
        total=steps,
        desc="Bisecting",
        disable=not kwargs.get("progress", False)
    ) as progress_bar:
        while high - low > tolerance:
            result = probe((low + high) / 2)
            probes.append(result)
            if result.stable:
                low = result.arrival_rate
            else:
                high = result.arrival_rate
            progress_bar.update()

    return StabilityEstimate(probes, (low + high) / 2, threshold, tolerance)


def sweep(  # pylint: disable=too-many-arguments
    config: SystemConfig,
    policy: PolicyFunction,
    lambdas: Iterable[float],
    horizon: int,
    seed: int,
    **kwargs
) -> list[ProbeResult]:
    """
    Probe stability over a grid of arrival rates.

    Args:
        config: The system config
        policy: The scheduling policy
        lambdas: The scaled arrival rates to probe
        horizon: The number of slots per probe
        seed: The seed of the arrival streams

    Keyword args:
        threshold: The largest stable slope, defaults to 0.01 K
        window: The trailing fraction of the horizon to measure over
        batch_size: The arrival batch, defaults to K
        workers: The number of processes to fan out over

    Returns:
        One probe per arrival rate, in ascending rate order.
    """
    probe = functools.partial(
        probe_stability,
        config,
        policy,
        horizon=horizon,
        seed=seed,
        threshold=kwargs.get("threshold"),
        window=kwargs.get("window", DEFAULT_WINDOW),
        batch_size=kwargs.get("batch_size")
    )
    results = map_parallel(
        probe,
        sorted(float(rate) for rate in lambdas),
        kwargs.get("workers", 1),
        "Sweeping arrival rates"
    )
    return results
# endregion Stability


# region Fan-out
def map_parallel(
    function: Callable[[T], R],
    items: Sequence[T],
    workers: int = 1,
    description: str = ""
) -> list[R]:
    """
    Apply a function to every item, in worker processes when workers > 1.

    Args:
        function: A picklable function
        items: The inputs
        workers: The number of processes
        description: The progress bar description

    Returns:
        The results in input order.
    """
    workers = utils.check_positive_int(workers, "workers")
    if workers == 1:
        return [function(item) for item in tqdm(items, desc=description)]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(tqdm(
            executor.map(function, items),
            total=len(items),
            desc=description
        ))
# endregion Fan-out
