"""
This module contains the experiment suites behind the command line: one-shot
scheduler comparison, raw simulation, arrival rate sweeps, the three
benchmark regimes, the random group assignment gain distribution, the gain
curves and the greedy tightness table.

Every command returns an ExperimentResult whose frame has a fixed column set
and is sorted by its key columns.
"""
from __future__ import annotations
from fractions import Fraction
from typing import Any, NamedTuple

import numpy as np
import pandas as pd

from src import analytics, schedulers, simulator, utils
from src.config import (
    REGIME_MINISLOTS,
    REGIMES,
    CdfSettings,
    ExperimentConfig
)
from src.exceptions import ConfigError
from src.model import SystemConfig

FINITE_HORIZON_NOTE = (
    "finite-horizon approximation: stable iff the least-squares slope of the"
    " total queue over the measurement window is below the threshold"
)


class ExperimentResult(NamedTuple):
    """
    The output of an experiment command.
    """
    frame: pd.DataFrame
    metadata: dict[str, Any]
    extra: dict[str, pd.DataFrame] | None = None


def _require_system(config: ExperimentConfig, command: str) -> SystemConfig:
    if config.system is None:
        raise ConfigError(
            f"The {command} command needs a system section with a regime,"
            " group_sizes or group_of."
        )
    return config.system


def _warn_finite_horizon(horizon: int, window: float) -> None:
    utils.print_warning(
        f"Stability verdicts come from a {horizon} slot horizon measured over"
        f" its last {window:.0%}; they approximate positive recurrence."
    )


def _threshold(config: ExperimentConfig, system: SystemConfig) -> float:
    return config.simulation.threshold \
        or simulator.default_threshold(system)


# region Schedule
def cmd_schedule(config: ExperimentConfig) -> ExperimentResult:
    """
    Run every requested policy on one queue state.

    Args:
        config: The experiment config, with a system and queues

    Returns:
        One row per policy: schedule, weight and ratio to the optimum.
    """
    system = _require_system(config, "schedule")
    if config.queues is None:
        raise ConfigError("The schedule command needs a queues vector.")
    optimal = schedulers.maxweight_alg1(config.queues, system).weight

    rows = []
    for name in config.policies:
        result = schedulers.get_policy(name)(config.queues, system)
        rows.append({
            "policy": name,
            "schedule": str(result.schedule),
            "weight": result.weight,
            "optimal": optimal,
            "ratio": (
                float(Fraction(result.weight, optimal)) if optimal else 1.0
            )
        })
    return ExperimentResult(
        pd.DataFrame(
            rows,
            columns=["policy", "schedule", "weight", "optimal", "ratio"]
        ),
        {**config.metadata(), "queues": list(config.queues.q)}
    )
# endregion Schedule


# region Simulation
def cmd_simulate(config: ExperimentConfig) -> ExperimentResult:
    """
    Run one simulation with the first requested policy.

    Args:
        config: The experiment config, with a system

    Returns:
        The per-slot trace.
    """
    system = _require_system(config, "simulate")
    settings = config.simulation
    if len(config.policies) > 1:
        utils.print_warning(
            f"simulate runs a single policy; using {config.policies[0]}."
        )
    spec = simulator.ArrivalSpec.uniform(
        system.n_users,
        settings.arrival_rate,
        settings.batch_size or system.k_minislots
    )
    trace = simulator.run(
        system,
        schedulers.get_policy(config.policies[0]),
        spec,
        settings.horizon,
        config.seed,
        initial_queues=config.queues,
        window=settings.window,
        progress=True
    )
    return ExperimentResult(
        trace.to_frame(),
        {
            **config.metadata(),
            "policy": config.policies[0],
            "arrival_rate": settings.arrival_rate,
            "batch_size": spec.batch_size,
            "horizon": settings.horizon,
            "window": settings.window,
            "mean_queue": trace.mean_queue,
            "slope": trace.growth_slope
        }
    )


def _sweep_rows(
    system: SystemConfig,
    config: ExperimentConfig,
    **labels: Any
) -> list[dict[str, Any]]:
    """
    Probe the lambda grid under every requested policy.
    """
    settings = config.simulation
    rows = []
    for name in config.policies:
        probes = simulator.sweep(
            system,
            schedulers.get_policy(name),
            settings.lambdas,
            settings.horizon,
            config.seed,
            threshold=settings.threshold,
            window=settings.window,
            batch_size=settings.batch_size,
            workers=config.workers
        )
        rows.extend(
            {**labels, "policy": name, **probe._asdict()} for probe in probes
        )
    return rows


def _simulation_metadata(
    config: ExperimentConfig,
    system: SystemConfig
) -> dict[str, Any]:
    settings = config.simulation
    return {
        **config.metadata(),
        "horizon": settings.horizon,
        "window": settings.window,
        "threshold": _threshold(config, system),
        "batch_size": settings.batch_size or system.k_minislots,
        "criterion": FINITE_HORIZON_NOTE
    }


def cmd_sweep(config: ExperimentConfig) -> ExperimentResult:
    """
    Mean queue-length and stability verdict over the lambda grid.

    Args:
        config: The experiment config, with a system

    Returns:
        One row per policy and arrival rate.
    """
    system = _require_system(config, "sweep")
    _warn_finite_horizon(config.simulation.horizon, config.simulation.window)
    frame = pd.DataFrame(
        _sweep_rows(system, config),
        columns=["policy", "arrival_rate", "mean_queue", "slope", "stable"]
    ).sort_values(["policy", "arrival_rate"], ignore_index=True)
    return ExperimentResult(frame, _simulation_metadata(config, system))
# endregion Simulation


# region Regimes
def _regime_systems(config: ExperimentConfig) -> dict[str, SystemConfig]:
    """
    The configured regime, a custom system, or all three regimes.
    """
    if config.regime is not None and config.system is not None:
        return {str(config.regime): config.system}
    if config.system is not None:
        return {"custom": config.system}
    return {
        str(regime): SystemConfig.from_group_sizes(
            list(sizes),
            REGIME_MINISLOTS
        )
        for regime, sizes in REGIMES.items()
    }


def _capacity_rows(
    label: str,
    system: SystemConfig,
    config: ExperimentConfig
) -> list[dict[str, Any]]:
    """
    Bisect the capacity boundary of every requested policy.
    """
    settings = config.simulation
    boundaries = {}
    for name in config.policies:
        estimate = simulator.estimate_capacity(
            system,
            schedulers.get_policy(name),
            settings.bracket,
            settings.tolerance,
            settings.horizon,
            config.seed,
            threshold=settings.threshold,
            window=settings.window,
            batch_size=settings.batch_size,
            progress=True
        )
        boundaries[name] = estimate.boundary

    reference = boundaries.get("halfduplex")
    return [
        {
            "regime": label,
            "policy": name,
            "boundary": boundary,
            "tolerance": settings.tolerance,
            "gain": boundary / reference if reference else float("nan")
        }
        for name, boundary in boundaries.items()
    ]


def cmd_regimes(config: ExperimentConfig) -> ExperimentResult:
    """
    Mean queue-length against lambda for each policy in each regime, with
    the capacity boundaries when requested.

    Args:
        config: The experiment config

    Returns:
        The sweep rows, plus a "capacity" table when
        simulation.estimate_capacity is set.
    """
    settings = config.simulation
    _warn_finite_horizon(settings.horizon, settings.window)
    sweep_rows: list[dict[str, Any]] = []
    capacity_rows: list[dict[str, Any]] = []
    systems = _regime_systems(config)
    for label, system in systems.items():
        sweep_rows.extend(_sweep_rows(system, config, regime=label))
        if settings.estimate_capacity:
            capacity_rows.extend(_capacity_rows(label, system, config))

    frame = pd.DataFrame(
        sweep_rows,
        columns=[
            "regime",
            "policy",
            "arrival_rate",
            "mean_queue",
            "slope",
            "stable"
        ]
    ).sort_values(["regime", "policy", "arrival_rate"], ignore_index=True)
    extra = None
    if settings.estimate_capacity:
        extra = {
            "capacity": pd.DataFrame(
                capacity_rows,
                columns=["regime", "policy", "boundary", "tolerance", "gain"]
            ).sort_values(["regime", "policy"], ignore_index=True)
        }
    metadata = _simulation_metadata(config, next(iter(systems.values())))
    metadata.pop("group_sizes", None)
    metadata["regimes"] = {
        label: list(system.group_sizes) for label, system in systems.items()
    }
    return ExperimentResult(frame, metadata, extra)
# endregion Regimes


# region Random group assignment
class GainSampleTask(NamedTuple):
    """
    One random group assignment of the gain distribution.
    """
    sample: int
    system: SystemConfig
    policy: str
    arrival_seed: int
    settings: CdfSettings
    window: float
    threshold: float | None


def _gain_sample(task: GainSampleTask) -> dict[str, Any]:
    """
    Estimate the full-duplex and half-duplex boundaries of one assignment.
    """
    boundaries = [
        simulator.estimate_capacity(
            task.system,
            schedulers.get_policy(name),
            task.settings.bracket,
            task.settings.tolerance,
            task.settings.horizon,
            task.arrival_seed,
            threshold=task.threshold,
            window=task.window
        ).boundary
        for name in (task.policy, "halfduplex")
    ]
    return {
        "sample": task.sample,
        "group_sizes": " ".join(map(str, task.system.group_sizes)),
        "fd_boundary": boundaries[0],
        "hd_boundary": boundaries[1],
        "gain": boundaries[0] / boundaries[1]
    }


def gain_sample_tasks(config: ExperimentConfig) -> list[GainSampleTask]:
    """
    Draw the random group assignments.

    Each sample owns a child seed, so its assignment and arrival streams do
    not depend on the number of samples drawn or on the worker count.

    Args:
        config: The experiment config

    Returns:
        One task per sample.
    """
    settings = config.cdf
    root = np.random.SeedSequence(
        config.seed,
        spawn_key=(simulator.STREAM_PURPOSES["groups"],)
    )
    tasks = []
    for sample, child in enumerate(root.spawn(settings.samples)):
        if settings.single_group:
            system = SystemConfig(
                settings.k_minislots,
                [1] * settings.n_users,
                settings.n_groups
            )
        else:
            system = SystemConfig.random(
                settings.n_users,
                settings.n_groups,
                settings.k_minislots,
                np.random.Generator(np.random.Philox(child))
            )
        tasks.append(GainSampleTask(
            sample,
            system,
            settings.policy,
            int(child.generate_state(1, np.uint64)[0]),
            settings,
            config.simulation.window,
            config.simulation.threshold
        ))
    return tasks


def cmd_cdf(config: ExperimentConfig) -> ExperimentResult:
    """
    The empirical distribution of the full-duplex gain over random group
    assignments.

    Args:
        config: The experiment config

    Returns:
        One row per sample sorted by gain, with the empirical CDF.
    """
    settings = config.cdf
    _warn_finite_horizon(settings.horizon, config.simulation.window)
    rows = simulator.map_parallel(
        _gain_sample,
        gain_sample_tasks(config),
        config.workers,
        "Sampling group assignments"
    )
    frame = pd.DataFrame(
        rows,
        columns=["sample", "group_sizes", "fd_boundary", "hd_boundary", "gain"]
    ).sort_values(["gain", "sample"], ignore_index=True)
    frame["cdf"] = np.arange(1, len(frame) + 1) / len(frame)
    return ExperimentResult(
        frame,
        {
            "kind": "cdf",
            "seed": config.seed,
            "policy": settings.policy,
            "samples": settings.samples,
            "n_users": settings.n_users,
            "n_groups": settings.n_groups,
            "k_minislots": settings.k_minislots,
            "horizon": settings.horizon,
            "tolerance": settings.tolerance,
            "bracket": list(settings.bracket),
            "window": config.simulation.window,
            "threshold": config.simulation.threshold or float(
                simulator.THRESHOLD_PER_MINISLOT * settings.k_minislots
            ),
            "criterion": FINITE_HORIZON_NOTE,
            "median_gain": float(frame["gain"].median()),
            "share_gain_at_least_1.44": float((frame["gain"] >= 1.44).mean())
        }
    )
# endregion Random group assignment


# region Gain curves
def _gain_row(curve: str, alpha: Fraction, n_groups: int) -> dict[str, Any]:
    point = analytics.fd_gain(analytics.GainParams(alpha, n_groups))
    return {
        "curve": curve,
        "n_groups": n_groups,
        "alpha": float(alpha),
        "alpha_exact": str(alpha),
        "gain": float(point.gain),
        "gain_exact": str(point.gain),
        "branch": point.regime_branch.value
    }


def cmd_gain_curves(config: ExperimentConfig) -> ExperimentResult:
    """
    The gain formula over an alpha grid at fixed I and over a range of I at
    fixed alphas.

    Args:
        config: The experiment config

    Returns:
        One row per grid point, evaluated exactly and tagged by branch.
    """
    settings = config.gain_curves
    rows = [
        _gain_row("alpha", alpha, settings.n_groups)
        for alpha in sorted(set(settings.alphas))
    ]
    low, high = settings.group_range
    rows.extend(
        _gain_row("groups", alpha, n_groups)
        for alpha in sorted(set(settings.fixed_alphas))
        for n_groups in range(low, high + 1)
    )
    frame = pd.DataFrame(
        rows,
        columns=[
            "curve",
            "n_groups",
            "alpha",
            "alpha_exact",
            "gain",
            "gain_exact",
            "branch"
        ]
    )
    return ExperimentResult(
        frame,
        {
            "kind": "gain-curves",
            "n_groups": settings.n_groups,
            "group_range": list(settings.group_range)
        }
    )
# endregion Gain curves


# region Tightness
class TightnessRow(NamedTuple):
    """
    The greedy policy against the optimum on one worst-case instance.
    """
    k_minislots: int
    optimal: int
    greedy: int
    ratio: Fraction


def tightness_table(max_r: int) -> list[TightnessRow]:
    """
    Run the greedy policy on the worst-case instances K = 4, 8, ..., 2^max_r.

    The optimum K(K - 1) / 2 schedules one user from each group.

    Args:
        max_r: The largest log2 K, at most 10

    Returns:
        One row per K with the exact ratio.
    """
    max_r = utils.check_positive_int(max_r, "max_r")
    if not 2 <= max_r <= 10:
        raise ValueError(f"max_r must be in 2..10, got {max_r}.")
    rows = []
    for r in range(2, max_r + 1):
        k = 2**r
        system, queues = schedulers.tightness_instance(k)
        greedy = schedulers.greedy_mgg(queues, system).weight
        optimal = k * (k - 1) // 2
        rows.append(
            TightnessRow(k, optimal, greedy, Fraction(greedy, optimal))
        )
    return rows


def cmd_tightness(max_r: int) -> ExperimentResult:
    """
    The greedy tightness table.

    Args:
        max_r: The largest log2 K, at most 10

    Returns:
        One row per K: optimum, greedy weight and their ratio.
    """
    frame = pd.DataFrame(
        [
            {
                "k_minislots": row.k_minislots,
                "optimal": row.optimal,
                "greedy": row.greedy,
                "ratio": float(row.ratio),
                "ratio_exact": str(row.ratio)
            }
            for row in tightness_table(max_r)
        ],
        columns=["k_minislots", "optimal", "greedy", "ratio", "ratio_exact"]
    )
    return ExperimentResult(frame, {"kind": "tightness", "max_r": max_r})
# endregion Tightness
