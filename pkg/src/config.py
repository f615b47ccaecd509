"""
This module contains the experiment config: the YAML schema, its validation
and the command line overrides.
"""
from __future__ import annotations
from collections.abc import Iterator, Sequence
import contextlib
from fractions import Fraction
import pathlib
import sys
from typing import Any, NamedTuple

import yaml

from src import utils
from src.exceptions import ConfigError
from src.model import QueueState, SystemConfig
from src.schedulers import POLICIES
from src.simulator import DEFAULT_HORIZON, DEFAULT_WINDOW

# region Constants
KINDS = (
    "schedule",
    "simulate",
    "sweep",
    "regimes",
    "cdf",
    "gain-curves",
    "tightness"
)

# regime : group sizes, all with K = 15 and I = 4
REGIMES: dict[int, tuple[int, ...]] = {
    1: (8, 5, 6, 1),
    2: (3, 2, 2, 3),
    3: (1, 1, 1, 1)
}
REGIME_MINISLOTS = 15

DEFAULT_POLICIES = ("maxweight", "greedy", "halfduplex")
DEFAULT_LAMBDAS = tuple(round(0.05 * step, 2) for step in range(1, 21))
DEFAULT_ALPHAS = tuple(Fraction(step, 4) for step in range(1, 21))
FULL_SCALE_SAMPLES = 10_000
FULL_SCALE_TOLERANCE = 0.002
MAX_TIGHTNESS_R = 10

# section : allowed keys, None for a leaf value
SCHEMA: dict[str, frozenset[str] | None] = {
    "experiment": frozenset({"kind", "name", "seed"}),
    "system": frozenset(
        {"k_minislots", "group_sizes", "group_of", "n_groups", "regime"}
    ),
    "queues": None,
    "policies": None,
    "simulation": frozenset({
        "horizon",
        "window",
        "threshold",
        "batch_size",
        "arrival_rate",
        "lambdas",
        "bracket",
        "tolerance",
        "estimate_capacity"
    }),
    "cdf": frozenset({
        "samples",
        "n_users",
        "n_groups",
        "k_minislots",
        "policy",
        "single_group",
        "horizon",
        "tolerance",
        "bracket"
    }),
    "gain_curves": frozenset(
        {"n_groups", "alphas", "group_range", "fixed_alphas"}
    ),
    "tightness": frozenset({"max_r"}),
    "output": frozenset({"path"}),
    "workers": None
}
# endregion Constants


# region Settings
class SimulationSettings(NamedTuple):
    """
    Queueing simulation and capacity estimation parameters.
    """
    horizon: int = DEFAULT_HORIZON
    window: float = DEFAULT_WINDOW
    threshold: float | None = None
    batch_size: int | None = None
    arrival_rate: float = 0.1
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    bracket: tuple[float, float] = (0.02, 1.0)
    tolerance: float = 0.005
    estimate_capacity: bool = False


class CdfSettings(NamedTuple):
    """
    Random group assignment experiment parameters.
    """
    samples: int = 200
    n_users: int = 10
    n_groups: int = 4
    k_minislots: int = 15
    policy: str = "maxweight"
    single_group: bool = False
    horizon: int = 20_000
    tolerance: float = 0.01
    bracket: tuple[float, float] = (0.1, 0.9)


class GainCurveSettings(NamedTuple):
    """
    The grids the gain formula is evaluated over.
    """
    n_groups: int = 10
    alphas: tuple[Fraction, ...] = DEFAULT_ALPHAS
    group_range: tuple[int, int] = (2, 15)
    fixed_alphas: tuple[Fraction, ...] = (
        Fraction(1),
        Fraction(3, 2),
        Fraction(3)
    )
# endregion Settings


# region Field parsing
@contextlib.contextmanager
def _field(name: str) -> Iterator[None]:
    """
    Report a type or value error as a config error naming the field.
    """
    try:
        yield
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"Invalid value for {name}: {exc}") from exc


def _check_keys(raw: Any) -> None:
    """
    Reject unknown sections and keys.
    """
    if not isinstance(raw, dict):
        raise ConfigError(
            f"The config must be a mapping, got {type(raw).__name__}."
        )
    for section, value in raw.items():
        if section not in SCHEMA:
            raise ConfigError(f"Unknown key {section!r}.")
        keys = SCHEMA[section]
        if keys is None or value is None:
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"Section {section!r} must be a mapping.")
        for key in value:
            if key not in keys:
                raise ConfigError(f"Unknown key '{section}.{key}'.")


def _float(value: Any, name: str) -> float:
    utils.check_type(value, (int, float), name)
    if isinstance(value, bool):
        raise TypeError(
            f"Invalid type for {name}. Expected a number, got bool."
        )
    return float(value)


def _pair(value: Any, name: str) -> tuple[Any, Any]:
    utils.check_type(value, (list, tuple), name)
    if len(value) != 2:
        raise ValueError(f"{name} must have 2 entries, got {len(value)}.")
    return value[0], value[1]


def _bracket(value: Any, name: str) -> tuple[float, float]:
    low, high = _pair(value, name)
    return _float(low, f"{name}[0]"), _float(high, f"{name}[1]")


def _policy(value: Any) -> str:
    if value not in POLICIES:
        raise ValueError(
            f"Invalid policy {value!r}. Select from"
            f" {utils.join_with_different_last(POLICIES, ', ', ' or ')}."
        )
    return value


def _with_default(
    section: dict[str, Any],
    key: str,
    default: Any,
    path: str = "",
    warn: bool = False
) -> Any:
    """
    Get a value, falling back to the default when it is missing.
    """
    if section.get(key) is None:
        if warn:
            utils.print_warning(
                f"No value for {path} was provided. Defaulting to {default}."
            )
        return default
    return section[key]
# endregion Field parsing


class ExperimentConfig:
    """
    A validated experiment definition.
    """

    def __init__(  # pylint: disable=too-many-arguments
        self,
        kind: str | None = None,
        seed: int = 0,
        **kwargs
    ) -> None:
        """
        Experiment config init.

        Args:
            kind: The experiment kind, one of KINDS
            seed: The 64-bit seed shared by every random stream

        Keyword args:
            name: A free-form experiment label
            system: The system config
            regime: The regime the system config was built from
            queues: The queue state to schedule, and the initial queues of a
                simulation
            policies: The policy names to run
            simulation: The SimulationSettings
            cdf: The CdfSettings
            gain_curves: The GainCurveSettings
            tightness_max_r: The largest log2 K of the tightness table
            output_path: Where to write the CSV output
            workers: The number of worker processes
        """
        if kind is not None and kind not in KINDS:
            raise ConfigError(
                f"Invalid experiment.kind {kind!r}. Select from"
                f" {utils.join_with_different_last(KINDS, ', ', ' or ')}."
            )
        self.kind = kind
        with _field("experiment.seed"):
            self.seed = utils.check_non_negative_int(seed, "seed")
            if self.seed >= 2**64:
                raise ValueError("seed must fit in 64 bits.")
        self.name: str | None = kwargs.get("name")
        self.system: SystemConfig | None = kwargs.get("system")
        self.regime: int | None = kwargs.get("regime")
        self.queues: QueueState | None = kwargs.get("queues")
        if self.queues is not None and self.system is not None:
            with _field("queues"):
                self.queues.check_config(self.system)

        with _field("policies"):
            self.policies = tuple(
                _policy(name)
                for name in kwargs.get("policies", DEFAULT_POLICIES)
            )
        self.simulation: SimulationSettings = kwargs.get(
            "simulation",
            SimulationSettings()
        )
        self.cdf: CdfSettings = kwargs.get("cdf", CdfSettings())
        self.gain_curves: GainCurveSettings = kwargs.get(
            "gain_curves",
            GainCurveSettings()
        )
        with _field("tightness.max_r"):
            self.tightness_max_r = utils.check_positive_int(
                kwargs.get("tightness_max_r", 7),
                "max_r"
            )
            if not 2 <= self.tightness_max_r <= MAX_TIGHTNESS_R:
                raise ValueError(
                    f"max_r must be in 2..{MAX_TIGHTNESS_R},"
                    f" got {self.tightness_max_r}."
                )
        self.output_path: str | None = kwargs.get("output_path")
        with _field("workers"):
            self.workers = utils.check_positive_int(
                kwargs.get("workers", 1),
                "workers"
            )

    # region Load
    @classmethod
    def load(cls, config_path: str | pathlib.Path) -> ExperimentConfig:
        """
        Load an experiment config from a YAML file.

        Args:
            config_path: Path to the config file

        Returns:
            The experiment config.
        """
        config_path = pathlib.Path(config_path)
        try:
            with open(
                config_path,
                "r",
                encoding=sys.getdefaultencoding()
            ) as file:
                raw = yaml.safe_load(file)
        except OSError as exc:
            raise ConfigError(
                f"Cannot read config file {config_path}: {exc.strerror}."
            ) from exc
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            location = (
                f"{config_path}:{mark.line + 1}:{mark.column + 1}"
                if mark is not None
                else str(config_path)
            )
            problem = getattr(exc, "problem", None) or str(exc)
            raise ConfigError(f"{location}: {problem}") from exc
        return cls.from_dict(raw or {})

    @classmethod
    def from_dict(cls, attributes: dict[str, Any]) -> ExperimentConfig:
        """
        Create an experiment config from its nested dictionary form.

        Args:
            attributes: The parsed YAML document

        Returns:
            The experiment config.
        """
        _check_keys(attributes)
        experiment = attributes.get("experiment") or {}
        system, regime = cls._parse_system(attributes.get("system") or {})

        queues = None
        if attributes.get("queues") is not None:
            with _field("queues"):
                utils.check_type(attributes["queues"], list, "queues")
                queues = QueueState(attributes["queues"])

        output = attributes.get("output") or {}
        return cls(
            experiment.get("kind"),
            _with_default(experiment, "seed", 0, "experiment.seed", True),
            name=experiment.get("name"),
            system=system,
            regime=regime,
            queues=queues,
            policies=attributes.get("policies") or DEFAULT_POLICIES,
            simulation=cls._parse_simulation(
                attributes.get("simulation") or {}
            ),
            cdf=cls._parse_cdf(attributes.get("cdf") or {}),
            gain_curves=cls._parse_gain_curves(
                attributes.get("gain_curves") or {}
            ),
            tightness_max_r=_with_default(
                attributes.get("tightness") or {},
                "max_r",
                7
            ),
            output_path=output.get("path"),
            workers=_with_default(attributes, "workers", 1)
        )

    @staticmethod
    def _parse_system(
        section: dict[str, Any]
    ) -> tuple[SystemConfig | None, int | None]:
        """
        Build the system config from a regime id, group sizes or group ids.
        """
        sources = [
            key for key in ("regime", "group_sizes", "group_of")
            if section.get(key) is not None
        ]
        if not sources:
            return None, None
        if len(sources) > 1:
            raise ConfigError(
                "Only one of system.regime, system.group_sizes and"
                f" system.group_of may be given, got {', '.join(sources)}."
            )

        if sources == ["regime"]:
            with _field("system.regime"):
                regime = section["regime"]
                if regime not in REGIMES:
                    raise ValueError(
                        f"Select from {', '.join(map(str, REGIMES))},"
                        f" got {regime!r}."
                    )
            with _field("system.k_minislots"):
                return SystemConfig.from_group_sizes(
                    list(REGIMES[regime]),
                    section.get("k_minislots") or REGIME_MINISLOTS
                ), regime

        if section.get("k_minislots") is None:
            raise ConfigError("No value for system.k_minislots was provided.")
        source = sources[0]
        with _field(f"system.{source}"):
            utils.check_type(section[source], list, source)
            if source == "group_sizes":
                return SystemConfig.from_group_sizes(
                    section["group_sizes"],
                    section["k_minislots"]
                ), None
            return SystemConfig(
                section["k_minislots"],
                section["group_of"],
                section.get("n_groups")
            ), None

    @staticmethod
    def _parse_simulation(section: dict[str, Any]) -> SimulationSettings:
        defaults = SimulationSettings()
        values: dict[str, Any] = {}
        with _field("simulation.horizon"):
            values["horizon"] = utils.check_positive_int(
                _with_default(
                    section,
                    "horizon",
                    defaults.horizon
                ),
                "horizon"
            )
        with _field("simulation.window"):
            values["window"] = _float(
                _with_default(section, "window", defaults.window),
                "window"
            )
            if not 0 < values["window"] <= 1:
                raise ValueError("window must be in (0, 1].")
        with _field("simulation.threshold"):
            if section.get("threshold") is not None:
                values["threshold"] = _float(section["threshold"], "threshold")
                if values["threshold"] <= 0:
                    raise ValueError("threshold must be > 0.")
        with _field("simulation.batch_size"):
            if section.get("batch_size") is not None:
                values["batch_size"] = utils.check_positive_int(
                    section["batch_size"],
                    "batch_size"
                )
        with _field("simulation.arrival_rate"):
            values["arrival_rate"] = _float(
                _with_default(
                    section,
                    "arrival_rate",
                    defaults.arrival_rate
                ),
                "arrival_rate"
            )
            if not 0 <= values["arrival_rate"] <= 1:
                raise ValueError("arrival_rate must be in [0, 1].")
        with _field("simulation.lambdas"):
            lambdas = _with_default(section, "lambdas", defaults.lambdas)
            utils.check_type(lambdas, (list, tuple), "lambdas")
            values["lambdas"] = tuple(
                _float(rate, "lambdas entry") for rate in lambdas
            )
            if not values["lambdas"] or any(
                not 0 <= rate <= 1 for rate in values["lambdas"]
            ):
                raise ValueError("lambdas must be a non-empty list in [0, 1].")
        with _field("simulation.bracket"):
            values["bracket"] = _bracket(
                _with_default(section, "bracket", defaults.bracket),
                "bracket"
            )
        with _field("simulation.tolerance"):
            values["tolerance"] = _float(
                _with_default(section, "tolerance", defaults.tolerance),
                "tolerance"
            )
            if values["tolerance"] <= 0:
                raise ValueError("tolerance must be > 0.")
        with _field("simulation.estimate_capacity"):
            values["estimate_capacity"] = _with_default(
                section,
                "estimate_capacity",
                defaults.estimate_capacity
            )
            utils.check_type(
                values["estimate_capacity"],
                bool,
                "estimate_capacity"
            )
        return SimulationSettings(**values)

    @staticmethod
    def _parse_cdf(section: dict[str, Any]) -> CdfSettings:
        defaults = CdfSettings()
        values: dict[str, Any] = {}
        positive_keys = (
            "samples",
            "n_users",
            "n_groups",
            "k_minislots",
            "horizon"
        )
        for key in positive_keys:
            with _field(f"cdf.{key}"):
                values[key] = utils.check_positive_int(
                    _with_default(section, key, getattr(defaults, key)),
                    key
                )
        with _field("cdf.policy"):
            values["policy"] = _policy(
                _with_default(section, "policy", defaults.policy)
            )
        with _field("cdf.single_group"):
            values["single_group"] = _with_default(
                section,
                "single_group",
                defaults.single_group
            )
            utils.check_type(values["single_group"], bool, "single_group")
        with _field("cdf.tolerance"):
            values["tolerance"] = _float(
                _with_default(section, "tolerance", defaults.tolerance),
                "tolerance"
            )
            if values["tolerance"] <= 0:
                raise ValueError("tolerance must be > 0.")
        with _field("cdf.bracket"):
            values["bracket"] = _bracket(
                _with_default(section, "bracket", defaults.bracket),
                "bracket"
            )
        return CdfSettings(**values)

    @staticmethod
    def _parse_gain_curves(section: dict[str, Any]) -> GainCurveSettings:
        defaults = GainCurveSettings()
        values: dict[str, Any] = {}
        with _field("gain_curves.n_groups"):
            values["n_groups"] = utils.check_positive_int(
                _with_default(section, "n_groups", defaults.n_groups),
                "n_groups"
            )
        for key in ("alphas", "fixed_alphas"):
            with _field(f"gain_curves.{key}"):
                grid = _with_default(section, key, getattr(defaults, key))
                utils.check_type(grid, (list, tuple), key)
                values[key] = tuple(
                    utils.to_fraction(alpha, f"{key} entry") for alpha in grid
                )
                if any(alpha <= 0 for alpha in values[key]):
                    raise ValueError(f"Every {key} entry must be > 0.")
        with _field("gain_curves.group_range"):
            low, high = _pair(
                _with_default(
                    section,
                    "group_range",
                    defaults.group_range
                ),
                "group_range"
            )
            values["group_range"] = (
                utils.check_positive_int(low, "group_range[0]"),
                utils.check_positive_int(high, "group_range[1]")
            )
            if low > high:
                raise ValueError("group_range must be ascending.")
        return GainCurveSettings(**values)
    # endregion Load

    # region Overrides
    def with_overrides(self, **kwargs) -> ExperimentConfig:
        """
        Apply command line overrides.

        Keyword args:
            kind: The experiment kind
            seed: The seed
            horizon: The simulation horizon, for both simulations and the
                random assignment experiment
            samples: The number of random assignment samples
            output_path: The CSV output path
            workers: The number of worker processes
            full_scale: Switch the random assignment experiment to the
                full sample count and tolerance

        Returns:
            A new config with the overrides applied.
        """
        attributes = self.to_dict()
        simulation = attributes["simulation"]
        cdf = attributes["cdf"]
        if kwargs.get("full_scale"):
            utils.print_warning(
                f"Full scale requested: {FULL_SCALE_SAMPLES} samples with a"
                f" horizon of {DEFAULT_HORIZON} slots per probe. This takes"
                " hours."
            )
            cdf["samples"] = FULL_SCALE_SAMPLES
            cdf["tolerance"] = FULL_SCALE_TOLERANCE
            cdf["horizon"] = DEFAULT_HORIZON
        if kwargs.get("kind") is not None:
            attributes["experiment"]["kind"] = kwargs["kind"]
        if kwargs.get("seed") is not None:
            attributes["experiment"]["seed"] = kwargs["seed"]
        if kwargs.get("horizon") is not None:
            simulation["horizon"] = kwargs["horizon"]
            cdf["horizon"] = kwargs["horizon"]
        if kwargs.get("samples") is not None:
            cdf["samples"] = kwargs["samples"]
        if kwargs.get("output_path") is not None:
            attributes["output"] = {"path": str(kwargs["output_path"])}
        if kwargs.get("workers") is not None:
            attributes["workers"] = kwargs["workers"]
        return ExperimentConfig.from_dict(attributes)
    # endregion Overrides

    # region Save
    def to_dict(self) -> dict[str, Any]:
        """
        Get the config in the nested dictionary form from_dict accepts.

        Returns:
            The config as a dictionary.
        """
        attributes: dict[str, Any] = {
            "experiment": {
                "kind": self.kind,
                "name": self.name,
                "seed": self.seed
            },
            "policies": list(self.policies),
            "simulation": _settings_to_dict(self.simulation),
            "cdf": _settings_to_dict(self.cdf),
            "gain_curves": _settings_to_dict(self.gain_curves),
            "tightness": {"max_r": self.tightness_max_r},
            "output": {"path": self.output_path},
            "workers": self.workers
        }
        if self.regime is not None and self.system is not None:
            attributes["system"] = {
                "regime": self.regime,
                "k_minislots": self.system.k_minislots
            }
        elif self.system is not None:
            attributes["system"] = self.system.to_dict()
        if self.queues is not None:
            attributes["queues"] = list(self.queues.q)
        return attributes

    def metadata(self) -> dict[str, Any]:
        """
        The fields that make an experiment's output reproducible.

        Returns:
            The seed and experiment parameters as a flat dictionary.
        """
        metadata: dict[str, Any] = {"kind": self.kind, "seed": self.seed}
        if self.system is not None:
            metadata["k_minislots"] = self.system.k_minislots
            metadata["group_sizes"] = list(self.system.group_sizes)
        return metadata
    # endregion Save

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, type(self))
            and self.to_dict() == other.to_dict()
        )

    def __repr__(self) -> str:
        return f"ExperimentConfig(kind={self.kind!r}, seed={self.seed})"


def _settings_to_dict(settings: NamedTuple) -> dict[str, Any]:
    """
    Convert settings to YAML friendly values, fractions as strings.
    """
    def convert(value: Any) -> Any:
        if isinstance(value, Fraction):
            return str(value)
        if isinstance(value, Sequence) and not isinstance(value, str):
            return [convert(item) for item in value]
        return value

    return {
        key: convert(value)
        for key, value in settings._asdict().items()
    }
