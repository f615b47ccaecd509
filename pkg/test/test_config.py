"""
This module tests the config module.
"""
from fractions import Fraction
import pathlib

import pytest

from src.config import (
    DEFAULT_POLICIES,
    FULL_SCALE_SAMPLES,
    FULL_SCALE_TOLERANCE,
    CdfSettings,
    ExperimentConfig,
    SimulationSettings
)
from src.exceptions import ConfigError
from src.simulator import DEFAULT_HORIZON

CONFIG_PATH = pathlib.Path(__file__).parent.parent / "config.yaml"


def minimal(**sections):
    """
    A config dictionary with a seed and the given sections.
    """
    return {"experiment": {"seed": 1}, **sections}


# pylint: disable=invalid-name, too-few-public-methods
class TestLoad:
    """
    Config file loading tester.
    """

    def test_template(self):
        """
        Test the shipped config file loads.
        """
        config = ExperimentConfig.load(CONFIG_PATH)
        assert config.kind == "regimes"
        assert config.seed == 2024
        assert config.regime == 1
        assert config.system.group_sizes == (8, 5, 6, 1)
        assert config.system.k_minislots == 15
        assert config.queues is None
        assert config.policies == ("maxweight", "greedy", "halfduplex")
        assert config.simulation.horizon == 20_000
        assert config.simulation.threshold is None
        assert Fraction(11, 10) in config.gain_curves.alphas
        assert config.output_path == "results/regimes.csv"

    def test_yaml_error_location(self, tmp_path):
        """
        Test YAML syntax errors report the file, line and column.
        """
        path = tmp_path / "broken.yaml"
        path.write_text(
            "experiment:\n  kind: schedule\n  seed: 1: 2\n",
            encoding="utf-8"
        )
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.load(path)
        assert f"{path}:3:" in str(info.value)

    def test_missing_file(self, tmp_path):
        """
        Test a missing file is reported as a config error.
        """
        with pytest.raises(ConfigError):
            ExperimentConfig.load(tmp_path / "missing.yaml")

    def test_empty_file(self, tmp_path):
        """
        Test an empty file gives the defaults.
        """
        path = tmp_path / "empty.yaml"
        path.write_text("", encoding="utf-8")
        config = ExperimentConfig.load(path)
        assert config.kind is None
        assert config.seed == 0
        assert config.system is None
        assert config.policies == DEFAULT_POLICIES
        assert config.simulation == SimulationSettings()
        assert config.cdf == CdfSettings()

    def test_missing_seed_warns(self, capsys):
        """
        Test a missing seed falls back to 0 with a warning.
        """
        config = ExperimentConfig.from_dict({"experiment": {"kind": "cdf"}})
        assert config.seed == 0
        assert "experiment.seed" in capsys.readouterr().out


class TestSystem:
    """
    System section tester.
    """

    def test_group_sizes(self):
        """
        Test a system from group sizes.
        """
        config = ExperimentConfig.from_dict(minimal(
            system={"k_minislots": 4, "group_sizes": [2, 1]},
            queues=[3, 1, 2]
        ))
        assert config.system.group_of == (1, 1, 2)
        assert config.queues.q == (3, 1, 2)
        assert config.regime is None

    def test_group_of(self):
        """
        Test a system from group ids with an empty group.
        """
        config = ExperimentConfig.from_dict(minimal(
            system={"k_minislots": 4, "group_of": [1, 1, 3], "n_groups": 3}
        ))
        assert config.system.group_sizes == (2, 0, 1)

    @pytest.mark.parametrize("system", [
        {"regime": 1, "group_sizes": [1, 2], "k_minislots": 3},
        {"group_sizes": [1, 2], "group_of": [1, 2], "k_minislots": 3},
        {"group_sizes": [1, 2]},
        {"regime": 4},
        {"group_of": [1, 0], "k_minislots": 3},
        {"group_sizes": "1, 2", "k_minislots": 3}
    ])
    def test_invalid_system(self, system):
        """
        Test ambiguous, incomplete and invalid systems are rejected.
        """
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(minimal(system=system))

    def test_queue_mismatch(self):
        """
        Test queues must match the number of users.
        """
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(minimal(
                system={"k_minislots": 3, "group_sizes": [1, 1]},
                queues=[1, 2, 3]
            ))


class TestValidation:
    """
    Field validation tester.
    """
    @pytest.mark.parametrize("attributes", [
        {"bogus": 1},
        {"simulation": {"horizen": 5}},
        {"experiment": {"kind": "train"}},
        {"experiment": {"seed": -1}},
        {"experiment": {"seed": 2**64}},
        {"policies": ["round-robin"]},
        {"simulation": {"horizon": -5}},
        {"simulation": {"horizon": "10"}},
        {"simulation": {"window": 0}},
        {"simulation": {"threshold": 0}},
        {"simulation": {"arrival_rate": 1.5}},
        {"simulation": {"lambdas": []}},
        {"simulation": {"bracket": [0.1]}},
        {"simulation": {"tolerance": -0.1}},
        {"simulation": {"estimate_capacity": "yes"}},
        {"cdf": {"samples": 0}},
        {"cdf": {"policy": "optimal"}},
        {"gain_curves": {"alphas": [0]}},
        {"gain_curves": {"group_range": [5, 2]}},
        {"tightness": {"max_r": 11}},
        {"tightness": {"max_r": 1}},
        {"workers": 0},
        {"simulation": [1, 2]},
        []
    ])
    def test_invalid(self, attributes):
        """
        Test invalid values are reported as config errors.
        """
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(attributes)

    def test_unknown_key_is_named(self):
        """
        Test the unknown key is named in the error.
        """
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict({"simulation": {"horizen": 5}})
        assert "simulation.horizen" in str(info.value)


class TestSave:
    """
    Config serialisation and override tester.
    """

    def test_round_trip(self):
        """
        Test the dictionary form reproduces the config.
        """
        for config in [
            ExperimentConfig.load(CONFIG_PATH),
            ExperimentConfig.from_dict(minimal(
                system={"k_minislots": 5, "group_of": [2, 1, 2]},
                queues=[4, 0, 1]
            ))
        ]:
            assert ExperimentConfig.from_dict(config.to_dict()) == config

    def test_overrides(self):
        """
        Test command line overrides replace the file values.
        """
        config = ExperimentConfig.load(CONFIG_PATH)
        overridden = config.with_overrides(
            kind="cdf",
            seed=5,
            horizon=100,
            samples=3,
            output_path="out/cdf.csv",
            workers=2
        )
        assert overridden.kind == "cdf"
        assert overridden.seed == 5
        assert overridden.simulation.horizon == 100
        assert overridden.cdf.horizon == 100
        assert overridden.cdf.samples == 3
        assert overridden.output_path == "out/cdf.csv"
        assert overridden.workers == 2
        assert overridden.system == config.system
        assert config.seed == 2024

    def test_full_scale(self):
        """
        Test the full scale random assignment experiment settings.
        """
        config = ExperimentConfig.load(CONFIG_PATH).with_overrides(
            full_scale=True
        )
        assert config.cdf.samples == FULL_SCALE_SAMPLES
        assert config.cdf.tolerance == FULL_SCALE_TOLERANCE
        assert config.cdf.horizon == DEFAULT_HORIZON

    def test_metadata(self):
        """
        Test the metadata records the seed and the system.
        """
        metadata = ExperimentConfig.load(CONFIG_PATH).metadata()
        assert metadata == {
            "kind": "regimes",
            "seed": 2024,
            "k_minislots": 15,
            "group_sizes": [8, 5, 6, 1]
        }
