"""
tests/test_settings.py
"""

import pytest
import yaml

from poisoncert.config.settings import CONFIG_ENV_VAR, PoisonCertSettings, SettingsManager
from poisoncert.utils.exceptions import ConfigurationError


def test_defaults_without_file(tmp_path):
    settings = SettingsManager(tmp_path / "config.yaml").get_settings()
    assert settings.simulation.T == 50000
    assert settings.search.safety_factor == 1e-6
    assert settings.experiment.r == 1.0


def test_save_and_reload(tmp_path):
    path = tmp_path / "nested" / "config.yaml"
    settings = PoisonCertSettings()
    settings.simulation.seeds = 3
    settings.experiment.epsilons = [0.1, 0.2]
    assert SettingsManager(path).save_settings(settings)

    reloaded = SettingsManager(path).get_settings()
    assert reloaded.simulation.seeds == 3
    assert reloaded.experiment.epsilons == [0.1, 0.2]
    assert reloaded.to_dict() == settings.to_dict()


def test_partial_file_keeps_defaults(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump({"meta": {"kappa": 2.5}}))
    settings = SettingsManager(path).get_settings()
    assert settings.meta.kappa == 2.5
    assert settings.meta.T == PoisonCertSettings().meta.T


def test_use_file_drops_cache(tmp_path):
    first, second = tmp_path / "a.yaml", tmp_path / "b.yaml"
    second.write_text(yaml.safe_dump({"search": {"restarts": 5}}))
    manager = SettingsManager(first)
    assert manager.get_settings().search.restarts == PoisonCertSettings().search.restarts
    manager.use_file(second)
    assert manager.get_settings().search.restarts == 5


@pytest.mark.parametrize("payload", [
    {"plotting": {}},
    {"solver": {"tolerance": 1e-3}},
    {"solver": {"step_fraction": 1.5}},
    {"simulation": {"T": 10, "burn_in": 10}},
    {"meta": {"kappa": 0.0}},
])
def test_invalid_settings(tmp_path, payload):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(payload))
    with pytest.raises(ConfigurationError):
        SettingsManager(path).get_settings()


def test_malformed_yaml(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("solver: [unclosed")
    with pytest.raises(ConfigurationError):
        SettingsManager(path).get_settings()


def test_environment_override(tmp_path, monkeypatch):
    target = tmp_path / "env.yaml"
    monkeypatch.setenv(CONFIG_ENV_VAR, str(target))
    assert SettingsManager().config_file == target
