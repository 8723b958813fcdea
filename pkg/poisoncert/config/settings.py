"""
poisoncert/config/settings.py
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from poisoncert.utils.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "POISONCERT_CONFIG"


@dataclass
class SolverSettings:
    """Interior-point solver tolerances."""
    feasibility_tol: float = 1e-7
    gap_tol: float = 1e-6
    max_iterations: int = 200
    step_fraction: float = 0.99
    regularization: float = 1e-12


@dataclass
class SearchSettings:
    """Budget for the certificate verification search."""
    restarts: int = 64
    grid_points_per_axis: int = 50
    grid_max_dim: int = 3
    max_ascent_iterations: int = 200
    gradient_tol: float = 1e-7
    safety_factor: float = 1e-6
    safety_offset: float = 1e-9
    batch_size: int = 4096
    seed: int = 0


@dataclass
class SimulationSettings:
    """Poisoned-dynamics simulation defaults."""
    T: int = 50000
    burn_in: int = 10000
    seeds: int = 8
    mc_tolerance_sigmas: float = 2.0
    dump_thetas: bool = False


@dataclass
class MetaSettings:
    """Defaults for learning the mean-estimation defense."""
    kappa: float = 1.0
    T: int = 10
    K: int = 10
    trace_cap: float = 1e3
    test_tasks: int = 50


@dataclass
class ExperimentSettings:
    """Experiment lattice defaults."""
    r: float = 1.0
    epsilons: List[float] = field(default_factory=lambda: [0.01, 0.02, 0.03, 0.04, 0.05])
    etas: List[float] = field(default_factory=lambda: [5e-5, 1e-4, 5e-4, 1e-3, 5e-3])
    sigmas: List[float] = field(default_factory=lambda: [3e-3, 6e-3, 1e-2, 3e-2, 6e-2])
    class_point_cap: int = 200
    threads: int = 0


@dataclass
class PoisonCertSettings:
    """Main poisoncert configuration."""
    solver: SolverSettings = field(default_factory=SolverSettings)
    search: SearchSettings = field(default_factory=SearchSettings)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    meta: MetaSettings = field(default_factory=MetaSettings)
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)

    def __post_init__(self):
        if not 0.0 < self.solver.step_fraction < 1.0:
            raise ConfigurationError("solver.step_fraction must lie in (0, 1)")
        if self.search.restarts < 1:
            raise ConfigurationError("search.restarts must be at least 1")
        if self.simulation.T <= self.simulation.burn_in:
            raise ConfigurationError("simulation.T must exceed simulation.burn_in")
        if self.meta.kappa <= 0:
            raise ConfigurationError("meta.kappa must be positive")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "PoisonCertSettings":
        data = data or {}
        groups = {f.name: f.type for f in fields(cls)}
        unknown = set(data) - set(groups)
        if unknown:
            raise ConfigurationError(f"Unknown settings groups: {sorted(unknown)}")

        kwargs = {}
        for f in fields(cls):
            group_cls = f.default_factory  # type: ignore[misc]
            values = data.get(f.name) or {}
            try:
                kwargs[f.name] = group_cls(**values)
            except TypeError as e:
                raise ConfigurationError(f"Invalid '{f.name}' settings: {e}") from e
        return cls(**kwargs)


class SettingsManager:
    """Manages poisoncert configuration and settings."""

    def __init__(self, config_file: Optional[Path] = None):
        self._settings: Optional[PoisonCertSettings] = None
        self._config_file = config_file or self._get_config_file_path()

    @property
    def config_file(self) -> Path:
        return self._config_file

    def use_file(self, path: Path) -> None:
        """Point the manager at another YAML file and drop cached settings."""
        self._config_file = Path(path)
        self._settings = None

    def get_settings(self) -> PoisonCertSettings:
        """Get current settings, loading from file if needed."""
        if self._settings is None:
            self._settings = self._load_settings()
        return self._settings

    def save_settings(self, settings: PoisonCertSettings) -> bool:
        """Save settings to file."""
        try:
            self._config_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self._config_file, "w", encoding="utf-8") as f:
                yaml.safe_dump(settings.to_dict(), f, default_flow_style=False, sort_keys=False)
            self._settings = settings
            return True
        except OSError as e:
            logger.warning("Failed to save settings to %s: %s", self._config_file, e)
            return False

    def _load_settings(self) -> PoisonCertSettings:
        """Load settings from file or fall back to defaults."""
        if not self._config_file.exists():
            return PoisonCertSettings()

        try:
            with open(self._config_file, "r", encoding="utf-8") as f:
                settings_dict = yaml.safe_load(f)
        except (OSError, yaml.YAMLError) as e:
            raise ConfigurationError(f"Cannot read {self._config_file}: {e}") from e

        return PoisonCertSettings.from_dict(settings_dict)

    def _get_config_file_path(self) -> Path:
        """Get the path to the configuration file."""
        override = os.environ.get(CONFIG_ENV_VAR)
        if override:
            return Path(override)
        return Path.home() / ".poisoncert" / "config.yaml"


# Global settings manager
_settings_manager = SettingsManager()


def get_settings() -> PoisonCertSettings:
    """Get current poisoncert settings."""
    return _settings_manager.get_settings()


def get_settings_manager() -> SettingsManager:
    """Get the settings manager instance."""
    return _settings_manager
