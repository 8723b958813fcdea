"""
poisoncert/config/__init__.py
"""

from poisoncert.config.settings import (
    ExperimentSettings,
    MetaSettings,
    PoisonCertSettings,
    SearchSettings,
    SettingsManager,
    SimulationSettings,
    SolverSettings,
    get_settings,
    get_settings_manager,
)

__all__ = [
    "ExperimentSettings",
    "MetaSettings",
    "PoisonCertSettings",
    "SearchSettings",
    "SettingsManager",
    "SimulationSettings",
    "SolverSettings",
    "get_settings",
    "get_settings_manager",
]
