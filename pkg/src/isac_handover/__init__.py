"""Handover activation criteria for cellular-connected drones with ISAC ranging."""

from .scenario import DronePosition, Scenario, ScenarioError, distances, load_scenario, validate

__version__ = "0.1.0"

__all__ = ["DronePosition", "Scenario", "ScenarioError", "distances", "load_scenario", "validate", "__version__"]
