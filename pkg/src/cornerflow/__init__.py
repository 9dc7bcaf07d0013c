"""Characteristic-net solver for pseudo-steady gas expansion around a sharp
corner, for general convex equations of state."""

__version__ = "0.1.0"

from . import eos, goursat, monitor, validation, waves  # noqa: F401
from .config import ScenarioConfig, load_config, preset  # noqa: F401
from .pipeline import run_scenario  # noqa: F401
