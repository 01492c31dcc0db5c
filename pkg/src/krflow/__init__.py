"""Numerical lab for Kähler-Ricci flow of U(n)-invariant metrics on radial domains."""

from .background import Background
from .errors import ConfigError, KrflowError, NumericalFailure
from .flow import FlowConfig, run
from .geometry import MetricState
from .grid import RadialGrid

__all__ = ["Background", "ConfigError", "FlowConfig", "KrflowError", "MetricState",
           "NumericalFailure", "RadialGrid", "run"]
__version__ = "0.1.0"
