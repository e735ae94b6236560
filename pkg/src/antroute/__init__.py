"""Discrete-event simulator for ant-colony routing in ad hoc networks."""

from ._kernels import BACKEND
from .scenario import Scenario, SweepSpec, load_scenario, load_sweep

__version__ = "0.1.0"

__all__ = ["BACKEND", "Scenario", "SweepSpec", "load_scenario", "load_sweep", "__version__"]
