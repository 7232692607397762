"""Finite-volume simulator and analysis toolkit for a two-species, two-signal chemotaxis system."""
from .grid import DomainSpec
from .model import ModelParams, SimState
from .solver import SolverConfig, run, step

__all__ = ["DomainSpec", "ModelParams", "SimState", "SolverConfig", "run", "step"]
