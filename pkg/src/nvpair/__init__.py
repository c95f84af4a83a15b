"""Simulation and fitting toolkit for an NV center dipole-coupled to a single nitrogen spin."""

from .config import Config, parse_config
from .hamiltonian import DipoleGeometry, SystemParams, build_total
from .results import SweepResult

__all__ = ["Config", "DipoleGeometry", "SweepResult", "SystemParams", "build_total", "parse_config"]
