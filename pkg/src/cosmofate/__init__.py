"""Fate of homogeneous, isotropic universes with a cosmological constant."""

from .dynamics import CosmoParams, State
from .eos import EosModel
from .errors import DomainError, NumericError
from .integrator import IntegrationConfig, Trajectory, integrate
from .classifier import ScenarioReport, classify

__all__ = [
    "CosmoParams",
    "State",
    "EosModel",
    "DomainError",
    "NumericError",
    "IntegrationConfig",
    "Trajectory",
    "integrate",
    "ScenarioReport",
    "classify",
]

__version__ = "0.1.0"
