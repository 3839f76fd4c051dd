"""Hybrid beamforming for full-duplex mmWave devices under LNA and ADC
self-interference limits."""

from .channel import ChannelSet, UlaGeometry
from .constraints import SaturationLimits
from .estimator import FullDuplexBeamformer
from .exceptions import FdhbfError
from .link import AdcModel, LinkDesign, design_link
from .simulation import SweepSpec, SystemConfig, run_sweep, run_trial
from .solver import SolverSettings, solve_constrained_precoder

__all__ = [
    "AdcModel",
    "ChannelSet",
    "FdhbfError",
    "FullDuplexBeamformer",
    "LinkDesign",
    "SaturationLimits",
    "SolverSettings",
    "SweepSpec",
    "SystemConfig",
    "UlaGeometry",
    "design_link",
    "run_sweep",
    "run_trial",
    "solve_constrained_precoder",
]

__version__ = "0.1.0"
