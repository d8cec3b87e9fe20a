"""Energy-efficiency maximization for a STAR-RIS aided full-duplex link.

Powers are optimized with Dinkelbach's method plus SCA, the surface with a
penalty-based SDR plus SCA, and the two blocks alternate until the EE
stops improving.  See :mod:`starfd.schemes` for the drivers and
:mod:`starfd.experiments` for the Monte-Carlo sweeps.
"""

from .channels import ChannelParams, ChannelSet, Geometry, composite_channels, draw_channel_set
from .params import SimulationParams
from .schemes import SCHEMES, SchemeResult, run_scheme
from .system import PowerAllocation, StarRisProfile, SystemSetup

__version__ = "0.1.0"

__all__ = [
    "ChannelParams",
    "ChannelSet",
    "Geometry",
    "composite_channels",
    "draw_channel_set",
    "SimulationParams",
    "SCHEMES",
    "SchemeResult",
    "run_scheme",
    "PowerAllocation",
    "StarRisProfile",
    "SystemSetup",
]
