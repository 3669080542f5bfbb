"""Pareto-boundary rate regions of the IRS-aided MISO interference channel."""

__version__ = "0.1.0"

from .channel import (ChannelSet, Geometry, PathLossModel, SystemConfig, cascade,
                      generate_channels, load_channels, preset, save_channels)
from .driver import (BcdOptions, BcdReport, ParetoPoint, bcd_solve, initial_Rmax, pareto_sweep,
                     scheme_no_irs, scheme_random_reflective, zeta_grid)
from .rate import BeamformingState, RateProfile, check_profile, rate, rates, sinr
from .singleuser import coordinate_ascent, mrt

__all__ = [
    "ChannelSet", "Geometry", "PathLossModel", "SystemConfig", "cascade", "generate_channels",
    "load_channels", "preset", "save_channels", "BcdOptions", "BcdReport", "ParetoPoint",
    "bcd_solve", "initial_Rmax", "pareto_sweep", "scheme_no_irs", "scheme_random_reflective",
    "zeta_grid", "BeamformingState", "RateProfile", "check_profile", "rate", "rates", "sinr",
    "coordinate_ascent", "mrt",
]
