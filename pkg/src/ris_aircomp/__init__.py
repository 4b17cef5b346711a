"""Joint receive beamforming and RIS phase design for over-the-air computation."""
from .aircomp import (
    InfeasibleError,
    composite_channel,
    composite_channels,
    denoising_factor,
    lift_m_subproblem,
    lift_v_subproblem,
    mse,
    transmit_scalars,
)
from .altermin import AlterMinSettings, altermin
from .channel import ChannelRealization, SystemConfig, generate_scenario, load_config
from .saddle import SurrogateData, solve_saddle

__version__ = "0.1.0"
