"""Pricing game between a multi-antenna power beacon and a base station.

The beacon sells wireless energy, the base station buys it so that
harvest-then-transmit sensors can deliver data. Submodules cover Hermitian
linear algebra, the channel model, single-sensor equilibria, multi-sensor
beamforming bounds and the seeded experiment sweeps.
"""
from .channel import ChannelState, Scenario, build_channels, place_sensors
from .errors import ConvergenceError, NumericError, ValidationError
from .game import (
    EffectiveGameParams,
    Equilibrium,
    equilibrium_closed_form,
    equilibrium_m1_exact,
    single_node_solve,
)
from .multinode import WeightedInstance, global_search, nu_bounds, solve_bounds, solve_sdp_relaxation
from .rng import RandomStream

__version__ = "0.1.0"

__all__ = [
    "ChannelState",
    "ConvergenceError",
    "EffectiveGameParams",
    "Equilibrium",
    "NumericError",
    "RandomStream",
    "Scenario",
    "ValidationError",
    "WeightedInstance",
    "build_channels",
    "equilibrium_closed_form",
    "equilibrium_m1_exact",
    "global_search",
    "nu_bounds",
    "place_sensors",
    "single_node_solve",
    "solve_bounds",
    "solve_sdp_relaxation",
]
