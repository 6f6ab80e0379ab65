"""Peak-AoI violation probability bounds and simulation for an ISAC V2I link."""

from .bound import BoundResult, optimize_alpha, optimize_theta, pavp_bound
from .params import SystemParams, load_params, sensing_noise, serialize
from .sim import PacketTrace, SimStats, departure_recursion_check, run_sim

__all__ = [
    "BoundResult",
    "PacketTrace",
    "SimStats",
    "SystemParams",
    "departure_recursion_check",
    "load_params",
    "optimize_alpha",
    "optimize_theta",
    "pavp_bound",
    "run_sim",
    "sensing_noise",
    "serialize",
]
