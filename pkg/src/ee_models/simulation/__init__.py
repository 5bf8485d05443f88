"""
Seeded forward simulation for hhh4, twinstim and twinSIR fits.
"""

from .hhh4 import HHH4Simulation, simulate_hhh4
from .sampling import sample_kernel_location, uniform_in_polygon
from .twinsir import final_sizes, observed_infectious_period, simulate_twinsir
from .twinstim import SOURCE_ENDEMIC, SOURCE_PREHISTORY, simulate_twinstim

__all__ = [
    "HHH4Simulation",
    "SOURCE_ENDEMIC",
    "SOURCE_PREHISTORY",
    "final_sizes",
    "observed_infectious_period",
    "sample_kernel_location",
    "simulate_hhh4",
    "simulate_twinsir",
    "simulate_twinstim",
    "uniform_in_polygon",
]
