"""
ee-models: endemic-epidemic modelling of infectious disease surveillance data.

Three engines share one likelihood base: hhh4 for multivariate count time
series, twinstim for space-time point patterns and twinSIR for SIR event
histories in a fixed population.
"""

__version__ = "0.1.0"
