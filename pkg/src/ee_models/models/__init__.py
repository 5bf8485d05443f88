"""
Likelihood engines: hhh4 (count time series), twinstim (point process),
twinSIR (SIR event history), and their shared building blocks.
"""

from .base import LikelihoodModel, ModelFit, aic_table
from .hhh4 import (
    HHH4Fit,
    HHH4Model,
    add_season_terms,
    confint_wald,
    fit_hhh4,
    fitted_components,
    loglik_hhh4,
    mean_hhh4,
    neighbourhood_weights,
    season_effect,
    summarize_hhh4,
)
from .kernels import make_siaf, make_tiaf
from .twinsir import (
    TwinSIRFit,
    TwinSIRModel,
    cif_twinsir,
    confint_twinsir,
    cumulative_intensity,
    epidemic_proportion,
    fit_twinsir,
    intensity_path,
    loglik_twinsir,
    profile_ci,
    step_kernel_terms,
)
from .twinstim import (
    TwinstimFit,
    TwinstimModel,
    cif_twinstim,
    confint_twinstim,
    cumulative_ground_intensity,
    fit_twinstim,
    glm_equivalence,
    intensity_aggregate,
    kernel_curve,
    loglik_twinstim,
    r0_events,
    step_select,
)

__all__ = [
    "HHH4Fit",
    "HHH4Model",
    "LikelihoodModel",
    "ModelFit",
    "TwinSIRFit",
    "TwinSIRModel",
    "TwinstimFit",
    "TwinstimModel",
    "add_season_terms",
    "aic_table",
    "cif_twinsir",
    "cif_twinstim",
    "confint_twinsir",
    "confint_twinstim",
    "confint_wald",
    "cumulative_ground_intensity",
    "cumulative_intensity",
    "epidemic_proportion",
    "fit_hhh4",
    "fit_twinsir",
    "fit_twinstim",
    "fitted_components",
    "glm_equivalence",
    "intensity_aggregate",
    "intensity_path",
    "kernel_curve",
    "loglik_hhh4",
    "loglik_twinsir",
    "loglik_twinstim",
    "make_siaf",
    "make_tiaf",
    "mean_hhh4",
    "neighbourhood_weights",
    "profile_ci",
    "r0_events",
    "season_effect",
    "step_kernel_terms",
    "step_select",
    "summarize_hhh4",
]
