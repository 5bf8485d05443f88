"""
Configuration package for ee-models: typed specs and their loaders.
"""

from .loader import load_logging_config, parse_model_spec, spec_from_dict
from .models import (
    ComponentSpec,
    DistanceBasisSpec,
    EndemicSpec,
    EpidemicSpec,
    HHH4Spec,
    KernelSpec,
    LoggingConfig,
    ModelSpec,
    PairIndicatorSpec,
    RunManifest,
    SeasonSpec,
    SimConfig,
    TrendSpec,
    TwinSIRSpec,
    TwinstimSpec,
    WeightsSpec,
)

__all__ = [
    "ComponentSpec",
    "DistanceBasisSpec",
    "EndemicSpec",
    "EpidemicSpec",
    "HHH4Spec",
    "KernelSpec",
    "LoggingConfig",
    "ModelSpec",
    "PairIndicatorSpec",
    "RunManifest",
    "SeasonSpec",
    "SimConfig",
    "TrendSpec",
    "TwinSIRSpec",
    "TwinstimSpec",
    "WeightsSpec",
    "load_logging_config",
    "parse_model_spec",
    "spec_from_dict",
]
