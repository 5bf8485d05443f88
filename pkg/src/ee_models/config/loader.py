"""
Configuration loading utilities for ee-models.

This module handles loading and validation of model specifications:
- JSON spec file loading
- Environment variable fallbacks (EE_MODELS_SPEC, EE_MODELS_LOG)
- Dispatch to the matching spec model
- Error handling for invalid specs

Every failure surfaces as a ValueError naming the file and the offending key,
so the CLI can map it to a validation exit status.
"""
import json
import os
from typing import Any, Dict, Optional

from pydantic import ValidationError

from .models import HHH4Spec, LoggingConfig, ModelSpec, TwinSIRSpec, TwinstimSpec

SPEC_CLASSES = {"hhh4": HHH4Spec, "twinstim": TwinstimSpec, "twinsir": TwinSIRSpec}


def _infer_model(data: Dict[str, Any]) -> str:
    """Pick the engine for a spec without an explicit ``model`` key."""
    if "model" in data:
        model = str(data["model"]).lower()
        if model not in SPEC_CLASSES:
            raise ValueError(f"unknown model '{data['model']}', expected one of "
                             f"{sorted(SPEC_CLASSES)}")
        return model
    if "family" in data or "ar" in data or "ne" in data:
        return "hhh4"
    if "siaf" in data or "tiaf" in data or "nCircle2Poly" in data:
        return "twinstim"
    if isinstance(data.get("epidemic"), list) or isinstance(data.get("endemic"), list):
        return "twinsir"
    # an hhh4 spec without "family" should fail on the missing key, not on dispatch
    if "endemic" in data:
        return "hhh4"
    raise ValueError("cannot tell the model class from the spec; add a 'model' key")


def _describe(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        loc = ".".join(str(x) for x in item["loc"]) or "<root>"
        if item["type"] == "extra_forbidden":
            parts.append(f"unknown key '{loc}'")
        elif item["type"] == "missing":
            parts.append(f"missing mandatory key '{loc}'")
        else:
            parts.append(f"{loc}: {item['msg']}")
    return "; ".join(parts)


def spec_from_dict(data: Dict[str, Any]) -> ModelSpec:
    """Validate a decoded JSON object into the matching spec model.

    Args:
        data: Decoded JSON object

    Returns:
        HHH4Spec, TwinstimSpec or TwinSIRSpec with defaults filled

    Raises:
        ValueError: If the model class cannot be determined or validation fails
    """
    if not isinstance(data, dict):
        raise ValueError("spec must be a JSON object")
    model = _infer_model(data)
    try:
        return SPEC_CLASSES[model].model_validate(data)
    except ValidationError as e:
        raise ValueError(f"Invalid {model} spec: {_describe(e)}") from e


def parse_model_spec(spec_path: Optional[str] = None) -> ModelSpec:
    """Load and validate a model spec from a JSON file.

    Performs the following steps:
    1. Falls back to EE_MODELS_SPEC when no path is given
    2. Loads the JSON file
    3. Determines the model class from the ``model`` key or the keys present
    4. Converts to the typed spec using Pydantic (unknown keys rejected)

    Args:
        spec_path: Path to the JSON spec file

    Returns:
        Typed spec with defaults filled, e.g.
        {
            "model": "hhh4",
            "family": "NegBin1",
            "endemic": {"intercept": true, "formulaTerms": ["t"], ...},
            ...
        }

    Raises:
        ValueError: If:
                 - No path is given and EE_MODELS_SPEC is unset
                 - The file does not exist or holds invalid JSON
                 - A key is unknown, missing or has the wrong type
    """
    if not spec_path:
        spec_path = os.getenv("EE_MODELS_SPEC")

    if not spec_path:
        raise ValueError("a spec path or the EE_MODELS_SPEC environment variable must be set")

    try:
        with open(spec_path) as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ValueError(f"spec file not found: {spec_path}")
    except json.JSONDecodeError as e:
        raise ValueError(f"Invalid JSON in spec file {spec_path}: {e}")

    try:
        return spec_from_dict(data)
    except ValueError as e:
        raise ValueError(f"{spec_path}: {e}") from e


def load_logging_config(config_path: Optional[str] = None) -> LoggingConfig:
    """Build the logging configuration.

    A JSON file (the argument, else EE_MODELS_LOG_CONFIG) provides the base;
    EE_MODELS_LOG overrides the level and EE_MODELS_LOG_FILE the log file.

    Args:
        config_path: Optional path to a JSON logging config

    Returns:
        LoggingConfig

    Raises:
        ValueError: If the file is invalid or the level is unknown
    """
    data: Dict[str, Any] = {}
    config_path = config_path or os.getenv("EE_MODELS_LOG_CONFIG")
    if config_path:
        try:
            with open(config_path) as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ValueError(f"Failed to load logging config: {e}")

    level = os.getenv("EE_MODELS_LOG")
    if level:
        data["level"] = level
    log_file = os.getenv("EE_MODELS_LOG_FILE")
    if log_file:
        data["file"] = log_file

    config = LoggingConfig(**data)
    if config.level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ValueError(f"Invalid log level: {config.level}")
    return config
