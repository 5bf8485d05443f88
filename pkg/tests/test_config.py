"""
Tests for spec and logging configuration loading.
"""

import json
import os
from unittest.mock import patch

import pytest

from ee_models.config.loader import load_logging_config, parse_model_spec, spec_from_dict
from ee_models.config.models import HHH4Spec, KernelSpec, SimConfig, TwinSIRSpec, TwinstimSpec
from ee_models.models.kernels import make_siaf


@pytest.fixture
def write_spec(tmp_path):
    """Fixture writing a dict to a JSON spec file."""
    def _write(data, name="spec.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)
    return _write


def test_minimal_hhh4_spec(write_spec):
    """A family plus an endemic intercept is a complete hhh4 spec."""
    spec = parse_model_spec(write_spec({"family": "NegBin1", "endemic": {"intercept": True}}))

    assert isinstance(spec, HHH4Spec)
    assert spec.family == "NegBin1"
    assert list(spec.components()) == ["end"]


def test_misspelt_key_is_named(write_spec):
    """Unknown keys are rejected with the offending key in the message."""
    with pytest.raises(ValueError, match="famly"):
        parse_model_spec(write_spec({"famly": "NegBin1", "endemic": {}}))


def test_missing_family(write_spec):
    with pytest.raises(ValueError, match="missing mandatory key 'family'"):
        parse_model_spec(write_spec({"model": "hhh4", "endemic": {}}))


def test_ne_defaults_to_first_order_weights():
    spec = spec_from_dict({"family": "Poisson", "ne": {}})
    assert spec.ne.weights.kind == "firstOrder"
    assert spec.ne.weights.normalize is False


def test_power_law_weights_normalize_by_default():
    spec = spec_from_dict({"family": "Poisson", "ne": {"weights": {"kind": "powerLaw"}}})
    assert spec.ne.weights.normalize is True


def test_weights_outside_ne_rejected():
    with pytest.raises(ValueError, match="only valid for the ne component"):
        spec_from_dict({"family": "Poisson", "ar": {"weights": {"kind": "powerLaw"}}})


def test_subset_must_start_after_first_time():
    with pytest.raises(ValueError, match="invalid subset"):
        spec_from_dict({"family": "Poisson", "endemic": {}, "subset": [1, 10]})


def test_step_kernel_spec(write_spec):
    """Four knots on a log scale up to 100 give a four-step spatial kernel."""
    knots = [2.51, 6.31, 15.85, 39.81]
    spec = parse_model_spec(write_spec({
        "model": "twinstim",
        "siaf": {"kind": "step", "knots": knots, "maxRange": 100},
    }))

    assert isinstance(spec, TwinstimSpec)
    assert spec.nCircle2Poly == 16
    kernel = make_siaf(spec.siaf)
    assert kernel.n_params == 4
    assert list(kernel.edges) == [0.0, *knots, 100.0]


def test_step_knots_must_increase():
    with pytest.raises(ValueError, match="strictly increasing"):
        KernelSpec(kind="step", knots=[5.0, 2.0])


def test_temporal_kernel_as_siaf_rejected():
    with pytest.raises(ValueError, match="exponential is a temporal kernel"):
        spec_from_dict({"model": "twinstim", "siaf": {"kind": "exponential"}})


def test_twinsir_spec_inferred_from_term_lists():
    spec = spec_from_dict({"epidemic": ["household", "c1"], "endemic": []})
    assert isinstance(spec, TwinSIRSpec)
    assert spec.intercept is True


def test_unknown_model_class():
    with pytest.raises(ValueError, match="unknown model"):
        spec_from_dict({"model": "sir"})


def test_spec_file_not_found(tmp_path):
    with pytest.raises(ValueError, match="spec file not found"):
        parse_model_spec(str(tmp_path / "nope.json"))


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ValueError, match="Invalid JSON"):
        parse_model_spec(str(path))


def test_spec_from_environment(write_spec):
    """EE_MODELS_SPEC is used when no path is given."""
    path = write_spec({"family": "Poisson", "endemic": {}})
    with patch.dict(os.environ, {"EE_MODELS_SPEC": path}):
        assert isinstance(parse_model_spec(), HHH4Spec)


def test_no_spec_at_all():
    with patch.dict(os.environ, {}, clear=True):
        with pytest.raises(ValueError, match="EE_MODELS_SPEC"):
            parse_model_spec()


def test_sim_config_requires_seed():
    with pytest.raises(ValueError, match="seed"):
        SimConfig.model_validate({"nsim": 2})


def test_sim_config_window_order():
    with pytest.raises(ValueError, match="t0 < T"):
        SimConfig(seed=1, timeWindow=(5.0, 1.0))


def test_logging_level_from_environment(tmp_path):
    """EE_MODELS_LOG overrides the level of the logging config file."""
    path = tmp_path / "logging.json"
    path.write_text(json.dumps({"level": "INFO", "file": "run.log"}))
    with patch.dict(os.environ, {"EE_MODELS_LOG": "DEBUG"}, clear=True):
        config = load_logging_config(str(path))

    assert config.level == "DEBUG"
    assert config.file == "run.log"


def test_invalid_log_level():
    with patch.dict(os.environ, {"EE_MODELS_LOG": "LOUD"}, clear=True):
        with pytest.raises(ValueError, match="Invalid log level"):
            load_logging_config()


def test_logging_config_from_environment_path():
    """EE_MODELS_LOG_CONFIG points at the example logging config."""
    path = os.path.join(os.path.dirname(os.path.dirname(__file__)), "specs",
                        "logging.example.json")
    with patch.dict(os.environ, {"EE_MODELS_LOG_CONFIG": path}, clear=True):
        config = load_logging_config()

    assert config.level == "DEBUG"
    assert config.file == "ee_models.log"
