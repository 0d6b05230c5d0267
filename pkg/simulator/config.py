"""
Experiment configuration: JSON file sections validated by the serializers,
with flag overrides on top and the environment as output-dir fallback.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import structlog
from django.conf import settings

from .acquisition import AcquisitionParams
from .dynamics import NoiseModel
from .qcore import SpinSystem
from .serializers import ConfigSerializer

log = structlog.get_logger(__name__)

SECTIONS = ("system", "noise", "acquisition")


class ConfigError(ValueError):
    """Raised when a configuration fails validation; carries dotted field keys."""

    def __init__(self, errors: dict):
        self.errors = errors
        details = "; ".join(f"{key}: {message}" for key, message in errors.items())
        super().__init__(f"invalid configuration: {details}")


@dataclass(frozen=True)
class Config:
    system: SpinSystem = field(default_factory=SpinSystem)
    noise: NoiseModel = field(default_factory=NoiseModel)
    acquisition: AcquisitionParams = field(default_factory=AcquisitionParams)
    output_dir: Path = None


def flatten_errors(errors, prefix: str = "") -> dict:
    """Turn nested serializer errors into {"system.t2": "message"}."""
    flat = {}
    if isinstance(errors, dict):
        for key, value in errors.items():
            if key == "non_field_errors":
                dotted = prefix or key
            else:
                dotted = f"{prefix}.{key}" if prefix else key
            flat.update(flatten_errors(value, dotted))
    elif isinstance(errors, list) and errors and all(isinstance(item, str) for item in errors):
        flat[prefix] = " ".join(str(item) for item in errors)
    elif isinstance(errors, list):
        for item in errors:
            flat.update(flatten_errors(item, prefix))
    else:
        flat[prefix] = str(errors)
    return flat


def read_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError({"config": f"not valid JSON: {e}"}) from e
    if not isinstance(data, dict):
        raise ConfigError({"config": "top level must be a JSON object"})
    return data


def build_config(data: dict = None, *, epsilon: float = None, no_noise: bool = False,
                 output_dir=None) -> Config:
    """Validate raw config data; flag overrides win over file values."""
    data = dict(data or {})
    for section in SECTIONS:
        value = data.get(section)
        data[section] = dict(value) if isinstance(value, dict) else ({} if value is None else value)
    if epsilon is not None and isinstance(data["system"], dict):
        data["system"]["epsilon"] = epsilon
    if no_noise and isinstance(data["noise"], dict):
        data["noise"]["enabled"] = False

    serializer = ConfigSerializer(data=data)
    if not serializer.is_valid():
        errors = flatten_errors(serializer.errors)
        log.error("config_validation_failed", errors=errors)
        raise ConfigError(errors)
    valid = serializer.validated_data

    system = SpinSystem(**valid["system"])
    noise_fields = dict(valid["noise"])
    noise_fields["t1"] = noise_fields["t1"] if noise_fields["t1"] is not None else system.t1
    noise_fields["t2"] = noise_fields["t2"] if noise_fields["t2"] is not None else system.t2
    resolved_dir = output_dir or valid.get("output_dir") or settings.SINGLETSIM_OUT
    config = Config(
        system=system,
        noise=NoiseModel(**noise_fields),
        acquisition=AcquisitionParams(**valid["acquisition"]),
        output_dir=Path(resolved_dir),
    )
    log.debug("config_built", epsilon=system.epsilon, noise=config.noise.enabled,
              output_dir=str(config.output_dir))
    return config


def load_config(path=None, **overrides) -> Config:
    data = read_config_file(path) if path else {}
    return build_config(data, **overrides)
