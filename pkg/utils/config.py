"""
Run configuration.

Resolution order: defaults, YAML file, environment, explicit overrides.
"""
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from losses.weights import LossWeights
from structure_io.fetch import DEFAULT_FETCH_BASE_URL
from utils.errors import UsageError

logger = logging.getLogger(__name__)

DEFAULT_SEED = 123

# env var -> config field
ENV_OVERRIDES = {
    "BACKMAP_SEED": "seed",
    "BACKMAP_FRAME_CAP": "frame_cap",
    "BACKMAP_THREADS": "threads",
    "BACKMAP_FETCH_BASE_URL": "fetch_base_url",
    "BACKMAP_FETCH_RETRIES": "fetch_retries",
    "BACKMAP_BOND_TOLERANCE": "bond_tolerance",
    "BACKMAP_TRACING": "tracing",
    "LOG_LEVEL": "log_level",
}


class RunConfig(BaseModel):
    seed: int = DEFAULT_SEED
    frame_cap: int = Field(500, gt=0)
    threads: int = Field(1, gt=0)
    loss_weights: LossWeights = Field(default_factory=LossWeights)
    bond_tolerance: float = Field(0.4, gt=0.0)
    clash_threshold: float = Field(1.2, gt=0.0)
    contact_cutoff: float = Field(5.0, gt=0.0)
    fetch_base_url: str = DEFAULT_FETCH_BASE_URL
    fetch_retries: int = Field(3, ge=0)
    tracing: bool = False
    log_level: str = "INFO"


def load_config(config_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Build the run configuration.

    Args:
        config_path: Optional YAML file; BACKMAP_CONFIG is used when omitted
        overrides: Explicit values (CLI flags); None entries are ignored

    Returns:
        Validated RunConfig
    """
    load_dotenv()

    values: Dict[str, Any] = {}
    path = config_path or os.getenv("BACKMAP_CONFIG")
    if path:
        try:
            loaded = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as e:
            raise UsageError(f"cannot read config file {path}: {e}") from e
        if not isinstance(loaded, dict):
            raise UsageError(f"config file {path} must hold a mapping")
        values.update(loaded)

    for env_name, field_name in ENV_OVERRIDES.items():
        raw = os.getenv(env_name)
        if raw is not None and raw != "":
            values[field_name] = raw

    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    try:
        config = RunConfig.model_validate(values)
    except ValidationError as e:
        raise UsageError(f"invalid configuration: {e}") from e

    logger.debug("run config: %s", config.model_dump())
    return config
