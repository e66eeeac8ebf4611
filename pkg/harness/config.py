import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml
from pydantic import ValidationError

from core.exceptions import ConfigError
from schemas.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

# CLI flag -> dotted config field
CLI_FIELDS = {
    "p_grad": "drop.p_grad",
    "p_param": "drop.p_param",
    "workers": "workers",
    "iters": "iterations",
    "seed": "seed",
    "policy": "aggregation.policy",
    "fallback": "aggregation.fallback",
    "out": "output_dir",
}


def apply_overrides(raw: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Set dotted keys (``drop.p_grad``) in a nested dict; None values are ignored"""
    merged = dict(raw)
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = merged
        parts = dotted.split(".")
        for part in parts[:-1]:
            child = node.get(part)
            child = dict(child) if isinstance(child, Mapping) else {}
            node[part] = child
            node = child
        node[parts[-1]] = value
    return merged


def validate_config(raw: Mapping[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(dict(raw))
    except ValidationError as e:
        fields = [".".join(str(part) for part in err["loc"]) or "<root>" for err in e.errors()]
        details = "; ".join(
            f"{field}: {err['msg']}" for field, err in zip(fields, e.errors())
        )
        raise ConfigError(f"Invalid experiment config: {details}", fields=fields) from e


def load_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    raw: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}", fields=["config"])
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Could not parse {path}: {e}", fields=["config"]) from e
        if not isinstance(raw, dict):
            raise ConfigError(f"{path} must contain a mapping at the top level", fields=["config"])
        logger.info(f"Loaded experiment config from {path}")
    return validate_config(apply_overrides(raw, overrides or {}))


def cli_overrides(**flags) -> Dict[str, Any]:
    return {CLI_FIELDS[name]: value for name, value in flags.items() if value is not None}


def dump_config(config: ExperimentConfig, path: Union[str, Path]):
    Path(path).write_text(
        yaml.safe_dump(config.model_dump(mode="json"), sort_keys=True),
        encoding="utf-8",
    )
