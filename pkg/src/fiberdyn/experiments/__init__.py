from .config import ExperimentConfig, parse_config, serialize_config
from .runner import run_experiment

__all__ = ["ExperimentConfig", "parse_config", "serialize_config",
           "run_experiment"]
