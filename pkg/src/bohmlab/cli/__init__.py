"""Configuration-driven command line interface."""
from .config import (ConfigParseError, ConfigValidationError, RunConfig, loads_config, parse_config,
                     validate_config)

__all__ = ["ConfigParseError", "ConfigValidationError", "RunConfig", "loads_config", "parse_config",
           "validate_config"]
