"""
Configuration for freetorus.

Settings come from a YAML file (the -c/--config option, else
~/.config/freetorus/freetorus.yaml when present, else built-in defaults) and
are overridden per run by command line flags.
"""

from __future__ import annotations

import logging
from enum import Enum
from pathlib import Path
from typing import Any, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from freetorus.core.errors import InputError

logger = logging.getLogger(__name__)

Subcommand = Literal["check", "normal-form", "construct", "verify-free", "orbit", "demo"]


class LogLevel(str, Enum):
    """Logging levels accepted in the configuration file."""
    DEBUG = "debug"
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"


class OutputFormat(str, Enum):
    """Report formats."""
    JSON = "json"
    TEXT = "text"
    CSV = "csv"


class ScanSettings(BaseModel):
    """Numeric fixed point scan parameters."""

    model_config = ConfigDict(extra="forbid")

    box: int = Field(default=2, ge=1, le=6)
    grid: int = Field(default=64, ge=1, le=256)
    tolerance: float = Field(default=1e-3, ge=0.0)


class FreetorusSettings(BaseModel):
    """Contents of freetorus.yaml."""

    model_config = ConfigDict(extra="forbid", use_enum_values=True)

    log_level: LogLevel = Field(default=LogLevel.WARNING)

    # Spectral unitarity: exact closure up to closure_cap elements, else a box check
    box_radius: int = Field(default=4, ge=1)
    closure_cap: int = Field(default=1000, ge=4)

    # Radius of the box of H on which freeness evidence is collected
    h_box: int = Field(default=3, ge=1)

    # Numeric α values; logarithms of primes when unset
    alpha: Optional[list[float]] = Field(default=None)

    scan: ScanSettings = Field(default_factory=ScanSettings)


def user_config_path() -> Path:
    return Path.home() / ".config" / "freetorus" / "freetorus.yaml"


def load_settings(path: Optional[Union[str, Path]] = None) -> FreetorusSettings:
    """Load settings from path, the user configuration file, or defaults."""
    if path is None:
        candidate = user_config_path()
        if not candidate.is_file():
            return FreetorusSettings()
        path = candidate
    path = Path(path)
    if not path.is_file():
        raise InputError(f"configuration file not found: {path}")

    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise InputError(f"cannot parse configuration {path}: {e}") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise InputError(f"configuration {path} must be a mapping")

    try:
        settings = FreetorusSettings.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        location = ".".join(str(x) for x in err["loc"])
        raise InputError(f"invalid configuration {path}: {location}: {err['msg']}") from e
    logger.debug(f"Loaded settings from {path}")
    return settings


class CliConfig(BaseModel):
    """Effective configuration of one command line run."""

    model_config = ConfigDict(use_enum_values=True)

    subcommand: Subcommand
    input_path: Optional[str] = None
    box_radius: int = Field(default=4, ge=1)
    closure_cap: int = Field(default=1000, ge=4)
    h_box: int = Field(default=3, ge=1)
    alpha: Optional[list[float]] = None
    seed: Optional[int] = None
    output_format: OutputFormat = OutputFormat.JSON
    word: Optional[list[int]] = None
    start: Optional[tuple[float, float, float]] = None
    scan: Optional[ScanSettings] = None

    @classmethod
    def from_settings(
        cls, settings: FreetorusSettings, subcommand: str, **overrides: Any
    ) -> "CliConfig":
        """Settings file values, then every override that is not None."""
        values: dict[str, Any] = {
            "subcommand": subcommand,
            "box_radius": settings.box_radius,
            "closure_cap": settings.closure_cap,
            "h_box": settings.h_box,
            "alpha": settings.alpha,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls.model_validate(values)
        except ValidationError as e:
            err = e.errors()[0]
            location = ".".join(str(x) for x in err["loc"])
            raise InputError(f"invalid option {location}: {err['msg']}") from e

    def effective(self) -> dict[str, Any]:
        return self.model_dump(mode="json")
