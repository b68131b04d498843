"""Analysis configuration resolved from defaults, an ini file and the environment."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, Field, ValidationError

from .errors import ConfigError


class _ConfigValues(BaseModel):
    """Validation schema for externally provided configuration values."""

    max_chain: Optional[int] = Field(default=None, ge=1)
    max_callers: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)
    access_path_limit: Optional[int] = Field(default=None, ge=1)
    max_terms: Optional[int] = Field(default=None, ge=1)
    query_budget: Optional[int] = Field(default=None, ge=1)
    path_bound: Optional[int] = Field(default=None, ge=1)
    jobs: Optional[int] = Field(default=None, ge=1)
    templates: Optional[str] = None


@dataclass(slots=True)
class AnalysisConfig:
    """Bounds and knobs shared by every analysis phase."""

    max_chain: int = 16
    max_callers: int = 5
    seed: int = 0
    access_path_limit: int = 5
    max_terms: int = 64
    query_budget: int = 10_000
    path_bound: int = 1_000
    jobs: int = 1
    templates: Optional[str] = None

    @classmethod
    def from_env(cls) -> "AnalysisConfig":
        """Load configuration from ``PCS_*`` environment variables."""

        raw = {name: _get_env(_ENV_PREFIX + name.upper()) for name in _CONFIG_FIELDS}
        return cls(**_validated(raw))

    @classmethod
    def from_sources(cls, *, ini_path: Path | None = None) -> "AnalysisConfig":
        """Load configuration from an ini file, then let the environment override it."""

        merged: dict[str, Optional[str]] = {}
        if ini_path and ini_path.exists():
            merged.update(_load_ini_values(ini_path))

        for name in _CONFIG_FIELDS:
            value = _get_env(_ENV_PREFIX + name.upper())
            if value is not None:
                merged[name] = value

        return cls(**_validated(merged))

    def metadata(self) -> dict[str, Any]:
        """Return the settings that influence summary generation."""

        return {
            "max_chain": self.max_chain,
            "max_callers": self.max_callers,
            "seed": self.seed,
            "access_path_limit": self.access_path_limit,
            "max_terms": self.max_terms,
        }


@dataclass(slots=True)
class RunConfig:
    """Everything one CLI invocation needs."""

    subcommand: str
    inputs: tuple[Path, ...]
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: Optional[Path] = None
    format: str = "text"


def resolve_default_config_path() -> Path:
    """Return path to default configuration file location."""

    return Path("~/.config/pcs/config.ini").expanduser()


def resolve_config_path() -> Path:
    """Resolve configuration file path, honoring environment overrides."""

    override = os.getenv("PCS_CONFIG_PATH")
    if override:
        return Path(override).expanduser()
    return resolve_default_config_path()


def resolve_config(*, config_path: Path | None = None) -> AnalysisConfig:
    """Build the analysis configuration from all file and environment sources."""

    return AnalysisConfig.from_sources(ini_path=config_path or resolve_config_path())


def with_overrides(config: AnalysisConfig, **overrides: Any) -> AnalysisConfig:
    """Return a copy with the given fields replaced; ``None`` values are ignored."""

    present = {key: value for key, value in overrides.items() if value is not None}
    if not present:
        return replace(config)
    values = {name: getattr(config, name) for name in _CONFIG_FIELDS}
    values.update(present)
    return replace(config, **_validated(values))


def save_config_to_ini(config: AnalysisConfig, path: Path) -> None:
    """Persist configuration values to an ini file."""

    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # Preserve field case
    parser[CONFIG_SECTION] = {
        name: str(getattr(config, name))
        for name in _CONFIG_FIELDS
        if getattr(config, name) is not None
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as handle:
            parser.write(handle)
    except OSError as exc:
        raise ConfigError(f"Cannot write configuration {path}: {exc}") from exc


def _validated(raw: dict[str, Any]) -> dict[str, Any]:
    try:
        data = _ConfigValues(**raw)
    except ValidationError as exc:
        problems = ", ".join(
            f"{'.'.join(str(part) for part in item['loc'])}: {item['msg']}" for item in exc.errors()
        )
        raise ConfigError(f"Invalid configuration ({problems})") from exc
    return {key: value for key, value in data.model_dump().items() if value is not None}


def _get_env(key: str) -> Optional[str]:
    """Return environment variable value with blank strings normalized to None."""
    value = os.getenv(key)
    if value is None:
        return None
    value = value.strip()
    return value or None


CONFIG_SECTION = "pcs"
_ENV_PREFIX = "PCS_"
_CONFIG_FIELDS = tuple(item.name for item in fields(AnalysisConfig))


def _load_ini_values(path: Path) -> dict[str, Optional[str]]:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    if not parser.read(path, encoding="utf-8"):
        return {}

    values: dict[str, Optional[str]] = {}
    for name in _CONFIG_FIELDS:
        if parser.has_option(CONFIG_SECTION, name):
            raw = parser.get(CONFIG_SECTION, name)
            values[name] = raw.strip() or None
    return values
