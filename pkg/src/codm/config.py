"""Service configuration: file loading, validation, provider wiring."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .errors import ConfigError
from .gateway import MockProvider, OpenAICompatProvider, Provider
from .profiles import InterfaceKind, ProfileRegistry, default_registry
from .prompts import DEFAULT_PERSONA

DEFAULT_API_KEY_ENV = "CODM_PROVIDER_KEY"


@dataclass
class ApiConfig:
    host: str = "127.0.0.1"
    port: int = 8434
    db_path: str = "codm.db"
    monsters_dir: str = "data/monsters"
    settings_dir: str = "data/settings"
    encounter_table: str = "data/tables/whisperwood.yaml"
    persona: str = DEFAULT_PERSONA
    token_budget: int = 3000
    provider_name: str = "mock"
    provider_base_url: str = ""
    provider_api_key_env: str = DEFAULT_API_KEY_ENV
    provider_models: dict = field(default_factory=dict)
    canned_responses: Optional[str] = None
    retry_max_attempts: int = 3
    retry_backoff_ms: int = 500
    llm_max_concurrency: int = 4
    max_pending_per_thread: int = 8
    request_timeout_s: float = 120.0
    static_dir: Optional[str] = None


def load_config(path: Path | str) -> ApiConfig:
    """Read a YAML config file; relative paths resolve against its directory."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    base = path.parent
    config = ApiConfig()

    def resolve(value: str) -> str:
        return str((base / value).resolve()) if not Path(value).is_absolute() else value

    for key in ("host", "persona"):
        if key in raw:
            setattr(config, key, str(raw[key]))
    for key in ("port", "token_budget", "llm_max_concurrency", "max_pending_per_thread"):
        if key in raw:
            setattr(config, key, int(raw[key]))
    if "request_timeout_s" in raw:
        config.request_timeout_s = float(raw["request_timeout_s"])
    for key in ("db_path", "monsters_dir", "settings_dir", "encounter_table", "static_dir"):
        if key in raw and raw[key] is not None:
            setattr(config, key, resolve(str(raw[key])))

    provider = raw.get("provider", {})
    if not isinstance(provider, dict):
        raise ConfigError(f"{path}: 'provider' must be a mapping")
    config.provider_name = str(provider.get("name", config.provider_name))
    config.provider_base_url = str(provider.get("base_url", ""))
    config.provider_api_key_env = str(provider.get("api_key_env", DEFAULT_API_KEY_ENV))
    if provider.get("canned_responses"):
        config.canned_responses = resolve(str(provider["canned_responses"]))
    models = provider.get("models", {})
    if not isinstance(models, dict):
        raise ConfigError(f"{path}: 'provider.models' must be a mapping")
    config.provider_models = {str(k): str(v) for k, v in models.items()}

    retry = raw.get("retry", {})
    if not isinstance(retry, dict):
        raise ConfigError(f"{path}: 'retry' must be a mapping")
    if "max_attempts" in retry:
        config.retry_max_attempts = int(retry["max_attempts"])
    if "backoff_base_ms" in retry:
        config.retry_backoff_ms = int(retry["backoff_base_ms"])

    return config


def build_registry(config: ApiConfig) -> ProfileRegistry:
    """Default profiles with operator model ids applied per interface."""
    from dataclasses import replace

    registry = default_registry()
    for kind_name, model_id in config.provider_models.items():
        try:
            kind = InterfaceKind(kind_name)
        except ValueError:
            raise ConfigError(f"unknown interface kind in provider.models: {kind_name!r}") from None
        registry.register(kind, replace(registry.get(kind), model_id=model_id))
    return registry


def build_provider(config: ApiConfig) -> Provider:
    if config.provider_name == "mock":
        if config.canned_responses:
            return MockProvider.from_file(config.canned_responses)
        return MockProvider()
    if config.provider_name == "openai-compatible":
        if not config.provider_base_url:
            raise ConfigError("provider.base_url is required for openai-compatible")
        return OpenAICompatProvider(
            config.provider_base_url,
            os.environ.get(config.provider_api_key_env),
            timeout_s=config.request_timeout_s,
        )
    raise ConfigError(f"unknown provider {config.provider_name!r}")
