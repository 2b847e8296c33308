"""Run configuration: one JSON config file, overridden by LKG_* env vars."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from lkg.index import EmbedderConfig
from lkg.providers import ProviderConfig

# config-file key -> environment override
ENV_KEYS = {
    "llm_endpoint": "LKG_LLM_ENDPOINT",
    "llm_api_key": "LKG_LLM_API_KEY",
    "llm_model": "LKG_LLM_MODEL",
    "embed_endpoint": "LKG_EMBED_ENDPOINT",
    "embed_api_key": "LKG_EMBED_API_KEY",
    "embed_mode": "LKG_EMBED_MODE",
    "service_addr": "LKG_SERVICE_ADDR",
    "snapshot_path": "LKG_SNAPSHOT_PATH",
    "index_path": "LKG_INDEX_PATH",
    "cors_origins": "LKG_CORS_ORIGINS",
}


@dataclass
class RunConfig:
    llm_endpoint: str | None = None
    llm_api_key: str | None = None
    llm_model: str | None = None
    embed_endpoint: str | None = None
    embed_api_key: str | None = None
    embed_mode: str = "mock"
    service_addr: str = "127.0.0.1:8321"
    snapshot_path: str | None = None
    index_path: str | None = None
    cors_origins: str = ""
    seed: int = 0
    max_retries: int = 2
    timeout: float = 30.0

    def cors_origin_list(self) -> list[str]:
        return [origin.strip() for origin in self.cors_origins.split(",") if origin.strip()]


def load_config(path: str | Path | None = None, env: dict | None = None) -> RunConfig:
    """Read the config file (if any), then apply environment overrides."""
    values: dict = {}
    if path is not None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    env = dict(os.environ if env is None else env)
    for key, env_key in ENV_KEYS.items():
        if env_key in env:
            values[key] = env[env_key]
    return RunConfig(**values)


def provider_from_config(cfg: RunConfig, mode: str) -> ProviderConfig:
    return ProviderConfig(
        mode=mode,
        endpoint=cfg.llm_endpoint,
        api_key=cfg.llm_api_key,
        model_name=cfg.llm_model,
        max_retries=cfg.max_retries,
        timeout=cfg.timeout,
    )


def embedder_from_config(cfg: RunConfig) -> EmbedderConfig:
    return EmbedderConfig(
        mode=cfg.embed_mode,
        endpoint=cfg.embed_endpoint,
        api_key=cfg.embed_api_key,
    )
