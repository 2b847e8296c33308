"""Config loading: file values, environment overrides, builder helpers."""

from __future__ import annotations

import json

import pytest

from lkg.config import (
    embedder_from_config,
    load_config,
    provider_from_config,
)


def test_defaults():
    cfg = load_config(env={})
    assert cfg.embed_mode == "mock"
    assert cfg.service_addr == "127.0.0.1:8321"
    assert cfg.cors_origin_list() == []


def test_file_values(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({
        "llm_endpoint": "https://llm.example/v1/chat",
        "embed_mode": "mock",
        "cors_origins": "http://localhost:5173, http://ui.example",
        "seed": 9,
    }))
    cfg = load_config(path, env={})
    assert cfg.llm_endpoint == "https://llm.example/v1/chat"
    assert cfg.seed == 9
    assert cfg.cors_origin_list() == ["http://localhost:5173", "http://ui.example"]


def test_env_overrides_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"llm_endpoint": "https://from-file.example"}))
    cfg = load_config(path, env={
        "LKG_LLM_ENDPOINT": "https://from-env.example",
        "LKG_LLM_API_KEY": "secret",
        "LKG_EMBED_MODE": "mock",
        "LKG_SNAPSHOT_PATH": "/data/graph.json",
    })
    assert cfg.llm_endpoint == "https://from-env.example"
    assert cfg.llm_api_key == "secret"
    assert cfg.snapshot_path == "/data/graph.json"


def test_unknown_keys_rejected(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"not_a_key": 1}))
    with pytest.raises(ValueError, match="unknown config keys"):
        load_config(path, env={})


def test_provider_builder():
    cfg = load_config(env={"LKG_LLM_ENDPOINT": "https://llm.example", "LKG_LLM_MODEL": "m-1"})
    provider = provider_from_config(cfg, "remote")
    assert provider.endpoint == "https://llm.example"
    assert provider.model_name == "m-1"
    with pytest.raises(ValueError):
        provider_from_config(load_config(env={}), "remote")  # no endpoint


def test_embedder_builder():
    cfg = load_config(env={"LKG_EMBED_MODE": "mock"})
    embedder = embedder_from_config(cfg)
    assert embedder.mode == "mock"
    remote_cfg = load_config(env={
        "LKG_EMBED_MODE": "remote",
        "LKG_EMBED_ENDPOINT": "https://embed.example",
    })
    assert embedder_from_config(remote_cfg).endpoint == "https://embed.example"
