"""Runtime configuration: YAML file keys overridden by environment variables."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import yaml

# config key -> environment variable; env always wins.
ENV_OVERRIDES = {
    "pubmed_base_url": "PUBMED_BASE_URL",
    "pubmed_api_key": "PUBMED_API_KEY",
    "llm_base_url": "LLM_BASE_URL",
    "llm_api_key": "LLM_API_KEY",
    "embed_base_url": "EMBED_BASE_URL",
    "embed_api_key": "EMBED_API_KEY",
    "finetune_base_url": "FINETUNE_BASE_URL",
    "finetune_api_key": "FINETUNE_API_KEY",
    "biocyc_base_url": "BIOCYC_BASE_URL",
    "biocyc_user": "BIOCYC_USER",
    "biocyc_password": "BIOCYC_PASSWORD",
}


@dataclass
class AppConfig:
    pubmed_base_url: Optional[str] = None
    pubmed_api_key: Optional[str] = None
    llm_base_url: Optional[str] = None
    llm_api_key: Optional[str] = None
    embed_base_url: Optional[str] = None
    embed_api_key: Optional[str] = None
    finetune_base_url: Optional[str] = None
    finetune_api_key: Optional[str] = None
    biocyc_base_url: Optional[str] = None
    biocyc_user: Optional[str] = None
    biocyc_password: Optional[str] = None

    model_id: str = "gpt-4.1-2025-04-14"
    relevance_threshold: int = 3
    max_papers_ceiling: int = 25
    token_budget: int = 30000
    gate_min_chars: int = 80
    db_path: str = "mpminer.sqlite3"
    cache_dir: str = ".mpminer-cache"
    tox_dataset_path: Optional[str] = None
    fixtures_dir: Optional[str] = None


def load_config(path: Optional[Path] = None) -> AppConfig:
    """Load config from YAML (when given/found), then apply env overrides."""
    data: dict = {}
    if path is None:
        candidate = Path("mpminer.yaml")
        path = candidate if candidate.exists() else None
    if path is not None:
        loaded = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        if not isinstance(loaded, dict):
            raise ValueError("config file must contain a mapping")
        data = loaded

    known = {f.name for f in fields(AppConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = AppConfig(**data)

    for key, env_name in ENV_OVERRIDES.items():
        value = os.environ.get(env_name)
        if value:
            setattr(cfg, key, value)
    return cfg
