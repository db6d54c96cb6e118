"""Service configuration: a flat key-value YAML file.

Only non-secret settings live here; API keys come from environment
variables (see ``api_key_env`` on the parser config).
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import yaml

from facetsearch.core import CoreError


@dataclass
class ServiceConfig:
    dimension: int = 512
    index_dir: str | None = None
    sessions_dir: str = "sessions"
    keyword_table: str | None = None
    embedder_mode: str = "fixture"  # fixture | external
    embedder_endpoint: str | None = None
    llm_endpoint: str | None = None
    llm_model: str = ""
    parser_fallback_only: bool = False
    parser_max_retries: int = 3
    vlm_endpoint: str | None = None
    editor_endpoint: str | None = None
    commit_cap: int = 8
    payload_threshold: int = 256
    default_k: int = 10
    svg_granularity: str = "containers"
    frontend_dir: str | None = None

    @classmethod
    def from_yaml(cls, path: str | Path) -> "ServiceConfig":
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        if not isinstance(raw, dict):
            raise CoreError(f"{path}: config must be a key-value mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise CoreError(f"{path}: unknown config keys: {sorted(unknown)}")
        return cls(**raw)
