"""Runtime configuration for the engine, CLI, and service."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional


@dataclass(frozen=True)
class Bm25Config:
    k1: float = 1.2
    b: float = 0.75


@dataclass(frozen=True)
class DenseConfig:
    enabled: bool = False
    dim: int = 64


@dataclass(frozen=True)
class HnswConfig:
    m: int = 32
    ef_construction: int = 200
    ef_search: int = 64


@dataclass(frozen=True)
class FusionConfig:
    alpha: float = 0.4
    beta: float = 0.5
    gamma: float = 0.1

    @property
    def lexical(self) -> float:
        return self.alpha

    @property
    def dense(self) -> float:
        return self.beta

    @property
    def meta(self) -> float:
        return self.gamma

    def normalized(self) -> "FusionConfig":
        total = self.alpha + self.beta + self.gamma
        if total <= 0:
            raise ValueError("fusion weights must sum to a positive value")
        return FusionConfig(self.alpha / total, self.beta / total, self.gamma / total)

    def lexical_only(self) -> "FusionConfig":
        # Redistribute the dense weight proportionally across the survivors.
        total = self.alpha + self.gamma
        if total <= 0:
            raise ValueError("lexical and metadata weights cannot both be zero")
        return FusionConfig(self.alpha / total, 0.0, self.gamma / total)


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8040
    console_dir: Optional[str] = None


@dataclass(frozen=True)
class Config:
    storage_dir: Optional[str] = None
    schema_path: Optional[str] = None
    aliases_path: Optional[str] = None
    bm25: Bm25Config = field(default_factory=Bm25Config)
    dense: DenseConfig = field(default_factory=DenseConfig)
    hnsw: HnswConfig = field(default_factory=HnswConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    default_k: int = 20
    hot_threshold: int = 10
    seed: int = 0
    server: ServerConfig = field(default_factory=ServerConfig)

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "Config":
        def sub(cls, key):
            return cls(**data.get(key, {})) if isinstance(data.get(key, {}), dict) else cls()

        cfg = Config(
            storage_dir=data.get("storage_dir"),
            schema_path=data.get("schema_path"),
            aliases_path=data.get("aliases_path"),
            bm25=sub(Bm25Config, "bm25"),
            dense=sub(DenseConfig, "dense"),
            hnsw=sub(HnswConfig, "hnsw"),
            fusion=sub(FusionConfig, "fusion"),
            default_k=int(data.get("default_k", 20)),
            hot_threshold=int(data.get("hot_threshold", 10)),
            seed=int(data.get("seed", 0)),
            server=sub(ServerConfig, "server"),
        )
        return replace(cfg, fusion=cfg.fusion.normalized())

    @staticmethod
    def from_file(path: str | Path) -> "Config":
        return Config.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
