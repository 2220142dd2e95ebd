"""Pipeline configuration: one snapshot reproduces a release byte-for-byte."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import RtlBenchError


@dataclass
class Config:
    seed: int = 1
    num_perms: int = 128
    dedup_threshold: float = 0.70
    shingle_k: int = 5
    induction_k: int = 30
    sat_conflict_budget: int = 200_000
    complexity_keywords: list[str] = field(
        default_factory=lambda: ["always", "assign", "generate", "wire", "reg"]
    )
    min_k_grid: list[float] = field(default_factory=lambda: [10.0, 15.0, 20.0, 25.0, 30.0])
    max_audit_tokens: int = 2000
    version_tag: str = "dev"
    jobs: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def load(path: Path | str | None, overrides: dict | None = None) -> "Config":
        data = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise RtlBenchError(f"cannot load config {path}: {exc}") from exc
        known = {f.name for f in fields(Config)}
        unknown = set(data) - known
        if unknown:
            raise RtlBenchError(f"unknown config keys: {sorted(unknown)}")
        merged = dict(data)
        for key, value in (overrides or {}).items():
            if value is not None:
                merged[key] = value
        return Config(**merged)
