"""Run configuration: every threshold and seed flows through here, is recorded
verbatim in each report, and can come from CLI flags, a config file (JSON or
YAML), or DATASETLENS_-prefixed environment variables."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

ENV_PREFIX = "DATASETLENS_"

SECTION_NAMES = ("objects", "gender", "geo", "insights")


@dataclass(frozen=True)
class RunConfig:
    # inputs
    dataset: str = ""
    format: str = "canonical"
    captions: str | None = None
    features: str | None = None
    country_table: str | None = None  # None -> packaged asset
    vocabulary: str | None = None  # None -> packaged asset
    out_dir: str = "reports"
    # global
    seed: int = 0
    sections: tuple[str, ...] = SECTION_NAMES
    alpha: float = 0.05
    confidence: float = 0.95
    n_exemplars: int = 5
    auto_k: int = 3  # how many targets auto-selected for expensive sections
    # objects
    iou_threshold: float = 0.95
    duplicate_fraction_threshold: float = 0.6
    duplicate_min_cooccurrences: int = 5
    duplicate_mode: str = "image"
    scale_bins: int = 5
    min_category_instances: int = 20
    diversity_sample_cap: int = 1000
    # gender
    distance_min_n: int = 10
    separability_min_n: int = 25
    separability_sample_cap: int = 500
    distance_categories: tuple[str, ...] = ()
    separability_categories: tuple[str, ...] = ()
    # geo
    geo_min_images: int = 10
    tag_min_count: int = 20
    subregion_min_n: int = 10
    subregion_sample_cap: int = 200
    subregion_trials: int = 3
    subregion_tags: tuple[str, ...] = ()
    # insights
    min_support: int = 10
    recommend_targets: tuple[str, ...] = ()
    recommend_outcome: str | None = None
    tradeoff_targets: tuple[str, ...] = ()
    # svm
    svm_lambda: float = 1e-4
    svm_epochs: int = 100
    svm_holdout: float = 0.3
    svm_trials: int = 5
    # service
    cache_entries: int = 64

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in out.items()}


_TUPLE_FIELDS = {
    f.name for f in fields(RunConfig) if f.type.startswith("tuple")
}


def _coerce(name: str, value: Any) -> Any:
    hint = {f.name: f.type for f in fields(RunConfig)}[name]
    if name in _TUPLE_FIELDS:
        if isinstance(value, str):
            return tuple(v.strip() for v in value.split(",") if v.strip())
        return tuple(value)
    if isinstance(value, str):
        if hint.startswith("int"):
            return int(value)
        if hint.startswith("float"):
            return float(value)
        if value.lower() in ("null", "none", ""):
            return None
    return value


def _apply(base: dict[str, Any], overrides: Mapping[str, Any]) -> None:
    known = {f.name for f in fields(RunConfig)}
    for key, value in overrides.items():
        key = key.lower()
        if key not in known:
            raise ValueError(f"unknown config field {key!r}")
        if value is not None:
            base[key] = _coerce(key, value)


def load_config(
    config_file: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    env: Mapping[str, str] | None = None,
) -> RunConfig:
    """Precedence: explicit overrides > environment > config file > defaults."""
    merged: dict[str, Any] = {}
    if config_file is not None:
        path = Path(config_file)
        text = path.read_text(encoding="utf-8")
        payload = (
            json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
        ) or {}
        if not isinstance(payload, dict):
            raise ValueError(f"{path}: config file must hold a mapping")
        _apply(merged, payload)
    environ = os.environ if env is None else env
    env_overrides = {
        key[len(ENV_PREFIX):].lower(): value
        for key, value in environ.items()
        if key.startswith(ENV_PREFIX)
    }
    _apply(merged, env_overrides)
    if overrides:
        _apply(merged, {k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**merged)
