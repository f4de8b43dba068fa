"""Loaders for the data assets shipped with the package.

The scene hierarchy is the shared source of truth for the 16 scene groups;
the country table and tag vocabulary are versioned placeholder assets that
deployments may replace with their own files of the same shape.
"""

from __future__ import annotations

import csv
import json
from functools import lru_cache
from importlib import resources as importlib_resources
from pathlib import Path

ASSET_PACKAGE = "datasetlens"


def asset_path(name: str) -> Path:
    return Path(str(importlib_resources.files(ASSET_PACKAGE) / "assets" / name))


@lru_cache(maxsize=None)
def scene_hierarchy() -> dict[str, str]:
    """Scene name -> scene group (365 scenes, 16 groups)."""
    with asset_path("scene_hierarchy.json").open(encoding="utf-8") as fh:
        return json.load(fh)


@lru_cache(maxsize=None)
def scene_group_names() -> tuple[str, ...]:
    return tuple(sorted(set(scene_hierarchy().values())))


@lru_cache(maxsize=None)
def scene_group_members() -> dict[str, tuple[str, ...]]:
    """Scene group -> member scene names, humanized for query strings
    ('church/indoor' -> 'church indoor')."""
    members: dict[str, list[str]] = {}
    for scene, group in sorted(scene_hierarchy().items()):
        human = scene.replace("_", " ").replace("/", " ")
        members.setdefault(group, []).append(human)
    return {g: tuple(v) for g, v in members.items()}


@lru_cache(maxsize=None)
def query_synonyms() -> dict[str, tuple[str, ...]]:
    with asset_path("query_synonyms.json").open(encoding="utf-8") as fh:
        raw = json.load(fh)
    return {k: tuple(v) for k, v in raw.items()}


@lru_cache(maxsize=None)
def action_templates() -> dict[str, str]:
    with asset_path("action_templates.json").open(encoding="utf-8") as fh:
        return json.load(fh)


def default_country_table_path() -> Path:
    return asset_path("countries.csv")


def default_vocabulary_path() -> Path:
    return asset_path("tag_vocabulary.txt")


@lru_cache(maxsize=None)
def default_vocabulary() -> tuple[str, ...]:
    return load_vocabulary(default_vocabulary_path())


def load_vocabulary(path: str | Path) -> tuple[str, ...]:
    """One lowercase tag per line; blank lines ignored."""
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            tag = line.strip().lower()
            if tag:
                out.append(tag)
    return tuple(out)


def toy_dataset_path() -> Path:
    return asset_path("toy/toy_dataset.jsonl")


def toy_features_path() -> Path:
    return asset_path("toy/toy_features.jsonl")
