"""Shared fixtures and dataset builders for the test suite."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from datasetlens import attach_features, load_dataset
from datasetlens.features import FeatureStore
from datasetlens.model import (
    AnnotatedDataset,
    BBox,
    CategoryTable,
    ImageRecord,
    InstanceRecord,
    Provenance,
)
from datasetlens.resources import scene_hierarchy, toy_dataset_path, toy_features_path


def build_dataset(
    images: list[dict],
    instances: list[dict],
    supercategories: dict[str, str] | None = None,
) -> AnnotatedDataset:
    """Construct a dataset directly from plain dicts (no file round trip).

    Image dicts need image_id (width/height default 100x100); instance dicts
    need instance_id, image_id, category, and may carry bbox as a 4-list.
    """
    image_records = {}
    for spec in images:
        spec = dict(spec)
        spec.setdefault("width", 100)
        spec.setdefault("height", 100)
        if "captions" in spec:
            spec["captions"] = tuple(spec["captions"])
        if "tags" in spec:
            spec["tags"] = tuple(spec["tags"])
        if spec.get("tag_languages") is not None:
            spec["tag_languages"] = tuple(spec["tag_languages"])
        record = ImageRecord(**spec)
        image_records[record.image_id] = record
    instance_records = {}
    sup_map = dict(supercategories or {})
    for spec in instances:
        spec = dict(spec)
        if isinstance(spec.get("bbox"), (list, tuple)):
            spec["bbox"] = BBox(*spec["bbox"])
        record = InstanceRecord(**spec)
        instance_records[record.instance_id] = record
        sup_map.setdefault(record.category, record.category)
    return AnnotatedDataset(
        images={k: image_records[k] for k in sorted(image_records)},
        instances={k: instance_records[k] for k in sorted(instance_records)},
        categories=CategoryTable(supercategories=sup_map, scene_groups=dict(scene_hierarchy())),
        provenance=Provenance(source="<memory>", format="canonical", loaded_at="test"),
    )


def make_feature_store(
    image_features: dict[str, np.ndarray] | None = None,
    instance_features: dict[str, np.ndarray] | None = None,
    face_flags: dict[str, bool] | None = None,
    scene_groups: dict[str, str] | None = None,
    tag_languages: dict[str, tuple[str, ...]] | None = None,
    image_dim: int | None = None,
) -> FeatureStore:
    image_features = image_features or {}
    if image_dim is None:
        image_dim = next((v.size for v in image_features.values()), 8)
    return FeatureStore(
        image_dim=image_dim,
        image_features=image_features,
        instance_features=instance_features or {},
        face_flags=face_flags or {},
        scene_groups=scene_groups or {},
        tag_languages=tag_languages or {},
        manifest={"source": "test"},
    )


def write_jsonl(path: Path, records: list[dict]) -> Path:
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def toy_dataset() -> AnnotatedDataset:
    return attach_features(load_dataset(toy_dataset_path()), toy_features_path())
