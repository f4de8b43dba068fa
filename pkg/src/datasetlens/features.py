"""Precomputed perceptual features and their file schema.

The engine never runs model inference; an offline extractor writes a
line-delimited feature file that this module parses and attaches. Schema:

- first record: ``{"kind": "header", "image_dim": D, "manifest": {...}}``
- ``{"kind": "image_feature", "image_id": ..., "vector": [D floats]?,
  "scene_group": ...?, "scene": ...?, "tag_languages": [...]?}``
- ``{"kind": "instance_feature", "instance_id": ..., "vector": [64 floats]?,
  "face_detected": bool?}``

Instance vectors are always 64-dimensional; image vectors share the header's D.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import FeatureSchemaError, ParseError
from .model import AnnotatedDataset, ImageRecord, InstanceRecord

INSTANCE_DIM = 64


@dataclass(frozen=True, eq=False)
class FeatureStore:
    image_dim: int
    image_features: Mapping[str, np.ndarray]
    instance_features: Mapping[str, np.ndarray]
    face_flags: Mapping[str, bool]
    scene_groups: Mapping[str, str]
    tag_languages: Mapping[str, tuple[str, ...]]
    manifest: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class FeatureCoverage:
    image_fraction: float
    instance_fraction: float
    images_missing: tuple[str, ...]
    instances_missing: tuple[str, ...]
    unknown_ids: tuple[str, ...]
    warnings: tuple[str, ...] = ()


def parse_feature_file(path: str | Path) -> FeatureStore:
    path = Path(path)
    image_features: dict[str, np.ndarray] = {}
    instance_features: dict[str, np.ndarray] = {}
    face_flags: dict[str, bool] = {}
    scene_groups: dict[str, str] = {}
    tag_languages: dict[str, tuple[str, ...]] = {}
    header: dict[str, Any] | None = None

    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{where}: invalid JSON ({exc.msg})") from None
            kind = record.get("kind")
            if header is None:
                if kind != "header":
                    raise FeatureSchemaError(f"{where}: first record must be the header")
                if "image_dim" not in record:
                    raise FeatureSchemaError(f"{where}: header must declare image_dim")
                header = record
                continue
            if kind == "image_feature":
                image_id = str(record["image_id"])
                vec = record.get("vector")
                if vec is not None:
                    arr = np.asarray(vec, dtype=float)
                    if arr.shape != (int(header["image_dim"]),):
                        raise FeatureSchemaError(
                            f"{where}: image vector for {image_id!r} has length "
                            f"{arr.size}, header declares {header['image_dim']}"
                        )
                    image_features[image_id] = arr
                if record.get("scene_group") is not None:
                    scene_groups[image_id] = str(record["scene_group"])
                if record.get("tag_languages") is not None:
                    tag_languages[image_id] = tuple(
                        str(x) for x in record["tag_languages"]
                    )
            elif kind == "instance_feature":
                instance_id = str(record["instance_id"])
                vec = record.get("vector")
                if vec is not None:
                    arr = np.asarray(vec, dtype=float)
                    if arr.shape != (INSTANCE_DIM,):
                        raise FeatureSchemaError(
                            f"{where}: instance vector for {instance_id!r} has length "
                            f"{arr.size}, expected {INSTANCE_DIM}"
                        )
                    instance_features[instance_id] = arr
                if record.get("face_detected") is not None:
                    face_flags[instance_id] = bool(record["face_detected"])
            else:
                raise FeatureSchemaError(f"{where}: unknown record kind {kind!r}")

    if header is None:
        raise FeatureSchemaError(f"{path}: empty feature file (no header)")
    return FeatureStore(
        image_dim=int(header["image_dim"]),
        image_features=image_features,
        instance_features=instance_features,
        face_flags=face_flags,
        scene_groups=scene_groups,
        tag_languages=tag_languages,
        manifest=header.get("manifest", {}),
    )


def attach_features(dataset: AnnotatedDataset, feature_file: str | Path) -> AnnotatedDataset:
    """Return a new dataset with feature references resolved.

    Scene groups, tag languages, and face flags are copied onto the records
    they describe; unknown IDs and unknown scene groups are reported in the
    coverage (skipped, not fatal).
    """
    store = parse_feature_file(feature_file)
    unknown: list[str] = []
    warnings: list[str] = []
    valid_groups = set(dataset.categories.scene_group_names)

    for image_id in set(store.image_features) | set(store.scene_groups) | set(store.tag_languages):
        if image_id not in dataset.images:
            unknown.append(image_id)
    for instance_id in set(store.instance_features) | set(store.face_flags):
        if instance_id not in dataset.instances:
            unknown.append(instance_id)

    new_images: dict[str, ImageRecord] = {}
    for image_id, img in dataset.images.items():
        updates: dict[str, Any] = {}
        group = store.scene_groups.get(image_id)
        if group is not None:
            if group in valid_groups:
                updates["scene_group"] = group
            else:
                warnings.append(
                    f"image {image_id!r}: unknown scene group {group!r} skipped"
                )
        langs = store.tag_languages.get(image_id)
        if langs is not None:
            if img.tags and len(langs) != len(img.tags):
                warnings.append(
                    f"image {image_id!r}: {len(langs)} tag languages for "
                    f"{len(img.tags)} tags"
                )
            updates["tag_languages"] = langs
        new_images[image_id] = dataclasses.replace(img, **updates) if updates else img

    new_instances: dict[str, InstanceRecord] = {}
    for instance_id, inst in dataset.instances.items():
        flag = store.face_flags.get(instance_id)
        if flag is not None:
            new_instances[instance_id] = dataclasses.replace(inst, face_detected=flag)
        else:
            new_instances[instance_id] = inst

    n_images = max(len(dataset.images), 1)
    n_instances = max(len(dataset.instances), 1)
    images_missing = tuple(
        i for i in dataset.images if i not in store.image_features
    )
    instances_missing = tuple(
        i for i in dataset.instances if i not in store.instance_features
    )
    coverage = FeatureCoverage(
        image_fraction=1.0 - len(images_missing) / n_images,
        instance_fraction=1.0 - len(instances_missing) / n_instances,
        images_missing=images_missing,
        instances_missing=instances_missing,
        unknown_ids=tuple(sorted(unknown)),
        warnings=tuple(warnings),
    )
    return dataclasses.replace(
        dataset,
        images=new_images,
        instances=new_instances,
        features=store,
        feature_coverage=coverage,
    )
