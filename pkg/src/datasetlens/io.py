"""Dataset ingestion: the canonical line-delimited format and a COCO-style adapter.

Canonical files are UTF-8 JSON lines. Each record carries a ``kind`` field:
``image`` or ``instance`` (an optional ``category`` kind declares a
category -> supercategory mapping; instance records may instead carry a
``supercategory`` field). Unknown fields round-trip through ``extras``.
"""

from __future__ import annotations

import dataclasses
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

from . import resources
from .errors import ParseError
from .model import (
    DEFAULT_LEXICON,
    GENDER_LABELS,
    AnnotatedDataset,
    BBox,
    CategoryTable,
    GenderLexicon,
    ImageRecord,
    InstanceRecord,
    Provenance,
    derive_gender_from_captions,
)

_IMAGE_FIELDS = {
    "kind", "image_id", "width", "height", "captions", "gender_label",
    "country", "tags", "tag_languages", "scene_group",
}
_INSTANCE_FIELDS = {
    "kind", "instance_id", "image_id", "category", "supercategory", "bbox",
    "is_person", "face_detected",
}

DEFAULT_PERSON_CATEGORIES = frozenset({"person"})


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _require(record: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in record or record[key] is None:
        raise ParseError(f"{where}: missing required field {key!r}")
    return record[key]


def _parse_bbox(raw: Any, where: str) -> BBox:
    if isinstance(raw, Mapping):
        vals = [raw.get(k) for k in ("x", "y", "w", "h")]
    else:
        vals = list(raw) if isinstance(raw, (list, tuple)) else None
    if vals is None or len(vals) != 4:
        raise ParseError(f"{where}: bbox must be [x, y, w, h] or an object")
    try:
        x, y, w, h = (float(v) for v in vals)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: bbox values must be numeric") from None
    return BBox(x, y, w, h)


def _parse_image(record: Mapping[str, Any], where: str, lexicon: GenderLexicon) -> ImageRecord:
    image_id = str(_require(record, "image_id", where))
    try:
        width = int(record["width"])
        height = int(record["height"])
    except (KeyError, TypeError, ValueError):
        raise ParseError(f"{where}: image {image_id!r} needs integer width/height") from None
    if width <= 0 or height <= 0:
        raise ParseError(f"{where}: image {image_id!r} has non-positive dimensions")
    captions = tuple(str(c) for c in record.get("captions") or ())
    gender = record.get("gender_label")
    if gender is None:
        gender = derive_gender_from_captions(captions, lexicon) if captions else "unknown"
    elif gender not in GENDER_LABELS:
        raise ParseError(f"{where}: image {image_id!r} has invalid gender_label {gender!r}")
    tags = tuple(str(t) for t in record.get("tags") or ())
    langs = record.get("tag_languages")
    extras = {k: v for k, v in record.items() if k not in _IMAGE_FIELDS}
    return ImageRecord(
        image_id=image_id,
        width=width,
        height=height,
        captions=captions,
        gender_label=gender,
        country=record.get("country"),
        tags=tags,
        tag_languages=tuple(str(x) for x in langs) if langs is not None else None,
        scene_group=record.get("scene_group"),
        extras=extras,
    )


def _parse_instance(record: Mapping[str, Any], where: str) -> tuple[InstanceRecord, str | None]:
    instance_id = str(_require(record, "instance_id", where))
    image_id = str(_require(record, "image_id", where))
    category = str(_require(record, "category", where))
    bbox = _parse_bbox(record["bbox"], where) if record.get("bbox") is not None else None
    extras = {k: v for k, v in record.items() if k not in _INSTANCE_FIELDS}
    inst = InstanceRecord(
        instance_id=instance_id,
        image_id=image_id,
        category=category,
        bbox=bbox,
        is_person=bool(record.get("is_person", False)),
        face_detected=record.get("face_detected"),
        extras=extras,
    )
    sup = record.get("supercategory")
    return inst, (str(sup) if sup is not None else None)


def _build_dataset(
    images: dict[str, ImageRecord],
    instances: dict[str, InstanceRecord],
    supercategories: dict[str, str],
    duplicates: list[str],
    provenance: Provenance,
    scene_map: Mapping[str, str] | None,
) -> AnnotatedDataset:
    # total map: categories without a declared parent are their own supercategory
    for inst in instances.values():
        supercategories.setdefault(inst.category, inst.category)
    table = CategoryTable(
        supercategories=dict(sorted(supercategories.items())),
        scene_groups=dict(scene_map if scene_map is not None else resources.scene_hierarchy()),
    )
    return AnnotatedDataset(
        images={k: images[k] for k in sorted(images)},
        instances={k: instances[k] for k in sorted(instances)},
        categories=table,
        provenance=provenance,
        duplicate_ids=tuple(duplicates),
    )


def load_canonical(
    path: str | Path,
    lexicon: GenderLexicon = DEFAULT_LEXICON,
    scene_map: Mapping[str, str] | None = None,
) -> AnnotatedDataset:
    path = Path(path)
    images: dict[str, ImageRecord] = {}
    instances: dict[str, InstanceRecord] = {}
    supercategories: dict[str, str] = {}
    duplicates: list[str] = []
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
            if not isinstance(record, dict):
                raise ParseError(f"{where}: record must be an object")
            kind = record.get("kind")
            if kind == "image":
                img = _parse_image(record, where, lexicon)
                if img.image_id in images:
                    duplicates.append(img.image_id)
                else:
                    images[img.image_id] = img
            elif kind == "instance":
                inst, sup = _parse_instance(record, where)
                if inst.instance_id in instances:
                    duplicates.append(inst.instance_id)
                else:
                    instances[inst.instance_id] = inst
                if sup is not None:
                    prior = supercategories.get(inst.category)
                    if prior is not None and prior != sup:
                        raise ParseError(
                            f"{where}: category {inst.category!r} maps to both "
                            f"{prior!r} and {sup!r}"
                        )
                    supercategories[inst.category] = sup
            elif kind == "category":
                cat = str(_require(record, "category", where))
                sup = str(_require(record, "supercategory", where))
                prior = supercategories.get(cat)
                if prior is not None and prior != sup:
                    raise ParseError(
                        f"{where}: category {cat!r} maps to both {prior!r} and {sup!r}"
                    )
                supercategories[cat] = sup
            else:
                raise ParseError(f"{where}: unknown record kind {kind!r}")
    provenance = Provenance(source=str(path), format="canonical", loaded_at=_now())
    return _build_dataset(images, instances, supercategories, duplicates, provenance, scene_map)


def load_coco(
    path: str | Path,
    captions_path: str | Path | None = None,
    lexicon: GenderLexicon = DEFAULT_LEXICON,
    person_categories: frozenset[str] = DEFAULT_PERSON_CATEGORIES,
    label_gender_map: Mapping[str, str] | None = None,
    scene_map: Mapping[str, str] | None = None,
) -> AnnotatedDataset:
    """Adapt a COCO-style instances file (plus optional captions file) onto the
    canonical model.

    IDs become strings of the original integer IDs. ``segmentation`` payloads
    are dropped; small scalar annotation fields ride along in ``extras``.
    ``label_gender_map`` supports datasets that annotate people with gendered
    category names instead of captions (e.g. {'man': 'male'}).
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg})") from None
    for key in ("images", "annotations", "categories"):
        if key not in payload:
            raise ParseError(f"{path}: missing top-level {key!r} array")

    captions_by_image: dict[str, list[str]] = {}
    if captions_path is None:
        guess = path.with_name(path.name.replace("instances", "captions"))
        if "instances" in path.name and guess.exists():
            captions_path = guess
    if captions_path is not None:
        cap_payload = json.loads(Path(captions_path).read_text(encoding="utf-8"))
        for ann in cap_payload.get("annotations", []):
            captions_by_image.setdefault(str(ann["image_id"]), []).append(ann["caption"])

    cat_names: dict[int, str] = {}
    supercategories: dict[str, str] = {}
    for cat in payload["categories"]:
        name = str(cat["name"])
        cat_names[int(cat["id"])] = name
        supercategories[name] = str(cat.get("supercategory", name))

    images: dict[str, ImageRecord] = {}
    duplicates: list[str] = []
    for img in payload["images"]:
        image_id = str(img["id"])
        where = f"{path}: image {image_id}"
        if int(img.get("width", 0)) <= 0 or int(img.get("height", 0)) <= 0:
            raise ParseError(f"{where}: non-positive dimensions")
        captions = tuple(captions_by_image.get(image_id, ()))
        extras = {
            k: v for k, v in img.items()
            if k not in {"id", "width", "height"} and not isinstance(v, (list, dict))
        }
        images_record = ImageRecord(
            image_id=image_id,
            width=int(img["width"]),
            height=int(img["height"]),
            captions=captions,
            gender_label=derive_gender_from_captions(captions, lexicon),
            extras=extras,
        )
        if image_id in images:
            duplicates.append(image_id)
        else:
            images[image_id] = images_record

    instances: dict[str, InstanceRecord] = {}
    observed_genders: dict[str, set[str]] = {}
    for ann in payload["annotations"]:
        instance_id = str(ann["id"])
        where = f"{path}: annotation {instance_id}"
        cat_id = int(_require(ann, "category_id", where))
        if cat_id not in cat_names:
            raise ParseError(f"{where}: unknown category_id {cat_id}")
        category = cat_names[cat_id]
        bbox = _parse_bbox(ann["bbox"], where) if ann.get("bbox") is not None else None
        extras = {
            k: v for k, v in ann.items()
            if k not in {"id", "image_id", "category_id", "bbox", "segmentation"}
            and not isinstance(v, (list, dict))
        }
        inst = InstanceRecord(
            instance_id=instance_id,
            image_id=str(ann["image_id"]),
            category=category,
            bbox=bbox,
            is_person=category in person_categories,
            extras=extras,
        )
        if instance_id in instances:
            duplicates.append(instance_id)
        else:
            instances[instance_id] = inst
        if label_gender_map and category.lower() in label_gender_map:
            observed_genders.setdefault(inst.image_id, set()).add(
                label_gender_map[category.lower()]
            )

    if label_gender_map:
        for image_id, genders in observed_genders.items():
            img = images.get(image_id)
            if img is None or img.gender_label != "unknown":
                continue
            if len(genders) == 1:
                images[image_id] = dataclasses.replace(
                    img, gender_label=next(iter(genders))
                )

    provenance = Provenance(
        source=str(path),
        format="coco",
        loaded_at=_now(),
        extra={"captions_path": str(captions_path) if captions_path else None},
    )
    return _build_dataset(images, instances, supercategories, duplicates, provenance, scene_map)


def load_dataset(
    path: str | Path,
    format: str = "canonical",
    **kwargs,
) -> AnnotatedDataset:
    """Load a dataset file; ``format`` is 'canonical' or 'coco'.

    Iteration order of the result is sorted by ID, so repeated loads of the
    same file are identical.
    """
    if format == "canonical":
        return load_canonical(path, **kwargs)
    if format == "coco":
        return load_coco(path, **kwargs)
    raise ValueError(f"unknown dataset format {format!r}")


def save_canonical(dataset: AnnotatedDataset, path: str | Path) -> None:
    """Serialize to the canonical line-delimited format.

    load(save(load(f))) equals load(f) on every model field.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for cat, sup in dataset.categories.supercategories.items():
            if cat != sup:
                fh.write(json.dumps(
                    {"kind": "category", "category": cat, "supercategory": sup},
                    sort_keys=True,
                ) + "\n")
        for img in dataset.images.values():
            record: dict[str, Any] = {
                "kind": "image",
                "image_id": img.image_id,
                "width": img.width,
                "height": img.height,
            }
            if img.captions:
                record["captions"] = list(img.captions)
            record["gender_label"] = img.gender_label
            if img.country is not None:
                record["country"] = img.country
            if img.tags:
                record["tags"] = list(img.tags)
            if img.tag_languages is not None:
                record["tag_languages"] = list(img.tag_languages)
            if img.scene_group is not None:
                record["scene_group"] = img.scene_group
            record.update(img.extras)
            fh.write(json.dumps(record, sort_keys=True) + "\n")
        for inst in dataset.instances.values():
            record = {
                "kind": "instance",
                "instance_id": inst.instance_id,
                "image_id": inst.image_id,
                "category": inst.category,
            }
            if inst.bbox is not None:
                record["bbox"] = inst.bbox.as_list()
            if inst.is_person:
                record["is_person"] = True
            if inst.face_detected is not None:
                record["face_detected"] = inst.face_detected
            record.update(inst.extras)
            fh.write(json.dumps(record, sort_keys=True) + "\n")
