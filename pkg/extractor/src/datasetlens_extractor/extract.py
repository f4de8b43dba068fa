"""The extraction pipeline: dataset file + images directory -> feature file.

One image_feature record per readable image (vector, scene group, tag
languages) and one instance_feature record per boxed instance (64-d vector;
face flag for person instances). Output order is deterministic (sorted IDs),
so extraction is idempotent for a fixed input and manifest.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

from PIL import Image

from . import backends, faces, language
from .io import DatasetRows, ImageRow, read_canonical, resolve_image_path

log = logging.getLogger("datasetlens_extractor")


@dataclass(frozen=True)
class ExtractorManifest:
    scene_classifier: str
    instance_embedder: str
    image_embedder: str
    face_detector: str
    language_identifier: str
    image_dim: int
    scene_group_count: int
    extracted_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )

    def to_dict(self) -> dict[str, Any]:
        return {
            "scene_classifier": self.scene_classifier,
            "instance_embedder": self.instance_embedder,
            "image_embedder": self.image_embedder,
            "face_detector": self.face_detector,
            "language_identifier": self.language_identifier,
            "image_dim": self.image_dim,
            "scene_group_count": self.scene_group_count,
            "extracted_at": self.extracted_at,
        }


def load_scene_hierarchy(path: str | Path | None = None) -> dict[str, str]:
    """The shared scene-name -> scene-group asset.

    Defaults to the copy shipped inside the engine package so both sides
    provably use the same file; pass a path to override.
    """
    if path is not None:
        with Path(path).open(encoding="utf-8") as fh:
            return json.load(fh)
    from datasetlens.resources import scene_hierarchy

    return dict(scene_hierarchy())


def _clip_box(box, width, height):
    x, y, w, h = box
    x0, y0 = max(x, 0.0), max(y, 0.0)
    x1, y1 = min(x + w, width), min(y + h, height)
    if x1 - x0 < 1 or y1 - y0 < 1:
        return None
    return (x0, y0, x1, y1)


@dataclass
class ExtractionStats:
    images_processed: int = 0
    images_skipped: tuple[str, ...] = ()
    instances_processed: int = 0
    boxes_clipped: int = 0


def extract(
    dataset_path: str | Path,
    images_root: str | Path | None,
    output_path: str | Path,
    tags_only: bool = False,
    image_dim: int = backends.DEFAULT_IMAGE_DIM,
    scene_backend: str = "builtin",
    instance_backend: str = "builtin",
    image_backend: str = "builtin",
    scene_hierarchy_path: str | Path | None = None,
) -> ExtractionStats:
    """Run extraction and write the feature file; returns processing stats.

    ``tags_only`` skips all pixel work (no images directory needed) and emits
    only tag-language records.
    """
    rows: DatasetRows = read_canonical(dataset_path)
    hierarchy = load_scene_hierarchy(scene_hierarchy_path)
    scene_names = sorted(hierarchy)

    if not tags_only:
        if images_root is None:
            raise ValueError("images_root is required unless tags_only is set")
        images_root = Path(images_root)
        scene = backends.make_scene_backend(scene_backend, scene_names)
        instance_embedder = backends.make_instance_embedder(instance_backend)
        image_embedder = backends.make_image_embedder(image_backend, image_dim)
        manifest = ExtractorManifest(
            scene_classifier=scene.name,
            instance_embedder=instance_embedder.name,
            image_embedder=image_embedder.name,
            face_detector=faces.DETECTOR_NAME,
            language_identifier=language.IDENTIFIER_NAME,
            image_dim=image_embedder.dim,
            scene_group_count=len(set(hierarchy.values())),
        )
    else:
        manifest = ExtractorManifest(
            scene_classifier="none",
            instance_embedder="none",
            image_embedder="none",
            face_detector="none",
            language_identifier=language.IDENTIFIER_NAME,
            image_dim=image_dim,
            scene_group_count=len(set(hierarchy.values())),
        )

    stats = ExtractionStats()
    skipped: list[str] = []
    instances_by_image: dict[str, list] = {}
    for inst in rows.instances:
        instances_by_image.setdefault(inst.image_id, []).append(inst)

    output_path = Path(output_path)
    with output_path.open("w", encoding="utf-8") as out:
        out.write(
            json.dumps(
                {"kind": "header", "image_dim": manifest.image_dim,
                 "manifest": manifest.to_dict()},
                sort_keys=True,
            )
            + "\n"
        )
        for row in rows.images:
            record: dict[str, Any] = {"kind": "image_feature", "image_id": row.image_id}
            if row.tags:
                record["tag_languages"] = language.identify_tags(list(row.tags))
            image = None
            if not tags_only:
                path = resolve_image_path(row, images_root)
                if path is None:
                    skipped.append(row.image_id)
                    log.warning("image %s: no readable file, skipped", row.image_id)
                else:
                    try:
                        image = Image.open(path)
                        image.load()
                    except OSError as exc:
                        skipped.append(row.image_id)
                        image = None
                        log.warning("image %s: %s, skipped", row.image_id, exc)
            if image is not None:
                scene_name = scene.classify(image)
                record["scene"] = scene_name
                record["scene_group"] = hierarchy[scene_name]
                record["vector"] = [round(float(v), 6) for v in image_embedder.embed(image)]
                stats.images_processed += 1
            if len(record) > 2:
                out.write(json.dumps(record, sort_keys=True) + "\n")

            if tags_only or image is None:
                continue
            for inst in instances_by_image.get(row.image_id, ()):
                if inst.bbox is None:
                    continue
                clipped = _clip_box(inst.bbox, row.width, row.height)
                if clipped is None:
                    log.warning(
                        "instance %s: bbox fully outside image, skipped", inst.instance_id
                    )
                    continue
                if clipped != (inst.bbox[0], inst.bbox[1],
                               inst.bbox[0] + inst.bbox[2], inst.bbox[1] + inst.bbox[3]):
                    stats.boxes_clipped += 1
                crop = image.crop(tuple(int(round(v)) for v in clipped))
                payload: dict[str, Any] = {
                    "kind": "instance_feature",
                    "instance_id": inst.instance_id,
                    "vector": [round(float(v), 6) for v in instance_embedder.embed(crop)],
                }
                if inst.is_person:
                    payload["face_detected"] = faces.detect_face(crop)
                out.write(json.dumps(payload, sort_keys=True) + "\n")
                stats.instances_processed += 1

    stats.images_skipped = tuple(skipped)
    return stats
