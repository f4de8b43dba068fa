"""Feature-file schema verification.

Checks the engine's contract directly on the file: header first with a
declared image dimension, vector lengths, ID types, scene-group enum
membership, and tag-language shape. Violations come back as strings; an empty
list means the file conforms.
"""

from __future__ import annotations

import json
from pathlib import Path

from .extract import load_scene_hierarchy

INSTANCE_DIM = 64


def verify_schema(
    path: str | Path, scene_hierarchy_path: str | Path | None = None
) -> list[str]:
    hierarchy = load_scene_hierarchy(scene_hierarchy_path)
    valid_groups = set(hierarchy.values())
    violations: list[str] = []
    header = None
    seen_image_ids: set[str] = set()
    seen_instance_ids: set[str] = set()

    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"line {lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                violations.append(f"{where}: invalid JSON ({exc.msg})")
                continue
            kind = record.get("kind")
            if header is None:
                if kind != "header":
                    violations.append(f"{where}: first record must be the header")
                    header = {"image_dim": None}
                else:
                    header = record
                    if not isinstance(record.get("image_dim"), int) or record["image_dim"] < 1:
                        violations.append(f"{where}: header image_dim must be a positive integer")
                continue
            if kind == "image_feature":
                image_id = record.get("image_id")
                if not isinstance(image_id, str) or not image_id:
                    violations.append(f"{where}: image_id must be a nonempty string")
                    continue
                if image_id in seen_image_ids:
                    violations.append(f"{where}: duplicate image_feature for {image_id!r}")
                seen_image_ids.add(image_id)
                vector = record.get("vector")
                expected = header.get("image_dim")
                if vector is not None and expected and len(vector) != expected:
                    violations.append(
                        f"{where}: image vector for {image_id!r} has length "
                        f"{len(vector)}, header declares {expected}"
                    )
                group = record.get("scene_group")
                if group is not None and group not in valid_groups:
                    violations.append(
                        f"{where}: scene_group {group!r} not in the 16-group enum"
                    )
                scene = record.get("scene")
                if scene is not None and scene not in hierarchy:
                    violations.append(f"{where}: unknown scene name {scene!r}")
                languages = record.get("tag_languages")
                if languages is not None and not all(
                    isinstance(code, str) and code for code in languages
                ):
                    violations.append(f"{where}: tag_languages must be nonempty strings")
            elif kind == "instance_feature":
                instance_id = record.get("instance_id")
                if not isinstance(instance_id, str) or not instance_id:
                    violations.append(f"{where}: instance_id must be a nonempty string")
                    continue
                if instance_id in seen_instance_ids:
                    violations.append(
                        f"{where}: duplicate instance_feature for {instance_id!r}"
                    )
                seen_instance_ids.add(instance_id)
                vector = record.get("vector")
                if vector is not None and len(vector) != INSTANCE_DIM:
                    violations.append(
                        f"{where}: instance vector for {instance_id!r} has length "
                        f"{len(vector)}, expected {INSTANCE_DIM}"
                    )
                flag = record.get("face_detected")
                if flag is not None and not isinstance(flag, bool):
                    violations.append(f"{where}: face_detected must be boolean")
            else:
                violations.append(f"{where}: unknown record kind {kind!r}")
    if header is None:
        violations.append("empty file (no header)")
    return violations
