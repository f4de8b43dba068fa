"""Minimal reader for the canonical dataset format (the engine's file contract).

The extractor only needs image geometry, tags, bboxes, and person flags; it
parses the line-delimited format directly rather than importing the engine's
loader, keeping the coupling to the documented file schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class ImageRow:
    image_id: str
    width: int
    height: int
    tags: tuple[str, ...] = ()
    file_name: str | None = None


@dataclass(frozen=True)
class InstanceRow:
    instance_id: str
    image_id: str
    category: str
    bbox: tuple[float, float, float, float] | None = None
    is_person: bool = False


@dataclass(frozen=True)
class DatasetRows:
    images: list[ImageRow] = field(default_factory=list)
    instances: list[InstanceRow] = field(default_factory=list)


def read_canonical(path: str | Path) -> DatasetRows:
    rows = DatasetRows()
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            kind = record.get("kind")
            if kind == "image":
                rows.images.append(
                    ImageRow(
                        image_id=str(record["image_id"]),
                        width=int(record["width"]),
                        height=int(record["height"]),
                        tags=tuple(str(t) for t in record.get("tags") or ()),
                        file_name=record.get("file_name"),
                    )
                )
            elif kind == "instance":
                bbox = record.get("bbox")
                rows.instances.append(
                    InstanceRow(
                        instance_id=str(record["instance_id"]),
                        image_id=str(record["image_id"]),
                        category=str(record["category"]),
                        bbox=tuple(float(v) for v in bbox) if bbox else None,
                        is_person=bool(record.get("is_person", False)),
                    )
                )
            # category records and unknown kinds are irrelevant here
    rows.images.sort(key=lambda r: r.image_id)
    rows.instances.sort(key=lambda r: r.instance_id)
    return rows


def resolve_image_path(row: ImageRow, images_root: Path) -> Path | None:
    """file_name wins; otherwise try <image_id> with common extensions."""
    if row.file_name:
        candidate = images_root / row.file_name
        if candidate.exists():
            return candidate
    for ext in (".png", ".jpg", ".jpeg", ".bmp", ".webp"):
        candidate = images_root / f"{row.image_id}{ext}"
        if candidate.exists():
            return candidate
    return None
