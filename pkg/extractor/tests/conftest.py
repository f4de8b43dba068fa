"""Fixture set: ten synthetic images plus a canonical dataset referencing them.

One image embeds the real photograph bundled with scikit-image so a person
crop genuinely contains a frontal face; the rest are drawn shapes/gradients.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image, ImageDraw
from skimage import data as skimage_data


def _synthetic_image(index: int, size=(320, 240)) -> Image.Image:
    rng = np.random.default_rng(index)
    base = np.zeros((size[1], size[0], 3), dtype=np.uint8)
    # horizontal gradient with a per-image hue
    ramp = np.linspace(30, 220, size[0], dtype=np.uint8)
    color = rng.integers(60, 255, size=3)
    for c in range(3):
        base[..., c] = (ramp[None, :] * (color[c] / 255.0)).astype(np.uint8)
    img = Image.fromarray(base)
    draw = ImageDraw.Draw(img)
    for _ in range(4):
        x0, y0 = rng.integers(0, size[0] - 60), rng.integers(0, size[1] - 60)
        w, h = rng.integers(20, 60, size=2)
        fill = tuple(int(v) for v in rng.integers(0, 255, size=3))
        if rng.random() < 0.5:
            draw.rectangle([int(x0), int(y0), int(x0 + w), int(y0 + h)], fill=fill)
        else:
            draw.ellipse([int(x0), int(y0), int(x0 + w), int(y0 + h)], fill=fill)
    return img


FACE_IMAGE_ID = "fix08"
FACE_BBOX = [95, 10, 170, 180]  # covers the face region of the pasted photo


@pytest.fixture(scope="session")
def fixture_set(tmp_path_factory) -> dict:
    root = tmp_path_factory.mktemp("fixture-images")
    records = []
    tag_plan = {
        "fix00": ["bonjour", "paris"],
        "fix01": ["beach", "travel"],
        "fix02": ["strand", "reise"],
        "fix03": [],
        "fix04": ["playa", "verano"],
    }
    for i in range(10):
        image_id = f"fix{i:02d}"
        if image_id == FACE_IMAGE_ID:
            # paste the bundled photograph (contains a frontal face at ~x170 y70)
            photo = Image.fromarray(skimage_data.astronaut())  # 512x512 RGB
            img = photo.resize((320, 240))
            # face lands around x150-230, y15-130 after the resize; FACE_BBOX covers it
        else:
            img = _synthetic_image(i)
        img.save(root / f"{image_id}.png")
        records.append(
            {"kind": "image", "image_id": image_id, "width": 320, "height": 240,
             "tags": tag_plan.get(image_id, [])}
        )
    # boxed instances: one object per image, persons on two images
    for i in range(10):
        image_id = f"fix{i:02d}"
        records.append(
            {"kind": "instance", "instance_id": f"obj{i:02d}", "image_id": image_id,
             "category": "thing", "bbox": [10, 10, 80, 80]}
        )
    records.append(
        {"kind": "instance", "instance_id": "person-face", "image_id": FACE_IMAGE_ID,
         "category": "person", "bbox": FACE_BBOX, "is_person": True}
    )
    records.append(
        {"kind": "instance", "instance_id": "person-plain", "image_id": "fix03",
         "category": "person", "bbox": [30, 30, 120, 150], "is_person": True}
    )
    # an out-of-bounds box that must be clipped, and one fully outside
    records.append(
        {"kind": "instance", "instance_id": "obj-oob", "image_id": "fix01",
         "category": "thing", "bbox": [300, 220, 60, 60]}
    )
    records.append(
        {"kind": "instance", "instance_id": "obj-gone", "image_id": "fix02",
         "category": "thing", "bbox": [500, 500, 20, 20]}
    )
    dataset_path = root / "dataset.jsonl"
    dataset_path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    return {"root": root, "dataset": dataset_path}
