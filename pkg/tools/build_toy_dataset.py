#!/usr/bin/env python3
"""Generate the bundled toy dataset + synthetic feature file (committed assets).

Deterministic: fixed seed, stable iteration. ~50 images with captions-derived
genders, country codes, tags with languages, boxed instances over six
supercategories, scene groups, and synthetic embeddings with real cluster
structure (so diversity/tradeoff metrics have something to find).

    python tools/build_toy_dataset.py
"""

import json
from pathlib import Path

import numpy as np

SEED = 20240811
OUT_DIR = Path("src/datasetlens/assets/toy")

SUPERCATEGORIES = {
    "person": "person",
    "bicycle": "vehicle",
    "car": "vehicle",
    "cup": "kitchen",
    "bottle": "kitchen",
    "pizza": "food",
    "cake": "food",
    "dog": "animal",
    "cat": "animal",
    "surfboard": "sports",
    "skis": "sports",
}

# country -> (tag language, default tags)
COUNTRIES = {
    "US": ("en", ["city", "street", "food"]),
    "FR": ("fr", ["market", "bridge", "cafe"]),
    "JP": ("ja", ["temple", "dish", "street"]),
    "KE": ("sw", ["wildlife", "safari", "park"]),
    "BR": ("pt", ["beach", "carnival", "football"]),
    "IN": ("hi", ["market", "temple", "street"]),
    "AU": ("en", ["beach", "surf", "wildlife"]),
    "EG": ("ar", ["mosque", "desert", "history"]),
}

SCENES = [
    "shopping and dining",
    "outdoor sports fields, parks",
    "water, ice, snow",
    "home or hotel",
    "indoor cultural",
]

MALE_CAPTION = "a man {verb} with {obj}"
FEMALE_CAPTION = "a woman {verb} with {obj}"
NEUTRAL_CAPTION = "a view of {obj} outside"


def main() -> None:
    rng = np.random.default_rng(SEED)
    width, height = 640, 480

    # scene assignment skews by gender: sports scenes male-heavy, shopping
    # female-heavy, mirroring the patterns the metrics are meant to surface.
    plan = []
    genders = ["male"] * 19 + ["female"] * 16 + ["unknown"] * 15
    country_cycle = [iso for iso in COUNTRIES for _ in (0, 1)] * 4  # 64 slots
    for i, g in enumerate(genders):
        iso = country_cycle[i]
        if g == "male":
            scene = SCENES[1] if i % 3 else SCENES[2]
        elif g == "female":
            scene = SCENES[0] if i % 3 else SCENES[3]
        else:
            scene = SCENES[i % len(SCENES)]
        plan.append((f"toy{i:03d}", g, iso, scene))

    scene_centers = {s: rng.normal(0, 4.0, size=32) for s in SCENES}
    cat_centers = {}
    super_centers = {s: rng.normal(0, 6.0, size=64) for s in set(SUPERCATEGORIES.values())}
    for cat, sup in SUPERCATEGORIES.items():
        cat_centers[cat] = super_centers[sup] + rng.normal(0, 2.0, size=64)

    dataset_lines = []
    feature_lines = [
        json.dumps(
            {
                "kind": "header",
                "image_dim": 32,
                "manifest": {
                    "scene_classifier": "synthetic-toy-v1",
                    "instance_embedder": "synthetic-toy-64d-v1",
                    "image_embedder": "synthetic-toy-32d-v1",
                    "face_detector": "synthetic-toy-v1",
                    "language_identifier": "synthetic-toy-v1",
                },
            },
            sort_keys=True,
        )
    ]
    for cat, sup in sorted(SUPERCATEGORIES.items()):
        if cat != sup:
            dataset_lines.append(
                json.dumps(
                    {"kind": "category", "category": cat, "supercategory": sup},
                    sort_keys=True,
                )
            )

    instance_counter = 0
    for image_id, gender, iso, scene in plan:
        lang, base_tags = COUNTRIES[iso]
        tags = list(base_tags[: 2 + int(rng.integers(0, 2))])
        tag_langs = [lang] * len(tags)
        # every third image is touristy: English travel tag on top
        if int(image_id[3:]) % 3 == 0 and lang != "en":
            tags.append("travel")
            tag_langs.append("en")

        # objects present in the image, skewed by scene/gender
        cats = []
        if scene == SCENES[0]:
            cats += ["cup", "cake"] + (["bottle"] if rng.random() < 0.5 else [])
            if rng.random() < 0.6:
                cats.append("pizza")
        if scene == SCENES[1]:
            cats += ["bicycle"] + (["dog"] if rng.random() < 0.6 else [])
        if scene == SCENES[2]:
            cats += ["surfboard"] + (["skis"] if rng.random() < 0.4 else [])
        if scene == SCENES[3]:
            cats += ["cat", "cup"] + (["pizza"] if rng.random() < 0.7 else [])
        if scene == SCENES[4]:
            cats += ["pizza"] + (["car"] if rng.random() < 0.5 else [])
        if int(image_id[3:]) % 3 != 1:  # two thirds of images have a car
            cats.append("car")

        obj = cats[0]
        if gender == "male":
            captions = [MALE_CAPTION.format(verb="standing", obj=obj)]
        elif gender == "female":
            captions = [FEMALE_CAPTION.format(verb="sitting", obj=obj)]
        else:
            captions = [NEUTRAL_CAPTION.format(obj=obj)]

        dataset_lines.append(
            json.dumps(
                {
                    "kind": "image",
                    "image_id": image_id,
                    "width": width,
                    "height": height,
                    "captions": captions,
                    "country": iso,
                    "tags": tags,
                },
                sort_keys=True,
            )
        )
        image_vec = scene_centers[scene] + rng.normal(0, 0.8, size=32)
        feature_lines.append(
            json.dumps(
                {
                    "kind": "image_feature",
                    "image_id": image_id,
                    "vector": [round(float(v), 5) for v in image_vec],
                    "scene_group": scene,
                    "tag_languages": tag_langs,
                },
                sort_keys=True,
            )
        )

        def add_instance(category: str, bbox, is_person=False, face=None):
            nonlocal instance_counter
            instance_id = f"inst{instance_counter:04d}"
            instance_counter += 1
            record = {
                "kind": "instance",
                "instance_id": instance_id,
                "image_id": image_id,
                "category": category,
                "bbox": [round(float(v), 1) for v in bbox],
            }
            if is_person:
                record["is_person"] = True
            dataset_lines.append(json.dumps(record, sort_keys=True))
            payload = {"kind": "instance_feature", "instance_id": instance_id}
            if not is_person:
                scene_shift = 1.5 if scene == SCENES[2] else 0.0
                vec = (
                    cat_centers[category]
                    + rng.normal(0, 1.0, size=64)
                    + scene_shift * np.sign(cat_centers[category])
                )
                payload["vector"] = [round(float(v), 5) for v in vec]
            if face is not None:
                payload["face_detected"] = face
            feature_lines.append(json.dumps(payload, sort_keys=True))

        # person(s): gendered images get one; unidentifiable ones skew male,
        # the annotator-default pattern the audit is meant to expose
        if gender in ("male", "female"):
            idx = int(image_id[3:])
            unidentifiable = (idx % 2 == 0) if gender == "male" else (idx % 5 == 0)
            if unidentifiable:
                # tiny box (under the 1000 px^2 floor), no face
                x, y = rng.uniform(0, width - 40), rng.uniform(0, height - 40)
                add_instance("person", [x, y, 24, 30], is_person=True, face=False)
            else:
                x, y = rng.uniform(0, width - 220), rng.uniform(0, height - 260)
                add_instance("person", [x, y, 140, 240], is_person=True, face=True)

        for category in cats:
            if category == "pizza":
                if scene == SCENES[4]:
                    # the one context with small pizzas (photographed from afar)
                    w = rng.uniform(0.05, 0.1) * width
                    h = rng.uniform(0.05, 0.1) * height
                else:
                    # pizzas otherwise run extra large: most of the frame
                    w = rng.uniform(0.65, 0.9) * width
                    h = rng.uniform(0.65, 0.9) * height
            elif category in ("surfboard", "cup", "bottle"):
                w = rng.uniform(0.04, 0.12) * width
                h = rng.uniform(0.08, 0.2) * height
            else:
                w = rng.uniform(0.15, 0.45) * width
                h = rng.uniform(0.15, 0.45) * height
            x = rng.uniform(0, width - w)
            y = rng.uniform(0, height - h)
            add_instance(category, [x, y, w, h])

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    (OUT_DIR / "toy_dataset.jsonl").write_text("\n".join(dataset_lines) + "\n")
    (OUT_DIR / "toy_features.jsonl").write_text("\n".join(feature_lines) + "\n")
    print(
        f"wrote {OUT_DIR}/toy_dataset.jsonl "
        f"({len(plan)} images, {instance_counter} instances)"
    )


if __name__ == "__main__":
    main()
