"""Loading, gender derivation, validation, and feature attachment."""

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from datasetlens import (
    FeatureSchemaError,
    GenderLexicon,
    IntegrityError,
    ParseError,
    attach_features,
    derive_gender_from_captions,
    load_dataset,
    save_canonical,
    validate,
)
from conftest import write_jsonl


def _canonical_records():
    return [
        {"kind": "category", "category": "cat", "supercategory": "animal"},
        {"kind": "image", "image_id": "a", "width": 100, "height": 80,
         "captions": ["a man riding a horse"], "country": "US", "tags": ["city"]},
        {"kind": "image", "image_id": "b", "width": 200, "height": 100},
        {"kind": "instance", "instance_id": "i1", "image_id": "a",
         "category": "cat", "bbox": [0, 0, 10, 10]},
        {"kind": "instance", "instance_id": "i2", "image_id": "a",
         "category": "person", "bbox": [5, 5, 20, 20], "is_person": True},
        {"kind": "instance", "instance_id": "i3", "image_id": "b", "category": "cat"},
    ]


class TestCanonicalLoading:
    def test_counts_round_trip(self, tmp_path):
        path = write_jsonl(tmp_path / "d.jsonl", _canonical_records())
        ds = load_dataset(path)
        assert (ds.n_images, ds.n_instances) == (2, 3)
        assert ds.categories.supercategory("cat") == "animal"
        assert ds.categories.supercategory("person") == "person"
        assert ds.images["a"].gender_label == "male"

    def test_serialize_reload_equal_on_all_fields(self, tmp_path):
        path = write_jsonl(tmp_path / "d.jsonl", _canonical_records())
        ds1 = load_dataset(path)
        out = tmp_path / "round.jsonl"
        save_canonical(ds1, out)
        ds2 = load_dataset(out)
        assert ds1.images == ds2.images
        assert ds1.instances == ds2.instances
        assert ds1.categories.supercategories == ds2.categories.supercategories

    def test_load_deterministic_iteration(self, tmp_path):
        records = _canonical_records()
        records[1], records[2] = records[2], records[1]  # shuffle image order
        path = write_jsonl(tmp_path / "d.jsonl", records)
        ds1, ds2 = load_dataset(path), load_dataset(path)
        assert list(ds1.images) == sorted(ds1.images)
        assert list(ds1.images) == list(ds2.images)
        assert list(ds1.instances) == list(ds2.instances)

    def test_dangling_instance_reference(self, tmp_path):
        records = _canonical_records() + [
            {"kind": "instance", "instance_id": "ghost", "image_id": "nope",
             "category": "cat"}
        ]
        path = write_jsonl(tmp_path / "d.jsonl", records)
        with pytest.raises(IntegrityError, match="ghost"):
            load_dataset(path)

    def test_malformed_line_names_location(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('{"kind": "image", "image_id": "a", "width": 10, "height": 10}\n{oops\n')
        with pytest.raises(ParseError, match=r":2"):
            load_dataset(path)

    def test_unknown_kind_rejected(self, tmp_path):
        path = write_jsonl(tmp_path / "d.jsonl", [{"kind": "mystery"}])
        with pytest.raises(ParseError, match="mystery"):
            load_dataset(path)

    def test_non_positive_dimensions_rejected(self, tmp_path):
        path = write_jsonl(
            tmp_path / "d.jsonl",
            [{"kind": "image", "image_id": "a", "width": 0, "height": 5}],
        )
        with pytest.raises(ParseError, match="dimensions"):
            load_dataset(path)

    def test_conflicting_supercategories_rejected(self, tmp_path):
        path = write_jsonl(
            tmp_path / "d.jsonl",
            [
                {"kind": "category", "category": "cat", "supercategory": "animal"},
                {"kind": "category", "category": "cat", "supercategory": "pet"},
            ],
        )
        with pytest.raises(ParseError, match="cat"):
            load_dataset(path)

    def test_unknown_fields_preserved(self, tmp_path):
        records = [
            {"kind": "image", "image_id": "a", "width": 10, "height": 10,
             "flickr_url": "http://x", "license": 3},
        ]
        path = write_jsonl(tmp_path / "d.jsonl", records)
        ds = load_dataset(path)
        assert ds.images["a"].extras == {"flickr_url": "http://x", "license": 3}
        save_canonical(ds, tmp_path / "out.jsonl")
        assert load_dataset(tmp_path / "out.jsonl").images["a"].extras["license"] == 3

    def test_duplicate_ids_kept_first_and_reported(self, tmp_path):
        records = _canonical_records() + [
            {"kind": "image", "image_id": "a", "width": 999, "height": 999}
        ]
        ds = load_dataset(write_jsonl(tmp_path / "d.jsonl", records))
        assert ds.images["a"].width == 100
        kinds = [v.kind for v in validate(ds)]
        assert "duplicate-id" in kinds


class TestCocoAdapter:
    def _coco_payload(self):
        return {
            "images": [
                {"id": 1, "width": 100, "height": 80, "file_name": "1.jpg"},
                {"id": 2, "width": 200, "height": 100, "file_name": "2.jpg"},
            ],
            "annotations": [
                {"id": 10, "image_id": 1, "category_id": 7, "bbox": [0, 0, 10, 10],
                 "iscrowd": 0},
                {"id": 11, "image_id": 1, "category_id": 1, "bbox": [5, 5, 20, 20],
                 "iscrowd": 0},
                {"id": 12, "image_id": 2, "category_id": 7, "bbox": None},
            ],
            "categories": [
                {"id": 7, "name": "cat", "supercategory": "animal"},
                {"id": 1, "name": "person", "supercategory": "person"},
            ],
        }

    def _captions_payload(self):
        return {
            "annotations": [
                {"image_id": 1, "caption": "A man riding a horse."},
                {"image_id": 1, "caption": "Someone on a horse."},
            ]
        }

    def test_matches_hand_converted_canonical(self, tmp_path):
        coco_path = tmp_path / "instances_toy.json"
        coco_path.write_text(json.dumps(self._coco_payload()))
        captions_path = tmp_path / "captions_toy.json"
        captions_path.write_text(json.dumps(self._captions_payload()))
        ds_coco = load_dataset(coco_path, format="coco", captions_path=captions_path)

        # hand conversion of the same toy set, field by field
        hand = [
            {"kind": "category", "category": "cat", "supercategory": "animal"},
            {"kind": "image", "image_id": "1", "width": 100, "height": 80,
             "captions": ["A man riding a horse.", "Someone on a horse."],
             "file_name": "1.jpg"},
            {"kind": "image", "image_id": "2", "width": 200, "height": 100,
             "file_name": "2.jpg"},
            {"kind": "instance", "instance_id": "10", "image_id": "1",
             "category": "cat", "bbox": [0, 0, 10, 10], "iscrowd": 0},
            {"kind": "instance", "instance_id": "11", "image_id": "1",
             "category": "person", "bbox": [5, 5, 20, 20], "is_person": True,
             "iscrowd": 0},
            {"kind": "instance", "instance_id": "12", "image_id": "2",
             "category": "cat"},
        ]
        ds_hand = load_dataset(write_jsonl(tmp_path / "hand.jsonl", hand))
        assert ds_coco.images == ds_hand.images
        assert ds_coco.instances == ds_hand.instances
        assert (
            ds_coco.categories.supercategories == ds_hand.categories.supercategories
        )

    def test_captions_discovered_next_to_instances_file(self, tmp_path):
        (tmp_path / "instances_x.json").write_text(json.dumps(self._coco_payload()))
        (tmp_path / "captions_x.json").write_text(json.dumps(self._captions_payload()))
        ds = load_dataset(tmp_path / "instances_x.json", format="coco")
        assert ds.images["1"].gender_label == "male"

    def test_label_gender_map(self, tmp_path):
        payload = self._coco_payload()
        payload["categories"].append({"id": 9, "name": "Woman", "supercategory": "person"})
        payload["annotations"].append(
            {"id": 13, "image_id": 2, "category_id": 9, "bbox": [1, 1, 5, 5]}
        )
        path = tmp_path / "oi.json"
        path.write_text(json.dumps(payload))
        ds = load_dataset(
            path, format="coco", label_gender_map={"woman": "female", "man": "male"}
        )
        assert ds.images["2"].gender_label == "female"


class TestGenderDerivation:
    @pytest.mark.parametrize(
        "captions,expected",
        [
            (["a man riding a horse"], "male"),
            (["a man and a woman"], "unknown"),
            (["a dog on grass"], "unknown"),
            (["A WOMAN cooking"], "female"),
            (["the gentleman bows", "nobody here"], "male"),
            (["woman"], "female"),
            (["mango tree"], "unknown"),  # word boundary: no 'man' inside 'mango'
            ([], "unknown"),
        ],
    )
    def test_cases(self, captions, expected):
        assert derive_gender_from_captions(captions) == expected

    def test_overlapping_lexicon_rejected(self):
        with pytest.raises(ValueError):
            GenderLexicon(male=frozenset({"person"}), female=frozenset({"person"}))

    @given(
        st.lists(
            st.text(alphabet="abcdefghij manwoman ", min_size=0, max_size=40),
            max_size=4,
        )
    )
    def test_symmetric_under_lexicon_swap(self, captions):
        lex = GenderLexicon()
        swapped = GenderLexicon(male=lex.female, female=lex.male)
        flip = {"male": "female", "female": "male", "unknown": "unknown"}
        assert derive_gender_from_captions(captions, swapped) == flip[
            derive_gender_from_captions(captions, lex)
        ]


class TestValidate:
    def test_clean_toy_set(self, tmp_path):
        ds = load_dataset(write_jsonl(tmp_path / "d.jsonl", _canonical_records()))
        assert validate(ds) == []

    def test_zero_area_bbox(self, tmp_path):
        records = _canonical_records() + [
            {"kind": "instance", "instance_id": "z", "image_id": "a",
             "category": "cat", "bbox": [0, 0, 0, 10]},
        ]
        ds = load_dataset(write_jsonl(tmp_path / "d.jsonl", records))
        violations = validate(ds)
        assert [v.kind for v in violations] == ["zero-area"]
        assert violations[0].record_id == "z"

    def test_out_of_bounds_bbox(self, tmp_path):
        records = _canonical_records() + [
            {"kind": "instance", "instance_id": "w", "image_id": "a",
             "category": "cat", "bbox": [90, 0, 20, 10]},  # image a is 100 wide
        ]
        ds = load_dataset(write_jsonl(tmp_path / "d.jsonl", records))
        violations = validate(ds)
        assert [v.kind for v in violations] == ["bbox-out-of-bounds"]


def _feature_records(image_dim=4):
    return [
        {"kind": "header", "image_dim": image_dim, "manifest": {"image_embedder": "t"}},
        {"kind": "image_feature", "image_id": "a", "vector": [0.1] * image_dim,
         "scene_group": "home or hotel", "tag_languages": ["en"]},
        {"kind": "instance_feature", "instance_id": "i1", "vector": [0.5] * 64},
        {"kind": "instance_feature", "instance_id": "i2", "face_detected": True},
    ]


class TestAttachFeatures:
    def test_full_and_partial_coverage(self, tmp_path):
        ds = load_dataset(write_jsonl(tmp_path / "d.jsonl", _canonical_records()))
        fpath = write_jsonl(tmp_path / "f.jsonl", _feature_records())
        ds2 = attach_features(ds, fpath)
        cov = ds2.feature_coverage
        assert cov.image_fraction == pytest.approx(0.5)  # a of a,b
        assert cov.images_missing == ("b",)
        assert cov.instance_fraction == pytest.approx(1 / 3)
        assert ds2.images["a"].scene_group == "home or hotel"
        assert ds2.images["a"].tag_languages == ("en",)
        assert ds2.instances["i2"].face_detected is True
        assert ds2.features.image_dim == 4
        # original dataset untouched
        assert ds.images["a"].scene_group is None

    def test_instance_vector_length_enforced(self, tmp_path):
        ds = load_dataset(write_jsonl(tmp_path / "d.jsonl", _canonical_records()))
        records = _feature_records()
        records[2]["vector"] = [0.5] * 63
        fpath = write_jsonl(tmp_path / "f.jsonl", records)
        with pytest.raises(FeatureSchemaError, match="63"):
            attach_features(ds, fpath)

    def test_unknown_ids_reported_not_fatal(self, tmp_path):
        ds = load_dataset(write_jsonl(tmp_path / "d.jsonl", _canonical_records()))
        records = _feature_records() + [
            {"kind": "instance_feature", "instance_id": "stranger", "vector": [0.0] * 64}
        ]
        ds2 = attach_features(ds, write_jsonl(tmp_path / "f.jsonl", records))
        assert "stranger" in ds2.feature_coverage.unknown_ids

    def test_header_required_first(self, tmp_path):
        ds = load_dataset(write_jsonl(tmp_path / "d.jsonl", _canonical_records()))
        records = _feature_records()[1:]
        with pytest.raises(FeatureSchemaError, match="header"):
            attach_features(ds, write_jsonl(tmp_path / "f.jsonl", records))

    def test_image_vector_must_match_header_dim(self, tmp_path):
        ds = load_dataset(write_jsonl(tmp_path / "d.jsonl", _canonical_records()))
        records = _feature_records(image_dim=8)
        records[1]["vector"] = [0.1] * 4
        with pytest.raises(FeatureSchemaError, match="header declares 8"):
            attach_features(ds, write_jsonl(tmp_path / "f.jsonl", records))

    def test_unknown_scene_group_skipped_with_warning(self, tmp_path):
        ds = load_dataset(write_jsonl(tmp_path / "d.jsonl", _canonical_records()))
        records = _feature_records()
        records[1]["scene_group"] = "the moon"
        ds2 = attach_features(ds, write_jsonl(tmp_path / "f.jsonl", records))
        assert ds2.images["a"].scene_group is None
        assert any("the moon" in w for w in ds2.feature_coverage.warnings)
