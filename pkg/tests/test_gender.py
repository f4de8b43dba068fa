"""Gender metrics: contexts, counts, distances, thresholds, audit, separability."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datasetlens.errors import InsufficientData
from datasetlens.model import BBox, InstanceRecord
from datasetlens.gender import (
    appearance_separability,
    contextual_representation,
    fit_interaction_threshold,
    gender_inference_audit,
    gendered_distance_analysis,
    gendered_object_counts,
    identifiability,
    person_object_distance,
)
from conftest import build_dataset, make_feature_store


def _gendered_images(n_female, n_male, scene=None, prefix=""):
    images = []
    for i in range(n_female):
        images.append(
            {"image_id": f"{prefix}f{i}", "gender_label": "female", "scene_group": scene}
        )
    for i in range(n_male):
        images.append(
            {"image_id": f"{prefix}m{i}", "gender_label": "male", "scene_group": scene}
        )
    return images


class TestContextualRepresentation:
    def test_single_group_fraction_one(self):
        images = _gendered_images(10, 10, scene="shopping and dining")
        instances = [
            {"instance_id": f"i{k}", "image_id": img["image_id"], "category": "cup"}
            for k, img in enumerate(images)
        ]
        ds = build_dataset(images=images, instances=instances)
        result = contextual_representation(ds)
        cell = next(c for c in result.scene_cells if c.name == "shopping and dining")
        assert cell.fraction_female == 1.0
        assert cell.fraction_male == 1.0
        scene_sum = sum(c.fraction_female for c in result.scene_cells)
        assert scene_sum == pytest.approx(1.0)

    def test_identical_distributions_not_significant(self):
        images = []
        for g, pfx in (("female", "f"), ("male", "m")):
            for i in range(30):
                images.append(
                    {
                        "image_id": f"{pfx}{i}",
                        "gender_label": g,
                        "scene_group": "home or hotel" if i % 2 else "workplace",
                    }
                )
        instances = [
            {"instance_id": f"i{k}", "image_id": img["image_id"], "category": "cup"}
            for k, img in enumerate(images)
        ]
        ds = build_dataset(images=images, instances=instances)
        result = contextual_representation(ds)
        assert not any(c.significant for c in result.scene_cells)
        assert not any(c.significant for c in result.supercategory_cells)

    def test_skewed_scene_significant(self):
        images = []
        for i in range(60):
            images.append(
                {"image_id": f"f{i}", "gender_label": "female",
                 "scene_group": "shopping and dining" if i < 50 else "workplace"}
            )
            images.append(
                {"image_id": f"m{i}", "gender_label": "male",
                 "scene_group": "shopping and dining" if i < 10 else "workplace"}
            )
        instances = [
            {"instance_id": f"i{k}", "image_id": img["image_id"], "category": "cup"}
            for k, img in enumerate(images)
        ]
        ds = build_dataset(images=images, instances=instances)
        result = contextual_representation(ds)
        shopping = next(c for c in result.scene_cells if c.name == "shopping and dining")
        assert shopping.significant
        assert shopping.fraction_female > shopping.fraction_male

    def test_scene_fractions_sum_to_one_per_gender(self):
        rng = np.random.default_rng(0)
        groups = ["home or hotel", "workplace", "indoor cultural"]
        images = []
        for g, pfx in (("female", "f"), ("male", "m")):
            for i in range(25):
                images.append(
                    {"image_id": f"{pfx}{i}", "gender_label": g,
                     "scene_group": groups[int(rng.integers(0, 3))]}
                )
        instances = [
            {"instance_id": f"i{k}", "image_id": img["image_id"], "category": "cup"}
            for k, img in enumerate(images)
        ]
        ds = build_dataset(images=images, instances=instances)
        result = contextual_representation(ds)
        for key in ("fraction_female", "fraction_male"):
            assert sum(getattr(c, key) for c in result.scene_cells) == pytest.approx(1.0)

    def test_zero_image_gender_raises(self):
        images = _gendered_images(5, 0)
        instances = [
            {"instance_id": f"i{k}", "image_id": img["image_id"], "category": "cup"}
            for k, img in enumerate(images)
        ]
        ds = build_dataset(images=images, instances=instances)
        with pytest.raises(InsufficientData):
            contextual_representation(ds)


class TestGenderedObjectCounts:
    def test_balanced_category_not_significant(self):
        images = _gendered_images(50, 50)
        instances = [
            {"instance_id": f"i{k}", "image_id": img["image_id"], "category": "cup"}
            for k, img in enumerate(images)
        ]
        ds = build_dataset(images=images, instances=instances)
        rows = gendered_object_counts(ds)
        assert len(rows) == 1
        assert not rows[0].significant
        assert rows[0].effect_size == pytest.approx(0.0)

    def test_ninety_ten_significant_at_corrected_alpha(self):
        # doll in 90/100 female images vs 10/100 male images
        images = _gendered_images(100, 100)
        instances = []
        k = 0
        for i in range(90):
            instances.append(
                {"instance_id": f"d{k}", "image_id": f"f{i}", "category": "doll"}
            )
            k += 1
        for i in range(10):
            instances.append(
                {"instance_id": f"d{k}", "image_id": f"m{i}", "category": "doll"}
            )
            k += 1
        # a few neutral categories to give the correction something to correct
        for i in range(40):
            instances.append(
                {"instance_id": f"c{i}", "image_id": f"f{i}", "category": "chair"}
            )
            instances.append(
                {"instance_id": f"e{i}", "image_id": f"m{i}", "category": "chair"}
            )
        ds = build_dataset(images=images, instances=instances)
        rows = gendered_object_counts(ds)
        doll = next(r for r in rows if r.category == "doll")
        chair = next(r for r in rows if r.category == "chair")
        assert doll.significant
        assert doll.effect_size > 0  # female-overrepresented
        assert not chair.significant
        assert rows[0].category == "doll"  # sorted by effect size


class TestPersonObjectDistance:
    def test_concentric_zero(self):
        assert person_object_distance(BBox(0, 0, 10, 10), BBox(2.5, 2.5, 5, 5)) == 0.0

    def test_hand_value(self):
        # areas 100 and 100, centers 10 apart -> 10 / sqrt(10000) = 0.1
        a = BBox(0, 0, 10, 10)
        b = BBox(10, 0, 10, 10)
        assert person_object_distance(a, b) == pytest.approx(0.1)

    def test_translation_invariance(self):
        a = BBox(3, 4, 10, 12)
        b = BBox(30, 14, 7, 9)
        d0 = person_object_distance(a, b)
        a2 = BBox(a.x + 7, a.y + 3, a.w, a.h)
        b2 = BBox(b.x + 7, b.y + 3, b.w, b.h)
        assert person_object_distance(a2, b2) == pytest.approx(d0, abs=1e-12)

    def test_zero_area_rejected(self):
        with pytest.raises(ValueError):
            person_object_distance(BBox(0, 0, 0, 10), BBox(0, 0, 5, 5))

    @given(
        st.floats(0.1, 100), st.floats(0.1, 100), st.floats(1, 50), st.floats(1, 50),
        st.floats(0.1, 100), st.floats(0.1, 100), st.floats(1, 50), st.floats(1, 50),
        st.floats(0.1, 8),
    )
    @settings(max_examples=200)
    def test_scaling_by_s_divides_distance(self, ax, ay, aw, ah, bx, by, bw, bh, s):
        a, b = BBox(ax, ay, aw, ah), BBox(bx, by, bw, bh)
        scaled = person_object_distance(
            BBox(ax * s, ay * s, aw * s, ah * s), BBox(bx * s, by * s, bw * s, bh * s)
        )
        assert scaled * s == pytest.approx(person_object_distance(a, b), rel=1e-9)


class TestGenderedDistanceAnalysis:
    def _distance_dataset(self, female_offsets, male_offsets):
        """One person at origin-ish and one organ at a controlled offset."""
        images, instances = [], []
        for g, offsets in (("female", female_offsets), ("male", male_offsets)):
            for i, offset in enumerate(offsets):
                image_id = f"{g}{i}"
                images.append(
                    {"image_id": image_id, "width": 1000, "height": 1000,
                     "gender_label": g}
                )
                instances.append(
                    {"instance_id": f"p-{image_id}", "image_id": image_id,
                     "category": "person", "bbox": [10, 10, 20, 20],
                     "is_person": True}
                )
                instances.append(
                    {"instance_id": f"o-{image_id}", "image_id": image_id,
                     "category": "organ", "bbox": [10 + offset, 10, 20, 20]}
                )
        return build_dataset(images=images, instances=instances)

    def test_identical_distributions_not_significant(self):
        offsets = list(range(30, 70, 2))
        ds = self._distance_dataset(offsets, offsets)
        result = gendered_distance_analysis(ds, "organ")
        assert result.test.p_value > 0.9
        assert result.medians["female"] == pytest.approx(result.medians["male"])

    def test_constructed_female_farther_significant(self):
        female = [200 + 10 * i for i in range(15)]
        male = [20 + i for i in range(15)]
        ds = self._distance_dataset(female, male)
        result = gendered_distance_analysis(ds, "organ")
        assert result.test.p_value < 0.01
        assert result.medians["female"] > result.medians["male"]
        # rank-sum oracle: complete separation means U is extreme
        assert result.test.statistic in (0.0, 15.0 * 15.0)

    def test_min_n_enforced(self):
        ds = self._distance_dataset([30, 40], [30, 40, 50])
        with pytest.raises(InsufficientData, match="organ"):
            gendered_distance_analysis(ds, "organ")

    def test_nearest_instance_used(self):
        images = [
            {"image_id": f"f{i}", "width": 1000, "height": 1000, "gender_label": "female"}
            for i in range(10)
        ] + [
            {"image_id": f"m{i}", "width": 1000, "height": 1000, "gender_label": "male"}
            for i in range(10)
        ]
        instances = []
        for img in images:
            image_id = img["image_id"]
            instances.append(
                {"instance_id": f"p-{image_id}", "image_id": image_id,
                 "category": "person", "bbox": [0, 0, 10, 10], "is_person": True}
            )
            # near instance and far instance: distance must use the near one
            instances.append(
                {"instance_id": f"near-{image_id}", "image_id": image_id,
                 "category": "organ", "bbox": [12, 0, 10, 10]}
            )
            instances.append(
                {"instance_id": f"far-{image_id}", "image_id": image_id,
                 "category": "organ", "bbox": [500, 500, 10, 10]}
            )
        ds = build_dataset(images=images, instances=instances)
        result = gendered_distance_analysis(ds, "organ")
        near = person_object_distance(BBox(0, 0, 10, 10), BBox(12, 0, 10, 10))
        assert result.medians["female"] == pytest.approx(near)

    def test_exemplars_span_gradient(self):
        female = [30 + 10 * i for i in range(12)]
        male = [30 + 10 * i for i in range(12)]
        ds = self._distance_dataset(female, male)
        result = gendered_distance_analysis(ds, "organ", n_exemplars=5)
        ids = result.exemplars["female"]
        assert len(ids) == 5
        assert ids[0] == "female0"  # closest first
        assert ids[-1] == "female11"  # farthest last


def _threshold_oracle(distances, labels):
    """Exhaustive sweep over every candidate cut (including degenerate ones)."""
    d = np.asarray(distances, dtype=float)
    y = np.asarray(labels, dtype=bool)
    u = np.unique(d)
    candidates = [u[0]] + [(a + b) / 2 for a, b in zip(u, u[1:])] + [u[-1] + 1.0]
    best_t, best = None, -1.0
    for t in candidates:
        pred = d < t
        mpca = ((pred & y).sum() / y.sum() + (~pred & ~y).sum() / (~y).sum()) / 2
        if mpca > best + 1e-15:
            best_t, best = t, mpca
    return best_t, best


class TestInteractionThreshold:
    def test_perfect_separation(self):
        result = fit_interaction_threshold([1, 2, 3, 4, 5, 6], ["yes"] * 3 + ["no"] * 3)
        assert result.threshold == pytest.approx(3.5)
        assert result.mpca == 1.0
        assert (result.n_yes, result.n_no) == (3, 3)

    def test_interleaved_at_least_half(self):
        distances = list(range(1, 11))
        labels = ["yes", "no"] * 5
        result = fit_interaction_threshold(distances, labels)
        assert result.mpca >= 0.5

    def test_matches_exhaustive_oracle_on_random_inputs(self):
        rng = np.random.default_rng(12)
        for trial in range(40):
            n = int(rng.integers(2, 60))
            distances = rng.uniform(0, 10, size=n).round(2)
            labels = rng.random(n) < rng.uniform(0.2, 0.8)
            if labels.all() or not labels.any():
                continue
            result = fit_interaction_threshold(distances, labels)
            oracle_t, oracle_mpca = _threshold_oracle(distances, labels)
            assert result.mpca == pytest.approx(oracle_mpca), f"trial {trial}"
            assert result.threshold == pytest.approx(oracle_t), f"trial {trial}"

    def test_single_label_rejected(self):
        with pytest.raises(ValueError):
            fit_interaction_threshold([1, 2], ["yes", "yes"])

    def test_tie_broken_toward_smallest_threshold(self):
        # labels inverted vs distance: all-no and all-yes cuts tie at 0.5,
        # the midpoint scores 0 -> the smallest tying threshold wins
        result = fit_interaction_threshold([1.0, 2.0], ["no", "yes"])
        assert result.mpca == pytest.approx(0.5)
        assert result.threshold == pytest.approx(1.0)

    def test_cv_evaluation_exposed(self):
        rng = np.random.default_rng(3)
        d_yes = rng.normal(1, 0.5, size=40)
        d_no = rng.normal(4, 0.5, size=40)
        distances = np.concatenate([d_yes, d_no])
        labels = [True] * 40 + [False] * 40
        fit = fit_interaction_threshold(distances, labels)
        cv = fit_interaction_threshold(distances, labels, evaluation="cv")
        assert fit.threshold == cv.threshold
        assert 0.8 <= cv.mpca <= 1.0

    @given(
        st.lists(st.floats(0, 100, allow_nan=False), min_size=2, max_size=60),
        st.data(),
    )
    @settings(max_examples=150)
    def test_mpca_at_least_majority_baseline(self, distances, data):
        labels = data.draw(
            st.lists(st.booleans(), min_size=len(distances), max_size=len(distances))
        )
        if all(labels) or not any(labels):
            return
        result = fit_interaction_threshold(distances, labels)
        # the max-class-prior baseline (always predict the majority class)
        # scores exactly 0.5 mean per-class accuracy
        assert result.mpca >= 0.5


class TestIdentifiability:
    def _person(self, w, h, face):
        return InstanceRecord(
            instance_id="p", image_id="a", category="person",
            bbox=BBox(0, 0, w, h), is_person=True, face_detected=face,
        )

    def test_small_box_unidentifiable(self):
        assert identifiability(self._person(20, 20, True)) == "unidentifiable"

    def test_face_detected_identifiable(self):
        assert identifiability(self._person(50, 50, True)) == "identifiable"

    def test_no_face_unidentifiable(self):
        assert identifiability(self._person(50, 50, False)) == "unidentifiable"

    def test_missing_face_flag_treated_as_not_detected(self):
        assert identifiability(self._person(50, 50, None)) == "unidentifiable"

    def test_missing_bbox_rejected(self):
        person = InstanceRecord(
            instance_id="p", image_id="a", category="person", is_person=True
        )
        with pytest.raises(ValueError):
            identifiability(person)


class TestGenderAudit:
    def _audit_dataset(self, n_male, n_female, scenes=None):
        images, instances = [], []
        k = 0
        for g, n in (("male", n_male), ("female", n_female)):
            for i in range(n):
                image_id = f"{g}{i}"
                scene = scenes[k % len(scenes)] if scenes else None
                images.append(
                    {"image_id": image_id, "width": 500, "height": 500,
                     "gender_label": g, "scene_group": scene}
                )
                instances.append(
                    {"instance_id": f"p{k}", "image_id": image_id,
                     "category": "person", "bbox": [0, 0, 20, 20],
                     "is_person": True, "face_detected": False}
                )
                k += 1
        return build_dataset(images=images, instances=instances)

    def test_equal_counts_fraction_half(self):
        ds = self._audit_dataset(10, 10, scenes=["home or hotel"])
        result = gender_inference_audit(ds)
        assert result.fraction_male == 0.5
        assert result.scene_group_ratios == {"home or hotel": 1.0}

    def test_fraction_and_complement(self):
        ds = self._audit_dataset(77, 23)
        result = gender_inference_audit(ds)
        assert result.fraction_male == pytest.approx(0.77)
        assert result.n_male + result.n_female == result.n_unidentifiable

    def test_identifiable_person_disqualifies_image(self):
        ds = self._audit_dataset(5, 5)
        # add a large, face-detected person to one male image
        import dataclasses
        big = InstanceRecord(
            instance_id="big", image_id="male0", category="person",
            bbox=BBox(0, 0, 100, 100), is_person=True, face_detected=True,
        )
        instances = dict(ds.instances)
        instances["big"] = big
        ds = dataclasses.replace(ds, instances=instances)
        result = gender_inference_audit(ds)
        assert result.n_unidentifiable == 9

    def test_no_qualifying_images_raises(self):
        images = [{"image_id": "a", "gender_label": "male"},
                  {"image_id": "b", "gender_label": "female"}]
        instances = [
            {"instance_id": "p", "image_id": "a", "category": "person",
             "bbox": [0, 0, 90, 90], "is_person": True, "face_detected": True},
            {"instance_id": "q", "image_id": "b", "category": "person",
             "bbox": [0, 0, 90, 90], "is_person": True, "face_detected": True},
        ]
        ds = build_dataset(images=images, instances=instances)
        with pytest.raises(InsufficientData):
            gender_inference_audit(ds)


class TestAppearanceSeparability:
    def _separability_dataset(self, n_per, separated, seed=0, d=32):
        rng = np.random.default_rng(seed)
        images, instances, vectors = [], [], {}
        for g, pfx in (("female", "f"), ("male", "m")):
            center = rng.normal(scale=4.0, size=d) if separated else np.zeros(d)
            if separated and g == "male":
                center = -center
            for i in range(n_per):
                image_id = f"{pfx}{i}"
                images.append({"image_id": image_id, "gender_label": g})
                instances.append(
                    {"instance_id": f"u-{image_id}", "image_id": image_id,
                     "category": "uniform"}
                )
                vectors[image_id] = center + rng.normal(size=d)
        ds = build_dataset(images=images, instances=instances)
        store = make_feature_store(image_features=vectors)
        return ds, store

    def test_separated_distributions_detected(self):
        ds, store = self._separability_dataset(60, separated=True, seed=1)
        result = appearance_separability(ds, "uniform", features=store, seed=1, epochs=40)
        assert result.accuracy >= 0.9
        assert result.ratio >= 1.5
        assert result.n_per_gender == 60
        assert len(result.exemplars["female"]) == 5

    def test_independent_features_ratio_near_one(self):
        ratios = []
        for seed in range(5):
            ds, store = self._separability_dataset(40, separated=False, seed=seed)
            result = appearance_separability(
                ds, "uniform", features=store, seed=seed, epochs=30, trials=3
            )
            ratios.append(result.ratio)
        assert 0.8 <= float(np.mean(ratios)) <= 1.2

    def test_min_n_enforced(self):
        ds, store = self._separability_dataset(10, separated=True)
        with pytest.raises(InsufficientData):
            appearance_separability(ds, "uniform", features=store)

    def test_deterministic_given_seed(self):
        ds, store = self._separability_dataset(30, separated=True, seed=2)
        a = appearance_separability(ds, "uniform", features=store, seed=5, min_n=20, epochs=20)
        b = appearance_separability(ds, "uniform", features=store, seed=5, min_n=20, epochs=20)
        assert a == b
