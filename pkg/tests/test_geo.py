"""Geography metrics: distributions, language analysis, photographer rules,
tag ratios, and subregion separability."""

import numpy as np
import pytest

from datasetlens.errors import InsufficientData, MissingAnnotations, ParseError
from datasetlens.geo import (
    SUBREGIONS,
    classify_photographer,
    country_distribution,
    load_country_table,
    nonlocal_language_fraction,
    subregion_separability,
    tag_representation,
    visitor_dominated_countries,
)
from datasetlens.model import ImageRecord
from datasetlens.resources import default_country_table_path
from datasetlens.stats import wilson_lower
from conftest import build_dataset, make_feature_store


@pytest.fixture(scope="module")
def table():
    return load_country_table(default_country_table_path())


def _geo_images(spec):
    """spec: list of (image_id, country, tags, tag_languages)."""
    images = []
    for image_id, country, tags, langs in spec:
        images.append(
            {
                "image_id": image_id,
                "country": country,
                "tags": list(tags),
                "tag_languages": list(langs) if langs is not None else None,
            }
        )
    return images


def _with_dummy_instances(images):
    instances = [
        {"instance_id": f"d{i}", "image_id": img["image_id"], "category": "thing"}
        for i, img in enumerate(images)
    ]
    return build_dataset(images=images, instances=instances)


class TestCountryTable:
    def test_bundled_table_loads(self, table):
        assert "US" in table
        us = table.get("US")
        assert us.subregion == "Northern America"
        assert us.population > 300_000_000
        assert set(info.subregion for info in table.rows.values()) == set(SUBREGIONS)

    def test_bad_subregion_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text(
            "iso,name,population,official_languages,subregion\n"
            "XX,Nowhere,1000,xx,Atlantis\n"
        )
        with pytest.raises(ParseError, match="Atlantis"):
            load_country_table(path)

    def test_population_must_be_positive(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text(
            "iso,name,population,official_languages,subregion\n"
            "XX,Nowhere,0,xx,Caribbean\n"
        )
        with pytest.raises(ParseError, match="population"):
            load_country_table(path)


class TestCountryDistribution:
    def test_per_million_arithmetic(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text(
            "iso,name,population,official_languages,subregion\n"
            "AA,Millionia,1000000,aa,Caribbean\n"
        )
        table = load_country_table(path)
        images = _geo_images([(f"im{i}", "AA", [], None) for i in range(10)])
        ds = _with_dummy_instances(images)
        result = country_distribution(ds, table)
        assert result.per_country[0].per_million == pytest.approx(10.0)

    def test_per_capita_scales_linearly(self, table):
        images10 = _geo_images([(f"a{i}", "FR", [], None) for i in range(10)])
        images20 = _geo_images([(f"b{i}", "FR", [], None) for i in range(20)])
        r10 = country_distribution(_with_dummy_instances(images10), table)
        r20 = country_distribution(_with_dummy_instances(images20), table)
        assert r20.per_country[0].per_million == pytest.approx(
            2 * r10.per_country[0].per_million
        )

    def test_unmatched_codes_reported(self, table):
        images = _geo_images([("a", "ZZ", [], None), ("b", "US", [], None)])
        result = country_distribution(_with_dummy_instances(images), table)
        assert result.unmatched == {"ZZ": 1}

    def test_empty_geo_subset_raises(self, table):
        ds = _with_dummy_instances([{"image_id": "a"}])
        with pytest.raises(MissingAnnotations):
            country_distribution(ds, table)


class TestNonlocalLanguage:
    def test_all_official_language_bound_zero(self, table):
        images = _geo_images(
            [(f"im{i}", "FR", ["pont"], ["fr"]) for i in range(10)]
        )
        stats = nonlocal_language_fraction(_with_dummy_instances(images), table)
        assert stats[0].wilson_lower_bound == 0.0
        assert stats[0].n_nonlocal == 0

    def test_eight_of_ten_wilson_bound(self, table):
        spec = [(f"im{i}", "JP", ["x"], ["en"]) for i in range(8)]
        spec += [(f"im{i+8}", "JP", ["y"], ["ja"]) for i in range(2)]
        stats = nonlocal_language_fraction(_with_dummy_instances(_geo_images(spec)), table)
        assert stats[0].n_images == 10
        assert stats[0].n_nonlocal == 8
        assert stats[0].wilson_lower_bound == pytest.approx(0.4902, abs=1e-4)
        assert stats[0].wilson_lower_bound == pytest.approx(wilson_lower(8, 10))

    def test_bound_below_mle_and_monotone(self, table):
        base = [(f"a{i}", "DE", ["x"], ["en"]) for i in range(6)]
        base += [(f"b{i}", "DE", ["x"], ["de"]) for i in range(6)]
        stats = nonlocal_language_fraction(_with_dummy_instances(_geo_images(base)), table)
        s = stats[0]
        assert s.wilson_lower_bound <= s.n_nonlocal / s.n_images

    def test_undetermined_language_ignored(self, table):
        images = _geo_images(
            [("a", "FR", ["tag1", "tag2"], ["und", "en"]),
             ("b", "FR", ["tag"], ["und"])]  # no usable detection -> excluded
        )
        stats = nonlocal_language_fraction(
            _with_dummy_instances(images), table, min_images=1
        )
        assert stats[0].n_images == 1
        assert stats[0].n_nonlocal == 1

    def test_low_support_flagged(self, table):
        images = _geo_images([("a", "FR", ["x"], ["en"])])
        stats = nonlocal_language_fraction(_with_dummy_instances(images), table)
        assert stats[0].low_support

    def test_requires_tag_languages(self, table):
        ds = _with_dummy_instances(_geo_images([("a", "FR", ["x"], None)]))
        with pytest.raises(MissingAnnotations):
            nonlocal_language_fraction(ds, table)


class TestClassifyPhotographer:
    def _image(self, country, tags, langs):
        return ImageRecord(
            image_id="x", width=10, height=10, country=country,
            tags=tuple(tags), tag_languages=tuple(langs) if langs is not None else None,
        )

    def test_official_language_local(self, table):
        assert classify_photographer(self._image("FR", ["pont"], ["fr"]), table) == "local"

    def test_foreign_language_plus_travel_tag_tourist(self, table):
        img = self._image("JP", ["temple", "travel"], ["en", "en"])
        assert classify_photographer(img, table) == "tourist"

    def test_foreign_language_alone_tourist(self, table):
        assert classify_photographer(self._image("JP", ["x"], ["en"]), table) == "tourist"

    def test_tourist_tag_alone_tourist(self, table):
        img = self._image("JP", ["vacation"], None)
        assert classify_photographer(img, table) == "tourist"

    def test_no_signal_unknown(self, table):
        assert classify_photographer(self._image("JP", [], None), table) == "unknown"

    def test_official_language_beats_travel_tag(self, table):
        img = self._image("FR", ["travel"], ["fr"])
        assert classify_photographer(img, table) == "local"

    def test_multi_official_any_match_local(self, table):
        # Canada: en and fr are both official
        assert classify_photographer(self._image("CA", ["x"], ["fr"]), table) == "local"
        assert classify_photographer(self._image("CA", ["x"], ["en"]), table) == "local"

    def test_missing_country_rejected(self, table):
        with pytest.raises(ValueError):
            classify_photographer(self._image(None, [], None), table)

    def test_unlisted_country_unknown(self, table):
        assert classify_photographer(self._image("ZZ", ["x"], ["en"]), table) == "unknown"


class TestVisitorDominance:
    def _country_images(self, iso, local, tourist, unknown, official, prefix):
        spec = []
        for i in range(local):
            spec.append((f"{prefix}l{i}", iso, ["x"], [official]))
        for i in range(tourist):
            spec.append((f"{prefix}t{i}", iso, ["x"], ["en" if official != "en" else "fr"]))
        for i in range(unknown):
            spec.append((f"{prefix}u{i}", iso, [], None))
        return spec

    def test_strict_majority_rule(self, table):
        spec = self._country_images("JP", local=3, tourist=6, unknown=1, official="ja", prefix="jp")
        spec += self._country_images("FR", local=5, tourist=5, unknown=0, official="fr", prefix="fr")
        ds = _with_dummy_instances(_geo_images(spec))
        result = visitor_dominated_countries(ds, table, min_images=5)
        assert result.countries == ("JP",)  # 6 > 3; FR ties and is not dominated
        assert result.n_supported == 2
        assert result.fraction == pytest.approx(0.5)

    def test_support_counts_classified_only(self, table):
        # 4 classified + 6 unknown: below min_images=5? no -- 4 < 5 -> unsupported
        spec = self._country_images("JP", local=1, tourist=3, unknown=6, official="ja", prefix="jp")
        ds = _with_dummy_instances(_geo_images(spec))
        result = visitor_dominated_countries(ds, table, min_images=5)
        assert result.n_supported == 0
        assert result.countries == ()
        assert result.fraction == 0.0

    def test_breakdown_counts(self, table):
        spec = self._country_images("BR", local=2, tourist=3, unknown=1, official="pt", prefix="br")
        ds = _with_dummy_instances(_geo_images(spec))
        result = visitor_dominated_countries(ds, table, min_images=5)
        row = result.per_country[0]
        assert (row.n_local, row.n_tourist, row.n_unknown) == (2, 3, 1)
        assert row.visitor_dominated


class TestTagRepresentation:
    def test_hand_computed_ratios(self, table):
        # KI: 8 wildlife / 2 beach; rest of world: 2 wildlife / 18 beach
        spec = [(f"ki{i}", "KI", ["wildlife"], None) for i in range(8)]
        spec += [(f"kib{i}", "KI", ["beach"], None) for i in range(2)]
        spec += [(f"us{i}", "US", ["wildlife"], None) for i in range(2)]
        spec += [(f"usb{i}", "US", ["beach"], None) for i in range(18)]
        ds = _with_dummy_instances(_geo_images(spec))
        rows = tag_representation(ds, ["wildlife", "beach"], min_in_count=1)
        by_key = {(r.country, r.tag): r for r in rows}
        ki_wild = by_key[("KI", "wildlife")]
        # in-share 0.8 vs out-share 2/20=0.1 -> 8x
        assert ki_wild.ratio == pytest.approx(8.0)
        assert ki_wild.in_count == 8
        us_beach = by_key[("US", "beach")]
        assert us_beach.ratio == pytest.approx((18 / 20) / (2 / 10))

    def test_single_tag_vocabulary_all_ratios_one(self, table):
        spec = [(f"a{i}", "US", ["beach"], None) for i in range(25)]
        spec += [(f"b{i}", "FR", ["beach"], None) for i in range(5)]
        ds = _with_dummy_instances(_geo_images(spec))
        rows = tag_representation(ds, ["beach"], min_in_count=1)
        assert rows
        for row in rows:
            assert row.ratio == pytest.approx(1.0)

    def test_min_in_count_filters(self, table):
        spec = [("a", "US", ["beach"], None)]
        spec += [(f"b{i}", "FR", ["beach"], None) for i in range(30)]
        ds = _with_dummy_instances(_geo_images(spec))
        rows = tag_representation(ds, ["beach"], min_in_count=20)
        assert {r.country for r in rows} == {"FR"}

    def test_removing_a_country_recomputes_rest_of_world(self, table):
        spec = [(f"a{i}", "US", ["beach", "city"], None) for i in range(10)]
        spec += [(f"b{i}", "FR", ["beach"], None) for i in range(10)]
        spec += [(f"c{i}", "JP", ["city"], None) for i in range(10)]
        full = _with_dummy_instances(_geo_images(spec))
        rows_full = tag_representation(full, ["beach", "city"], min_in_count=1)
        without_jp = _with_dummy_instances(
            _geo_images([s for s in spec if s[1] != "JP"])
        )
        rows_wo = tag_representation(without_jp, ["beach", "city"], min_in_count=1)
        assert not any(r.country == "JP" for r in rows_wo)
        # US beach ratio changes exactly per the new rest-of-world denominator
        us_beach = next(r for r in rows_wo if (r.country, r.tag) == ("US", "beach"))
        assert us_beach.in_share == pytest.approx(0.5)
        assert us_beach.out_share == pytest.approx(1.0)  # FR only has beach now
        assert us_beach.ratio == pytest.approx(0.5)

    def test_vocabulary_restriction(self, table):
        spec = [("a", "US", ["beach", "zzz-not-in-vocab"], None)] * 1
        ds = _with_dummy_instances(_geo_images(spec))
        rows = tag_representation(ds, ["beach"], min_in_count=1)
        assert all(r.tag == "beach" for r in rows)


class TestSubregionSeparability:
    def _clustered_geo(self, table, n_regions=5, per_region=30, separated=True, seed=0):
        # pick one country per desired subregion
        chosen = {}
        for iso, info in sorted(table.rows.items()):
            if info.subregion not in chosen:
                chosen[info.subregion] = iso
            if len(chosen) == n_regions:
                break
        rng = np.random.default_rng(seed)
        images, vectors = [], {}
        for r, (subregion, iso) in enumerate(sorted(chosen.items())[:n_regions]):
            center = rng.normal(scale=6.0, size=32) if separated else np.zeros(32)
            for i in range(per_region):
                image_id = f"{iso}-{i}"
                images.append(
                    {"image_id": image_id, "country": iso, "tags": ["dish"]}
                )
                vectors[image_id] = center + rng.normal(size=32)
        ds = _with_dummy_instances(images)
        return ds, make_feature_store(image_features=vectors)

    def test_clustered_subregions_high_accuracy(self, table):
        ds, store = self._clustered_geo(table, separated=True, seed=1)
        result = subregion_separability(
            ds, "dish", table, features=store, seed=1, epochs=40
        )
        assert result.overall_accuracy >= 0.9
        assert len(result.subregions) == 5
        assert result.shuffled_mean_accuracy < 0.5

    def test_shuffled_near_chance(self, table):
        ds, store = self._clustered_geo(table, separated=False, seed=2)
        result = subregion_separability(
            ds, "dish", table, features=store, seed=2, epochs=20, trials=2
        )
        # no signal: both true and shuffled runs hover near chance (1/5)
        assert result.overall_accuracy <= 0.45

    def test_needs_two_supported_subregions(self, table):
        ds, store = self._clustered_geo(table, n_regions=1, seed=3)
        with pytest.raises(InsufficientData):
            subregion_separability(ds, "dish", table, features=store)

    def test_min_n_excludes_sparse_subregions(self, table):
        ds, store = self._clustered_geo(table, n_regions=3, per_region=30, seed=4)
        # add a sparse region with too few images
        sparse_iso = "KI"
        extra_images = []
        vectors = dict(store.image_features)
        for i in range(3):
            image_id = f"{sparse_iso}-{i}"
            extra_images.append({"image_id": image_id, "country": sparse_iso, "tags": ["dish"]})
            vectors[image_id] = np.zeros(32)
        all_images = [
            {"image_id": img.image_id, "country": img.country, "tags": list(img.tags)}
            for img in ds.images.values()
        ] + extra_images
        ds2 = _with_dummy_instances(all_images)
        store2 = make_feature_store(image_features=vectors)
        result = subregion_separability(ds2, "dish", table, features=store2, seed=0, epochs=10)
        assert table.get(sparse_iso).subregion not in result.n_per_subregion

    def test_unknown_tag_raises(self, table):
        ds, store = self._clustered_geo(table, seed=5)
        from datasetlens.errors import UnknownEntity
        with pytest.raises(UnknownEntity):
            subregion_separability(ds, "nonexistent-tag", table, features=store)
