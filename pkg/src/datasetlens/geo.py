"""Geography-based metrics: country distribution, non-local-language analysis,
photographer classification, tag representation ratios, and subregion
appearance separability."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import InsufficientData, MissingAnnotations, ParseError, UnknownEntity
from .features import FeatureStore
from .model import AnnotatedDataset, ImageRecord
from .stats import (
    DEFAULT_CONFIDENCE,
    DEFAULT_SVM_EPOCHS,
    DEFAULT_SVM_HOLDOUT,
    DEFAULT_SVM_LAMBDA,
    default_projection_dim,
    random_projection,
    rng_for,
    train_one_vs_rest,
    wilson_lower,
)

SUBREGIONS = (
    "Northern Africa",
    "Sub-Saharan Africa",
    "Caribbean",
    "Central America",
    "South America",
    "Northern America",
    "Central Asia",
    "Eastern Asia",
    "South-eastern Asia",
    "Southern Asia",
    "Western Asia",
    "Eastern Europe",
    "Northern Europe",
    "Southern Europe",
    "Western Europe",
    "Australia and New Zealand",
    "Pacific Islands",
)

UNDETERMINED_LANGUAGE = "und"
DEFAULT_TOURIST_LEXICON = frozenset(
    {"travel", "vacation", "holiday", "trip", "tourism", "tourist", "sightseeing"}
)
DEFAULT_GEO_MIN_IMAGES = 10
DEFAULT_TAG_MIN_COUNT = 20
DEFAULT_SUBREGION_MIN_N = 10
DEFAULT_SUBREGION_CAP = 200
DEFAULT_SUBREGION_TRIALS = 3


@dataclass(frozen=True)
class CountryInfo:
    iso: str
    name: str
    population: int
    official_languages: tuple[str, ...]
    subregion: str


@dataclass(frozen=True)
class CountryTable:
    rows: Mapping[str, CountryInfo]

    def __contains__(self, iso: str) -> bool:
        return iso in self.rows

    def get(self, iso: str) -> CountryInfo | None:
        return self.rows.get(iso)

    def subregion(self, iso: str) -> str | None:
        info = self.rows.get(iso)
        return info.subregion if info else None


def load_country_table(path: str | Path) -> CountryTable:
    """CSV with header iso,name,population,official_languages,subregion;
    languages are ;-separated codes, subregions must come from the fixed
    17-name list."""
    path = Path(path)
    rows: dict[str, CountryInfo] = {}
    with path.open(encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"iso", "name", "population", "official_languages", "subregion"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ParseError(f"{path}: header must contain {sorted(required)}")
        for lineno, record in enumerate(reader, start=2):
            iso = record["iso"].strip().upper()
            try:
                population = int(record["population"])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: population must be an integer") from None
            if population <= 0:
                raise ParseError(f"{path}:{lineno}: population must be positive")
            languages = tuple(
                code.strip().lower()
                for code in record["official_languages"].split(";")
                if code.strip()
            )
            if not languages:
                raise ParseError(f"{path}:{lineno}: need at least one official language")
            subregion = record["subregion"].strip()
            if subregion not in SUBREGIONS:
                raise ParseError(
                    f"{path}:{lineno}: unknown subregion {subregion!r}"
                )
            rows[iso] = CountryInfo(
                iso=iso,
                name=record["name"].strip(),
                population=population,
                official_languages=languages,
                subregion=subregion,
            )
    return CountryTable(rows=rows)


# -- country distribution --------------------------------------------------------

@dataclass(frozen=True)
class CountryCount:
    iso: str
    name: str
    count: int
    per_million: float
    subregion: str


@dataclass(frozen=True)
class CountryDistribution:
    per_country: tuple[CountryCount, ...]
    unmatched: Mapping[str, int]
    n_geotagged: int


def country_distribution(ds: AnnotatedDataset, table: CountryTable) -> CountryDistribution:
    """Raw image counts and images-per-million-inhabitants per country."""
    counts: dict[str, int] = {}
    for img in ds.images.values():
        if img.country:
            code = img.country.upper()
            counts[code] = counts.get(code, 0) + 1
    if not counts:
        raise MissingAnnotations("country codes", "no image carries a country code")

    matched = []
    unmatched: dict[str, int] = {}
    for iso in sorted(counts):
        info = table.get(iso)
        if info is None:
            unmatched[iso] = counts[iso]
            continue
        matched.append(
            CountryCount(
                iso=iso,
                name=info.name,
                count=counts[iso],
                per_million=counts[iso] / (info.population / 1_000_000),
                subregion=info.subregion,
            )
        )
    matched.sort(key=lambda c: (-c.count, c.iso))
    return CountryDistribution(
        per_country=tuple(matched),
        unmatched=unmatched,
        n_geotagged=sum(counts.values()),
    )


# -- language analysis -------------------------------------------------------------

def _detected_languages(img: ImageRecord) -> set[str]:
    if img.tag_languages is None:
        return set()
    return {c.lower() for c in img.tag_languages if c and c.lower() != UNDETERMINED_LANGUAGE}


@dataclass(frozen=True)
class CountryLanguageStat:
    country: str
    n_images: int
    n_nonlocal: int
    wilson_lower_bound: float
    low_support: bool


def nonlocal_language_fraction(
    ds: AnnotatedDataset,
    table: CountryTable,
    confidence: float = DEFAULT_CONFIDENCE,
    min_images: int = DEFAULT_GEO_MIN_IMAGES,
) -> list[CountryLanguageStat]:
    """Per country: Wilson lower bound on the share of images whose detected
    tag languages include none of the country's official languages.

    Only images with at least one determined tag language count; the lower
    bound keeps sparsely imaged countries from looking spuriously non-local.
    """
    if not any(img.tag_languages is not None for img in ds.images.values()):
        raise MissingAnnotations("tag languages", "no image has detected tag languages")

    per_country: dict[str, list[bool]] = {}
    for img in ds.images.values():
        if not img.country:
            continue
        info = table.get(img.country.upper())
        if info is None:
            continue
        detected = _detected_languages(img)
        if not detected:
            continue
        nonlocal_flag = not (detected & set(info.official_languages))
        per_country.setdefault(info.iso, []).append(nonlocal_flag)

    stats = []
    for iso in sorted(per_country):
        flags = per_country[iso]
        n, k = len(flags), sum(flags)
        stats.append(
            CountryLanguageStat(
                country=iso,
                n_images=n,
                n_nonlocal=k,
                wilson_lower_bound=wilson_lower(k, n, confidence),
                low_support=n < min_images,
            )
        )
    stats.sort(key=lambda s: (-s.wilson_lower_bound, s.country))
    return stats


# -- photographer classification ----------------------------------------------------

def classify_photographer(
    image: ImageRecord,
    table: CountryTable,
    tourist_lexicon: frozenset[str] = DEFAULT_TOURIST_LEXICON,
) -> str:
    """Rule table (first match wins):

    1. any detected tag language official for the image's country -> 'local'
    2. languages detected but none official, OR a tourist-lexicon tag present
       -> 'tourist'
    3. otherwise (no usable signal, or country not in the table) -> 'unknown'
    """
    if not image.country:
        raise ValueError(f"image {image.image_id!r} has no country code")
    info = table.get(image.country.upper())
    if info is None:
        return "unknown"
    detected = _detected_languages(image)
    if detected & set(info.official_languages):
        return "local"
    has_tourist_tag = any(t.lower() in tourist_lexicon for t in image.tags)
    if detected or has_tourist_tag:
        return "tourist"
    return "unknown"


@dataclass(frozen=True)
class PhotographerBreakdown:
    iso: str
    n_local: int
    n_tourist: int
    n_unknown: int
    visitor_dominated: bool
    meets_support: bool


@dataclass(frozen=True)
class VisitorDominance:
    countries: tuple[str, ...]
    fraction: float
    n_supported: int
    per_country: tuple[PhotographerBreakdown, ...]


def visitor_dominated_countries(
    ds: AnnotatedDataset,
    table: CountryTable,
    min_images: int = DEFAULT_GEO_MIN_IMAGES,
    tourist_lexicon: frozenset[str] = DEFAULT_TOURIST_LEXICON,
) -> VisitorDominance:
    """Countries where tourist-classified images strictly outnumber local ones.

    Support requires at least ``min_images`` classified (local or tourist)
    images; the reported fraction is over countries meeting support.
    """
    tallies: dict[str, list[int]] = {}
    for img in ds.images.values():
        if not img.country:
            continue
        iso = img.country.upper()
        if iso not in table:
            continue
        label = classify_photographer(img, table, tourist_lexicon)
        counts = tallies.setdefault(iso, [0, 0, 0])
        counts[("local", "tourist", "unknown").index(label)] += 1
    per_country = []
    dominated = []
    n_supported = 0
    for iso in sorted(tallies):
        n_local, n_tourist, n_unknown = tallies[iso]
        meets = (n_local + n_tourist) >= min_images
        is_dominated = meets and n_tourist > n_local
        if meets:
            n_supported += 1
        if is_dominated:
            dominated.append(iso)
        per_country.append(
            PhotographerBreakdown(
                iso=iso,
                n_local=n_local,
                n_tourist=n_tourist,
                n_unknown=n_unknown,
                visitor_dominated=is_dominated,
                meets_support=meets,
            )
        )
    fraction = len(dominated) / n_supported if n_supported else 0.0
    return VisitorDominance(
        countries=tuple(dominated),
        fraction=fraction,
        n_supported=n_supported,
        per_country=tuple(per_country),
    )


# -- tag representation ---------------------------------------------------------------

@dataclass(frozen=True)
class TagRepresentation:
    country: str
    tag: str
    ratio: float
    in_count: int
    out_count: int
    in_share: float
    out_share: float


def tag_representation(
    ds: AnnotatedDataset,
    vocabulary: Sequence[str],
    min_in_count: int = DEFAULT_TAG_MIN_COUNT,
) -> list[TagRepresentation]:
    """Per (country, tag): the tag's share of the country's vocabulary-tag
    occurrences over its share in all other countries, ranked by ratio.

    Rows need ``min_in_count`` in-country occurrences and a nonzero
    rest-of-world count (the ratio is undefined otherwise).
    """
    if not vocabulary:
        raise ValueError("vocabulary must be nonempty")
    vocab = {t.lower() for t in vocabulary}
    if not any(img.tags for img in ds.images.values()):
        raise MissingAnnotations("tags", "no image carries tags")

    tag_counts: dict[str, dict[str, int]] = {}
    totals: dict[str, int] = {}
    for img in ds.images.values():
        if not img.country:
            continue
        iso = img.country.upper()
        for tag in img.tags:
            tag = tag.lower()
            if tag not in vocab:
                continue
            country_tags = tag_counts.setdefault(iso, {})
            country_tags[tag] = country_tags.get(tag, 0) + 1
            totals[iso] = totals.get(iso, 0) + 1

    grand_total = sum(totals.values())
    global_tag_totals: dict[str, int] = {}
    for counts in tag_counts.values():
        for tag, n in counts.items():
            global_tag_totals[tag] = global_tag_totals.get(tag, 0) + n

    rows = []
    for iso in sorted(tag_counts):
        total_in = totals[iso]
        total_out = grand_total - total_in
        if total_in == 0 or total_out == 0:
            continue
        for tag in sorted(tag_counts[iso]):
            in_count = tag_counts[iso][tag]
            out_count = global_tag_totals[tag] - in_count
            if in_count < min_in_count or out_count <= 0:
                continue
            in_share = in_count / total_in
            out_share = out_count / total_out
            rows.append(
                TagRepresentation(
                    country=iso,
                    tag=tag,
                    ratio=in_share / out_share,
                    in_count=in_count,
                    out_count=out_count,
                    in_share=in_share,
                    out_share=out_share,
                )
            )
    rows.sort(key=lambda r: (-r.ratio, r.country, r.tag))
    return rows


# -- subregion appearance separability ---------------------------------------------------

@dataclass(frozen=True)
class SubregionSeparability:
    tag: str
    subregions: tuple[str, ...]
    overall_accuracy: float
    per_subregion_accuracy: Mapping[str, float]
    shuffled_mean_accuracy: float
    ratio: float
    confusion: Mapping[str, Mapping[str, int]]
    exemplars: Mapping[str, tuple[str, ...]]
    n_per_subregion: Mapping[str, int]
    projection_dim: int


def subregion_separability(
    ds: AnnotatedDataset,
    tag: str,
    table: CountryTable,
    features: FeatureStore | None = None,
    seed: int = 0,
    min_n: int = DEFAULT_SUBREGION_MIN_N,
    sample_cap: int = DEFAULT_SUBREGION_CAP,
    lam: float = DEFAULT_SVM_LAMBDA,
    epochs: int = DEFAULT_SVM_EPOCHS,
    holdout: float = DEFAULT_SVM_HOLDOUT,
    trials: int = DEFAULT_SUBREGION_TRIALS,
    n_exemplars: int = 5,
) -> SubregionSeparability:
    """One-vs-rest linear classification of a tag's images by UN subregion over
    sqrt(n)-projected features, with a shuffled-label baseline."""
    store = features or ds.features
    if store is None or not store.image_features:
        raise MissingAnnotations("image embeddings", "no image features attached")
    wanted = tag.lower()

    by_subregion: dict[str, list[str]] = {}
    for image_id, img in ds.images.items():
        if not img.country or image_id not in store.image_features:
            continue
        if wanted not in (t.lower() for t in img.tags):
            continue
        subregion = table.subregion(img.country.upper())
        if subregion is None:
            continue
        by_subregion.setdefault(subregion, []).append(image_id)

    if not by_subregion:
        raise UnknownEntity("tag", tag)
    rng = rng_for(seed, "subregion", wanted)
    sampled: list[tuple[str, str]] = []
    kept: dict[str, int] = {}
    for subregion in sorted(by_subregion):
        ids = sorted(by_subregion[subregion])
        if len(ids) < min_n:
            continue
        if len(ids) > sample_cap:
            chosen = rng.choice(len(ids), size=sample_cap, replace=False)
            ids = [ids[i] for i in sorted(chosen)]
        kept[subregion] = len(ids)
        sampled.extend((i, subregion) for i in ids)
    if len(kept) < 2:
        raise InsufficientData(
            f"tag {tag!r}: need >=2 subregions with {min_n} embedded images, "
            f"have {len(kept)}"
        )

    X = np.stack([store.image_features[i] for i, _ in sampled])
    y = np.asarray([s for _, s in sampled])
    out_dim = min(default_projection_dim(len(sampled)), X.shape[1])
    Xp = random_projection(X, out_dim=out_dim, seed=seed)

    result = train_one_vs_rest(Xp, y, lam=lam, epochs=epochs, seed=seed, holdout=holdout)
    shuffled_accs = []
    for trial in range(trials):
        trial_rng = rng_for(seed, "subregion-shuffle", wanted, trial)
        permuted = y[trial_rng.permutation(y.size)]
        shuffled = train_one_vs_rest(
            Xp, permuted, lam=lam, epochs=epochs,
            seed=int(trial_rng.integers(0, 2**31 - 1)), holdout=holdout,
        )
        shuffled_accs.append(shuffled.overall_accuracy)
    shuffled_mean = float(np.mean(shuffled_accs))

    exemplars: dict[str, tuple[str, ...]] = {}
    classes = list(result.classes)
    actual = [sampled[i][1] for i in result.test_indices]
    for ci, subregion in enumerate(classes):
        scored = []
        for row, test_idx in enumerate(result.test_indices):
            if actual[row] != subregion or result.predictions[row] != subregion:
                continue
            scored.append((float(result.test_margins[row, ci]), sampled[test_idx][0]))
        scored.sort(key=lambda t: (-t[0], t[1]))
        exemplars[subregion] = tuple(image_id for _, image_id in scored[:n_exemplars])

    return SubregionSeparability(
        tag=wanted,
        subregions=result.classes,
        overall_accuracy=result.overall_accuracy,
        per_subregion_accuracy=dict(result.per_class_accuracy),
        shuffled_mean_accuracy=shuffled_mean,
        ratio=(
            float("inf") if shuffled_mean == 0
            else result.overall_accuracy / shuffled_mean
        ),
        confusion=result.confusion,
        exemplars=exemplars,
        n_per_subregion=kept,
        projection_dim=out_dim,
    )
