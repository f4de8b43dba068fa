"""Object-based metrics: counts, duplicate annotations, scale, co-occurrence,
scene diversity, and appearance diversity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import median
from typing import Mapping, Sequence

import numpy as np

from .errors import InsufficientData, MissingAnnotations
from .features import FeatureStore
from .model import AnnotatedDataset, BBox
from .stats import QuantileBinning, entropy, fit_quantile_bins, rng_for

DEFAULT_IOU_THRESHOLD = 0.95
DEFAULT_DUPLICATE_FRACTION = 0.6
DEFAULT_MIN_COOCCURRENCES = 5
DEFAULT_MIN_CATEGORY_INSTANCES = 20
DEFAULT_DIVERSITY_SAMPLE_CAP = 1000
SKEW_FACTOR = 2.0  # a bin share above SKEW_FACTOR / k flags the category


# -- counts ---------------------------------------------------------------------

@dataclass(frozen=True)
class CategoryCount:
    category: str
    supercategory: str
    count: int
    supercategory_mean: float
    vs_supercategory_mean: float
    above_supercategory_mean: bool
    above_dataset_median: bool


@dataclass(frozen=True)
class CategoryCountsResult:
    per_category: tuple[CategoryCount, ...]
    supercategory_totals: Mapping[str, int]
    dataset_median: float
    warnings: tuple[str, ...]


def category_counts(ds: AnnotatedDataset) -> CategoryCountsResult:
    """Instance counts per category, flagged against the mean of the
    category's supercategory and against the dataset-wide median."""
    counts: dict[str, int] = {}
    for inst in ds.instances.values():
        counts[inst.category] = counts.get(inst.category, 0) + 1
    if not counts:
        return CategoryCountsResult((), {}, 0.0, ("dataset has no instances",))

    by_super: dict[str, list[int]] = {}
    for cat, n in counts.items():
        by_super.setdefault(ds.categories.supercategory(cat), []).append(n)
    super_means = {s: sum(v) / len(v) for s, v in by_super.items()}
    super_totals = {s: sum(v) for s, v in by_super.items()}
    med = float(median(counts.values()))

    warnings = [
        f"supercategory {s!r} has no instances"
        for s in ds.categories.supercategory_names
        if s not in by_super
    ]
    rows = []
    for cat in sorted(counts):
        sup = ds.categories.supercategory(cat)
        mean = super_means[sup]
        rows.append(
            CategoryCount(
                category=cat,
                supercategory=sup,
                count=counts[cat],
                supercategory_mean=mean,
                vs_supercategory_mean=counts[cat] / mean if mean else math.inf,
                above_supercategory_mean=counts[cat] > mean,
                above_dataset_median=counts[cat] > med,
            )
        )
    return CategoryCountsResult(
        per_category=tuple(rows),
        supercategory_totals=dict(sorted(super_totals.items())),
        dataset_median=med,
        warnings=tuple(warnings),
    )


# -- IOU and duplicate-annotation detection --------------------------------------

def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0 for disjoint, 1 for identical."""
    ix = max(0.0, min(a.x + a.w, b.x + b.w) - max(a.x, b.x))
    iy = max(0.0, min(a.y + a.h, b.y + b.h) - max(a.y, b.y))
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class DuplicatePair:
    category_a: str
    category_b: str
    cooccurrence_count: int
    high_overlap_count: int
    high_overlap_fraction: float


def _greedy_matches(
    xs: Sequence, ys: Sequence
) -> list[tuple[int, int, float]]:
    """One-to-one matching by descending IOU; deterministic tie-break on index."""
    scored = []
    for i, a in enumerate(xs):
        for j, b in enumerate(ys):
            scored.append((iou(a.bbox, b.bbox), i, j))
    scored.sort(key=lambda t: (-t[0], t[1], t[2]))
    used_x: set[int] = set()
    used_y: set[int] = set()
    out = []
    for score, i, j in scored:
        if i in used_x or j in used_y:
            continue
        used_x.add(i)
        used_y.add(j)
        out.append((i, j, score))
    return out


def detect_duplicate_pairs(
    ds: AnnotatedDataset,
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
    fraction_threshold: float = DEFAULT_DUPLICATE_FRACTION,
    min_cooccurrences: int = DEFAULT_MIN_COOCCURRENCES,
    mode: str = "image",
) -> list[DuplicatePair]:
    """Flag category pairs that look like two names for the same objects.

    In the default 'image' mode a pair is flagged when, among images containing
    both categories, the fraction of images with a best-match instance pair of
    IOU > ``iou_threshold`` exceeds ``fraction_threshold``. Mode 'pair' counts
    greedily matched instance pairs instead of images. Pairs with fewer than
    ``min_cooccurrences`` units of support are never flagged.
    """
    if mode not in ("image", "pair"):
        raise ValueError(f"unknown mode {mode!r}")
    images_cooccur: dict[tuple[str, str], int] = {}
    images_matched: dict[tuple[str, str], int] = {}
    pairs_total: dict[tuple[str, str], int] = {}
    pairs_high: dict[tuple[str, str], int] = {}

    for image_id in ds.images:
        boxed: dict[str, list] = {}
        for inst in ds.instances_by_image.get(image_id, ()):
            if inst.bbox is not None:
                boxed.setdefault(inst.category, []).append(inst)
        cats = sorted(boxed)
        for i, ca in enumerate(cats):
            for cb in cats[i + 1:]:
                key = (ca, cb)
                matches = _greedy_matches(boxed[ca], boxed[cb])
                images_cooccur[key] = images_cooccur.get(key, 0) + 1
                high = sum(1 for _, _, s in matches if s > iou_threshold)
                if high:
                    images_matched[key] = images_matched.get(key, 0) + 1
                pairs_total[key] = pairs_total.get(key, 0) + len(matches)
                pairs_high[key] = pairs_high.get(key, 0) + high

    flagged = []
    for key, n_images in images_cooccur.items():
        if mode == "image":
            support, high = n_images, images_matched.get(key, 0)
        else:
            support, high = pairs_total[key], pairs_high.get(key, 0)
        if support < min_cooccurrences or support == 0:
            continue
        fraction = high / support
        if fraction > fraction_threshold:
            flagged.append(
                DuplicatePair(
                    category_a=key[0],
                    category_b=key[1],
                    cooccurrence_count=support,
                    high_overlap_count=high,
                    high_overlap_fraction=fraction,
                )
            )
    flagged.sort(key=lambda p: (-p.high_overlap_fraction, p.category_a, p.category_b))
    return flagged


# -- object scale -----------------------------------------------------------------

@dataclass(frozen=True)
class ScaleDistribution:
    category: str
    bin_shares: tuple[float, ...]
    n: int
    skewed: bool
    low_support: bool


@dataclass(frozen=True)
class ScaleReport:
    binning: QuantileBinning
    per_category: tuple[ScaleDistribution, ...]
    warnings: tuple[str, ...]


def area_fraction(bbox: BBox, width: int, height: int) -> float:
    """Fraction of the image covered by the (clipped) box."""
    clipped = bbox.clipped(width, height)
    return clipped.area / (width * height)


def scale_distribution(
    ds: AnnotatedDataset,
    k: int = 5,
    min_instances: int = DEFAULT_MIN_CATEGORY_INSTANCES,
) -> ScaleReport:
    """Quantize per-instance area fractions into k dataset-wide equal-population
    bins and report each category's share per bin.

    A category is flagged 'skewed' when some bin holds more than twice the
    uniform share; categories with fewer than ``min_instances`` boxed instances
    carry ``low_support`` and should be left out of rankings.
    """
    fractions: list[float] = []
    per_cat_fractions: dict[str, list[float]] = {}
    for inst in ds.instances.values():
        if inst.bbox is None:
            continue
        img = ds.images[inst.image_id]
        f = area_fraction(inst.bbox, img.width, img.height)
        fractions.append(f)
        per_cat_fractions.setdefault(inst.category, []).append(f)
    if not fractions:
        raise MissingAnnotations("bounding boxes", "no instance has a bounding box")

    binning = fit_quantile_bins(fractions, k=k)
    warnings = [
        f"category {c!r} has no boxed instances"
        for c in ds.categories_present
        if c not in per_cat_fractions
    ]
    if binning.degenerate:
        warnings.append("degenerate bin edges: fewer distinct area fractions than bins")

    rows = []
    for cat in sorted(per_cat_fractions):
        values = per_cat_fractions[cat]
        counts = binning.counts(values)
        n = len(values)
        shares = tuple(c / n for c in counts)
        rows.append(
            ScaleDistribution(
                category=cat,
                bin_shares=shares,
                n=n,
                skewed=any(s > SKEW_FACTOR / k for s in shares),
                low_support=n < min_instances,
            )
        )
    return ScaleReport(binning=binning, per_category=tuple(rows), warnings=tuple(warnings))


# -- co-occurrence ----------------------------------------------------------------

@dataclass(frozen=True)
class CooccurrenceMatrix:
    """Image-level presence counts and joint counts.

    Joint counts are symmetric; conditionals are derived exactly as
    P(A|B) = N(A and B) / N(B).
    """

    category_counts: Mapping[str, int]
    supercategory_counts: Mapping[str, int]
    scene_counts: Mapping[str, int]
    joint_categories: Mapping[tuple[str, str], int]
    joint_category_supercategory: Mapping[tuple[str, str], int]
    joint_category_scene: Mapping[tuple[str, str], int]
    n_images: int

    def n(self, kind: str, name: str) -> int:
        table = {
            "category": self.category_counts,
            "supercategory": self.supercategory_counts,
            "scene_group": self.scene_counts,
        }[kind]
        return table.get(name, 0)

    def joint(self, category: str, kind: str, name: str) -> int:
        if kind == "category":
            key = tuple(sorted((category, name)))
            return self.joint_categories.get(key, 0)
        if kind == "supercategory":
            return self.joint_category_supercategory.get((category, name), 0)
        if kind == "scene_group":
            return self.joint_category_scene.get((category, name), 0)
        raise ValueError(f"unknown kind {kind!r}")

    def p_given(self, category: str, kind: str, name: str) -> float:
        """P(image contains `category` | image has `name` of `kind`)."""
        denom = self.n(kind, name)
        if denom == 0:
            raise InsufficientData(f"no image has {kind} {name!r}")
        return self.joint(category, kind, name) / denom


def cooccurrence(ds: AnnotatedDataset) -> CooccurrenceMatrix:
    cat_counts: dict[str, int] = {}
    sup_counts: dict[str, int] = {}
    scene_counts: dict[str, int] = {}
    joint_cc: dict[tuple[str, str], int] = {}
    joint_cs: dict[tuple[str, str], int] = {}
    joint_cg: dict[tuple[str, str], int] = {}

    for image_id, img in ds.images.items():
        cats = sorted({i.category for i in ds.instances_by_image.get(image_id, ())})
        sups = sorted({ds.categories.supercategory(c) for c in cats})
        for c in cats:
            cat_counts[c] = cat_counts.get(c, 0) + 1
        for s in sups:
            sup_counts[s] = sup_counts.get(s, 0) + 1
        if img.scene_group is not None:
            scene_counts[img.scene_group] = scene_counts.get(img.scene_group, 0) + 1
        for i, a in enumerate(cats):
            for b in cats[i + 1:]:
                joint_cc[(a, b)] = joint_cc.get((a, b), 0) + 1
        for c in cats:
            for s in sups:
                joint_cs[(c, s)] = joint_cs.get((c, s), 0) + 1
            if img.scene_group is not None:
                joint_cg[(c, img.scene_group)] = joint_cg.get((c, img.scene_group), 0) + 1

    return CooccurrenceMatrix(
        category_counts=cat_counts,
        supercategory_counts=sup_counts,
        scene_counts=scene_counts,
        joint_categories=joint_cc,
        joint_category_supercategory=joint_cs,
        joint_category_scene=joint_cg,
        n_images=len(ds.images),
    )


# -- scene diversity ----------------------------------------------------------------

@dataclass(frozen=True)
class SceneDiversity:
    category: str
    entropy_bits: float
    normalized: float
    n_images: int
    n_groups: int
    low_support: bool


def scene_diversity(
    ds: AnnotatedDataset, min_images: int = DEFAULT_MIN_CATEGORY_INSTANCES
) -> list[SceneDiversity]:
    """Entropy of scene groups per category, ranked ascending (low diversity
    first). Only images with an assigned scene group participate."""
    group_names = ds.categories.scene_group_names
    if not any(img.scene_group is not None for img in ds.images.values()):
        raise MissingAnnotations("scene groups", "no image has a scene group")

    rows = []
    for cat in ds.categories_present:
        counts = {g: 0 for g in group_names}
        n_images = 0
        for image_id in ds.images_with_category.get(cat, ()):
            group = ds.images[image_id].scene_group
            if group is None:
                continue
            counts[group] += 1
            n_images += 1
        if n_images == 0:
            continue
        result = entropy([counts[g] for g in group_names])
        rows.append(
            SceneDiversity(
                category=cat,
                entropy_bits=result.bits,
                normalized=result.normalized,
                n_images=n_images,
                n_groups=sum(1 for v in counts.values() if v),
                low_support=n_images < min_images,
            )
        )
    rows.sort(key=lambda r: (r.entropy_bits, r.category))
    return rows


# -- appearance diversity --------------------------------------------------------------

@dataclass(frozen=True)
class DiversityScore:
    category: str
    mean_pairwise_distance: float
    n_sampled: int
    contributions: tuple[tuple[str, float], ...]  # (instance_id, score) desc
    low_support: bool


@dataclass(frozen=True)
class DiversityValidation:
    """Sanity aggregates: same-class distances should run below same-supercategory,
    which should run below unrelated."""

    same_class_mean: float
    same_class_std: float
    same_supercategory_mean: float
    same_supercategory_std: float
    unrelated_mean: float
    unrelated_std: float
    n_pairs: tuple[int, int, int]


@dataclass(frozen=True)
class AppearanceDiversityResult:
    per_category: tuple[DiversityScore, ...]
    validation: DiversityValidation | None
    omitted: tuple[str, ...]


def _pairwise_mean_and_contributions(emb: np.ndarray) -> tuple[float, np.ndarray]:
    sq = (emb * emb).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2 * emb @ emb.T
    np.fill_diagonal(d2, 0.0)
    d = np.sqrt(np.maximum(d2, 0.0))
    m = emb.shape[0]
    mean = float(d.sum() / (m * (m - 1)))
    contributions = d.sum(axis=1) / (m - 1)
    return mean, contributions


def appearance_diversity(
    ds: AnnotatedDataset,
    features: FeatureStore | None = None,
    sample_cap: int = DEFAULT_DIVERSITY_SAMPLE_CAP,
    seed: int = 0,
    min_instances: int = DEFAULT_MIN_CATEGORY_INSTANCES,
    contribution_mode: str = "mean_distance",
    validation_pair_cap: int = 20000,
) -> AppearanceDiversityResult:
    """Mean pairwise embedding distance per category over a seeded sample.

    Per-instance contribution defaults to the instance's mean distance to the
    other sampled instances; ``contribution_mode='leave_one_out'`` reports the
    drop in the category score when the instance is removed.
    """
    if contribution_mode not in ("mean_distance", "leave_one_out"):
        raise ValueError(f"unknown contribution_mode {contribution_mode!r}")
    store = features or ds.features
    if store is None or not store.instance_features:
        raise MissingAnnotations("instance embeddings", "no instance features attached")

    by_cat: dict[str, list[str]] = {}
    for inst in ds.instances.values():
        if inst.instance_id in store.instance_features:
            by_cat.setdefault(inst.category, []).append(inst.instance_id)

    scores = []
    omitted = []
    for cat in sorted(by_cat):
        ids = by_cat[cat]
        if len(ids) < 2:
            omitted.append(cat)
            continue
        rng = rng_for(seed, "appearance", cat)
        if len(ids) > sample_cap:
            chosen = rng.choice(len(ids), size=sample_cap, replace=False)
            ids = [ids[i] for i in sorted(chosen)]
        emb = np.stack([store.instance_features[i] for i in ids])
        mean, contrib = _pairwise_mean_and_contributions(emb)
        if contribution_mode == "leave_one_out":
            m = len(ids)
            if m > 2:
                total = mean * m * (m - 1) / 2
                loo = []
                for i in range(m):
                    remaining = (total - contrib[i] * (m - 1)) / ((m - 1) * (m - 2) / 2)
                    loo.append(mean - remaining)
                contrib = np.asarray(loo)
        pairs = sorted(
            zip(ids, (float(c) for c in contrib)), key=lambda t: (-t[1], t[0])
        )
        scores.append(
            DiversityScore(
                category=cat,
                mean_pairwise_distance=mean,
                n_sampled=len(ids),
                contributions=tuple(pairs),
                low_support=len(ids) < min_instances,
            )
        )

    validation = _diversity_validation(ds, store, seed, validation_pair_cap)
    scores.sort(key=lambda s: (s.mean_pairwise_distance, s.category))
    return AppearanceDiversityResult(
        per_category=tuple(scores), validation=validation, omitted=tuple(omitted)
    )


def _diversity_validation(
    ds: AnnotatedDataset, store: FeatureStore, seed: int, pair_cap: int
) -> DiversityValidation | None:
    ids = [i for i in sorted(store.instance_features) if i in ds.instances]
    if len(ids) < 4:
        return None
    emb = {i: store.instance_features[i] for i in ids}
    cat = {i: ds.instances[i].category for i in ids}
    sup = {i: ds.categories.supercategory(cat[i]) for i in ids}
    rng = rng_for(seed, "diversity-validation")
    buckets: dict[str, list[float]] = {"same": [], "super": [], "unrelated": []}
    # rejection-sample random pairs into the three strata
    max_draws = pair_cap * 10
    for _ in range(max_draws):
        if all(len(v) >= pair_cap for v in buckets.values()):
            break
        i, j = rng.integers(0, len(ids), size=2)
        if i == j:
            continue
        a, b = ids[int(i)], ids[int(j)]
        if cat[a] == cat[b]:
            key = "same"
        elif sup[a] == sup[b]:
            key = "super"
        else:
            key = "unrelated"
        if len(buckets[key]) >= pair_cap:
            continue
        buckets[key].append(float(np.linalg.norm(emb[a] - emb[b])))
    if not all(buckets.values()):
        return None
    same = np.asarray(buckets["same"])
    supa = np.asarray(buckets["super"])
    unrel = np.asarray(buckets["unrelated"])
    return DiversityValidation(
        same_class_mean=float(same.mean()),
        same_class_std=float(same.std()),
        same_supercategory_mean=float(supa.mean()),
        same_supercategory_std=float(supa.std()),
        unrelated_mean=float(unrel.mean()),
        unrelated_std=float(unrel.std()),
        n_pairs=(same.size, supa.size, unrel.size),
    )
