"""Gender-based metrics: contextual representation, instance counts and
distances, interaction thresholds, label-inference auditing, and appearance
separability.

Gender here is the image-level label carried by the dataset (typically
caption-derived); the engine analyzes whatever binary group labels exist and
never infers gender from pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import InsufficientData, MissingAnnotations
from .features import FeatureStore
from .model import AnnotatedDataset, BBox, InstanceRecord
from .stats import (
    DEFAULT_SHUFFLE_TRIALS,
    DEFAULT_SVM_EPOCHS,
    DEFAULT_SVM_HOLDOUT,
    DEFAULT_SVM_LAMBDA,
    TestResult,
    benjamini_hochberg,
    random_projection,
    default_projection_dim,
    rank_sum_test,
    rng_for,
    shuffled_baseline_ratio,
    train_linear_svm,
    two_proportion_test,
)

GENDERS = ("female", "male")
DEFAULT_MIN_DISTANCE_N = 10
DEFAULT_MIN_SEPARABILITY_N = 25
DEFAULT_SEPARABILITY_CAP = 500
UNIDENTIFIABLE_AREA_PX = 1000.0  # ~32x32, the small-person recognition floor
DEFAULT_ALPHA = 0.05


def _require_genders(ds: AnnotatedDataset) -> dict[str, tuple[str, ...]]:
    gendered = ds.gendered_image_ids
    if not gendered["female"] and not gendered["male"]:
        raise MissingAnnotations("gender labels", "no image carries a gender label")
    for g in GENDERS:
        if not gendered[g]:
            raise InsufficientData(f"gender {g!r} has zero images")
    return dict(gendered)


# -- contextual representation ----------------------------------------------------

@dataclass(frozen=True)
class ContextCell:
    name: str
    fraction_female: float
    fraction_male: float
    count_female: int
    count_male: int
    p_value: float
    adjusted_p: float
    significant: bool


@dataclass(frozen=True)
class ContextualRepresentation:
    scene_cells: tuple[ContextCell, ...]
    supercategory_cells: tuple[ContextCell, ...]
    n_images: Mapping[str, int]
    n_scene_images: Mapping[str, int]


def _cells(
    counts_f: Mapping[str, int],
    counts_m: Mapping[str, int],
    denom_f: int,
    denom_m: int,
    alpha: float,
) -> tuple[ContextCell, ...]:
    names = sorted(set(counts_f) | set(counts_m))
    raw = []
    for name in names:
        kf, km = counts_f.get(name, 0), counts_m.get(name, 0)
        test = two_proportion_test(kf, denom_f, km, denom_m)
        raw.append((name, kf, km, test.p_value))
    rejected, adjusted = benjamini_hochberg([r[3] for r in raw], alpha=alpha)
    return tuple(
        ContextCell(
            name=name,
            fraction_female=kf / denom_f,
            fraction_male=km / denom_m,
            count_female=kf,
            count_male=km,
            p_value=p,
            adjusted_p=adj,
            significant=rej,
        )
        for (name, kf, km, p), adj, rej in zip(raw, adjusted, rejected)
    )


def contextual_representation(
    ds: AnnotatedDataset, alpha: float = DEFAULT_ALPHA
) -> ContextualRepresentation:
    """Scene-group and supercategory occupancy per gender.

    Scene fractions are over each gender's scene-assigned images (they sum to
    1 per gender); supercategory fractions are the share of that gender's
    images containing at least one instance of the supercategory. Each cell
    carries a two-proportion test, BH-corrected within its family.
    """
    gendered = _require_genders(ds)

    scene_counts = {g: {} for g in GENDERS}
    scene_denoms = {}
    for g in GENDERS:
        n = 0
        for image_id in gendered[g]:
            group = ds.images[image_id].scene_group
            if group is None:
                continue
            scene_counts[g][group] = scene_counts[g].get(group, 0) + 1
            n += 1
        scene_denoms[g] = n

    sup_counts = {g: {} for g in GENDERS}
    for g in GENDERS:
        for image_id in gendered[g]:
            sups = {
                ds.categories.supercategory(i.category)
                for i in ds.instances_by_image.get(image_id, ())
            }
            for s in sups:
                sup_counts[g][s] = sup_counts[g].get(s, 0) + 1

    scene_cells: tuple[ContextCell, ...] = ()
    if scene_denoms["female"] and scene_denoms["male"]:
        scene_cells = _cells(
            scene_counts["female"], scene_counts["male"],
            scene_denoms["female"], scene_denoms["male"], alpha,
        )
    sup_cells = _cells(
        sup_counts["female"], sup_counts["male"],
        len(gendered["female"]), len(gendered["male"]), alpha,
    )
    return ContextualRepresentation(
        scene_cells=scene_cells,
        supercategory_cells=sup_cells,
        n_images={g: len(gendered[g]) for g in GENDERS},
        n_scene_images=scene_denoms,
    )


# -- per-category gendered counts ----------------------------------------------------

@dataclass(frozen=True)
class GenderedCount:
    category: str
    count_female: int
    count_male: int
    rate_female: float
    rate_male: float
    effect_size: float  # Cohen's h, positive when female-overrepresented
    p_value: float
    adjusted_p: float
    significant: bool


def _cohens_h(p1: float, p2: float) -> float:
    return 2 * math.asin(math.sqrt(p1)) - 2 * math.asin(math.sqrt(p2))


def gendered_object_counts(
    ds: AnnotatedDataset, alpha: float = DEFAULT_ALPHA
) -> list[GenderedCount]:
    """Per category, how often female- vs male-labeled images contain it,
    with BH-corrected two-proportion significance, sorted by effect size."""
    gendered = _require_genders(ds)
    nf, nm = len(gendered["female"]), len(gendered["male"])
    female_set = set(gendered["female"])
    male_set = set(gendered["male"])

    raw = []
    for cat in ds.categories_present:
        images = ds.images_with_category.get(cat, frozenset())
        kf = len(images & female_set)
        km = len(images & male_set)
        if kf == 0 and km == 0:
            continue
        test = two_proportion_test(kf, nf, km, nm)
        raw.append((cat, kf, km, test.p_value))
    rejected, adjusted = benjamini_hochberg([r[3] for r in raw], alpha=alpha)
    rows = [
        GenderedCount(
            category=cat,
            count_female=kf,
            count_male=km,
            rate_female=kf / nf,
            rate_male=km / nm,
            effect_size=_cohens_h(kf / nf, km / nm),
            p_value=p,
            adjusted_p=adj,
            significant=rej,
        )
        for (cat, kf, km, p), adj, rej in zip(raw, adjusted, rejected)
    ]
    rows.sort(key=lambda r: (-abs(r.effect_size), r.category))
    return rows


# -- scaled person-object distance ----------------------------------------------------

def person_object_distance(person_bbox: BBox, object_bbox: BBox) -> float:
    """Center distance scaled by sqrt(area_person * area_object).

    Translation-invariant; scaling all coordinates and sizes by s multiplies
    the result by 1/s. A proxy for 3D interaction distance.
    """
    ap, ao = person_bbox.area, object_bbox.area
    if ap <= 0 or ao <= 0:
        raise ValueError("both boxes must have positive area")
    (px, py), (ox, oy) = person_bbox.center, object_bbox.center
    return math.hypot(px - ox, py - oy) / math.sqrt(ap * ao)


@dataclass(frozen=True)
class GenderDistanceResult:
    category: str
    samples: Mapping[str, tuple[float, ...]]
    medians: Mapping[str, float]
    test: TestResult
    exemplars: Mapping[str, tuple[str, ...]]  # image IDs along the distance gradient


def gendered_distance_analysis(
    ds: AnnotatedDataset,
    category: str,
    min_n: int = DEFAULT_MIN_DISTANCE_N,
    n_exemplars: int = 5,
) -> GenderDistanceResult:
    """Compare person-to-category distances between genders.

    Every person in a gendered image contributes the distance to the nearest
    same-image instance of ``category``; genders are compared by rank-sum.
    """
    per_gender: dict[str, list[tuple[float, str]]] = {g: [] for g in GENDERS}
    for image_id, img in ds.images.items():
        if img.gender_label not in per_gender:
            continue
        insts = ds.instances_by_image.get(image_id, ())
        objects = [
            i for i in insts if i.category == category and i.bbox is not None
        ]
        persons = [i for i in insts if i.is_person and i.bbox is not None]
        if not objects or not persons:
            continue
        for person in persons:
            candidates = [o for o in objects if o.instance_id != person.instance_id]
            if not candidates:
                continue
            d = min(
                person_object_distance(person.bbox, o.bbox) for o in candidates
            )
            per_gender[img.gender_label].append((d, image_id))

    for g in GENDERS:
        if len(per_gender[g]) < min_n:
            raise InsufficientData(
                f"category {category!r}: gender {g!r} has "
                f"{len(per_gender[g])} person-object distances, need {min_n}"
            )

    samples = {g: tuple(d for d, _ in per_gender[g]) for g in GENDERS}
    test = rank_sum_test(samples["female"], samples["male"])
    exemplars = {}
    for g in GENDERS:
        by_image: dict[str, float] = {}
        for d, image_id in per_gender[g]:
            by_image[image_id] = min(d, by_image.get(image_id, math.inf))
        ordered = sorted(by_image.items(), key=lambda t: (t[1], t[0]))
        if len(ordered) <= n_exemplars:
            picks = ordered
        else:
            idx = np.linspace(0, len(ordered) - 1, n_exemplars).round().astype(int)
            picks = [ordered[i] for i in dict.fromkeys(idx.tolist())]
        exemplars[g] = tuple(image_id for image_id, _ in picks)
    return GenderDistanceResult(
        category=category,
        samples=samples,
        medians={g: float(np.median(samples[g])) for g in GENDERS},
        test=test,
        exemplars=exemplars,
    )


# -- interaction threshold (distance as an interaction proxy) ---------------------------

@dataclass(frozen=True)
class InteractionThreshold:
    threshold: float
    mpca: float
    n_labeled: int
    n_yes: int
    n_no: int
    category: str | None = None


def fit_interaction_threshold(
    distances: Sequence[float],
    labels: Sequence,
    evaluation: str = "fit",
    category: str | None = None,
) -> InteractionThreshold:
    """Pick the distance threshold maximizing mean per-class accuracy, with
    distances below the threshold classified as 'yes' interactions.

    Candidates are the midpoints of adjacent sorted distances plus the two
    degenerate all-yes/all-no cutoffs, so the optimum is the exhaustive sweep's
    and MPCA is always at least the 0.5 of a constant classifier. Ties go to
    the smallest threshold. By default the threshold is evaluated on the data
    that produced it; ``evaluation='cv'`` reports a 5-fold estimate instead.
    """
    if evaluation not in ("fit", "cv"):
        raise ValueError(f"unknown evaluation {evaluation!r}")
    d = np.asarray(list(distances), dtype=float)
    y = np.asarray([_as_yes(v) for v in labels], dtype=bool)
    if d.size != y.size or d.size == 0:
        raise ValueError("distances and labels must be equal-length and nonempty")
    if y.all() or not y.any():
        raise ValueError("need both 'yes' and 'no' labels")

    threshold, _ = _sweep(d, y)
    if evaluation == "fit":
        mpca = _mpca(d, y, threshold)
    else:
        folds = np.arange(d.size) % 5
        fold_scores = []
        for f in range(5):
            train = folds != f
            test = ~train
            if not test.any() or y[train].all() or not y[train].any():
                continue
            t, _ = _sweep(d[train], y[train])
            fold_scores.append(_mpca(d[test], y[test], t))
        mpca = float(np.mean(fold_scores)) if fold_scores else _mpca(d, y, threshold)
    return InteractionThreshold(
        threshold=float(threshold),
        mpca=float(mpca),
        n_labeled=int(d.size),
        n_yes=int(y.sum()),
        n_no=int((~y).sum()),
        category=category,
    )


def _as_yes(value) -> bool:
    if isinstance(value, str):
        return value.lower() in ("yes", "y", "true", "1")
    return bool(value)


def _mpca(d: np.ndarray, y: np.ndarray, threshold: float) -> float:
    pred_yes = d < threshold
    acc_yes = (pred_yes & y).sum() / y.sum()
    acc_no = (~pred_yes & ~y).sum() / (~y).sum()
    return float((acc_yes + acc_no) / 2)


def _sweep(d: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    u = np.unique(d)
    candidates = [u[0]]
    candidates.extend((u[:-1] + u[1:]) / 2)
    candidates.append(float(np.nextafter(u[-1], np.inf)))
    best_t, best_score = candidates[0], -1.0
    for t in candidates:
        score = _mpca(d, y, t)
        if score > best_score + 1e-15:
            best_t, best_score = t, score
    return float(best_t), float(best_score)


# -- identifiability and the gender-label audit -------------------------------------------

def identifiability(
    person: InstanceRecord, area_threshold: float = UNIDENTIFIABLE_AREA_PX
) -> str:
    """'unidentifiable' when the person's box is under ``area_threshold`` px^2
    or no face was detected (a missing face flag counts as not detected)."""
    if person.bbox is None:
        raise ValueError(f"person {person.instance_id!r} has no bbox")
    if person.bbox.area < area_threshold:
        return "unidentifiable"
    if person.face_detected is not True:
        return "unidentifiable"
    return "identifiable"


@dataclass(frozen=True)
class GenderAuditResult:
    n_unidentifiable: int
    n_female: int
    n_male: int
    fraction_male: float
    scene_group_ratios: Mapping[str, float]  # male:female image ratio per group
    scene_group_counts: Mapping[str, tuple[int, int]]  # (female, male)
    n_missing_face_flag: int


def gender_inference_audit(
    ds: AnnotatedDataset, area_threshold: float = UNIDENTIFIABLE_AREA_PX
) -> GenderAuditResult:
    """Audit gendered images whose every person is unidentifiable.

    A high male fraction indicates annotators defaulting to 'male' when the
    person offers no gender cues; per-scene-group ratios localize where.
    """
    _require_genders(ds)
    qualifying: list[str] = []
    missing_flags = 0
    for image_id, img in ds.images.items():
        if img.gender_label not in GENDERS:
            continue
        persons = [
            i for i in ds.instances_by_image.get(image_id, ()) if i.is_person
        ]
        if not persons or any(p.bbox is None for p in persons):
            continue
        if all(identifiability(p, area_threshold) == "unidentifiable" for p in persons):
            qualifying.append(image_id)
            missing_flags += sum(1 for p in persons if p.face_detected is None)

    if not qualifying:
        raise InsufficientData("no gendered image has only unidentifiable people")

    n_female = sum(1 for i in qualifying if ds.images[i].gender_label == "female")
    n_male = len(qualifying) - n_female
    group_counts: dict[str, list[int]] = {}
    for image_id in qualifying:
        img = ds.images[image_id]
        if img.scene_group is None:
            continue
        pair = group_counts.setdefault(img.scene_group, [0, 0])
        pair[0 if img.gender_label == "female" else 1] += 1
    ratios = {
        g: counts[1] / counts[0]
        for g, counts in sorted(group_counts.items())
        if counts[0] > 0 and counts[1] > 0
    }
    return GenderAuditResult(
        n_unidentifiable=len(qualifying),
        n_female=n_female,
        n_male=n_male,
        fraction_male=n_male / len(qualifying),
        scene_group_ratios=ratios,
        scene_group_counts={g: (c[0], c[1]) for g, c in sorted(group_counts.items())},
        n_missing_face_flag=missing_flags,
    )


# -- appearance separability ------------------------------------------------------------

@dataclass(frozen=True)
class SeparabilityResult:
    category: str
    accuracy: float
    shuffled_mean_accuracy: float
    ratio: float
    n_per_gender: int
    projection_dim: int
    exemplars: Mapping[str, tuple[str, ...]]  # most-confident image IDs per gender


def appearance_separability(
    ds: AnnotatedDataset,
    category: str,
    features: FeatureStore | None = None,
    seed: int = 0,
    min_n: int = DEFAULT_MIN_SEPARABILITY_N,
    sample_cap: int = DEFAULT_SEPARABILITY_CAP,
    lam: float = DEFAULT_SVM_LAMBDA,
    epochs: int = DEFAULT_SVM_EPOCHS,
    holdout: float = DEFAULT_SVM_HOLDOUT,
    trials: int = DEFAULT_SHUFFLE_TRIALS,
    n_exemplars: int = 5,
) -> SeparabilityResult:
    """Can a linear model tell female-labeled from male-labeled images of a
    category? Balanced seeded subsample, sqrt(n) projection, SVM with a
    shuffled-label baseline; high accuracy with ratio well above 1 indicates a
    systematic appearance difference."""
    store = features or ds.features
    if store is None or not store.image_features:
        raise MissingAnnotations("image embeddings", "no image features attached")
    gendered = _require_genders(ds)
    cat_images = ds.images_with_category.get(category, frozenset())

    ids_by_gender = {}
    for g in GENDERS:
        ids = sorted(
            i for i in gendered[g] if i in cat_images and i in store.image_features
        )
        ids_by_gender[g] = ids
    n_per = min(len(ids_by_gender["female"]), len(ids_by_gender["male"]), sample_cap)
    if n_per < min_n:
        raise InsufficientData(
            f"category {category!r}: need {min_n} embedded images per gender, have "
            f"female={len(ids_by_gender['female'])} male={len(ids_by_gender['male'])}"
        )
    rng = rng_for(seed, "separability", category)
    sampled: list[tuple[str, str]] = []
    for g in GENDERS:
        ids = ids_by_gender[g]
        chosen = rng.choice(len(ids), size=n_per, replace=False)
        sampled.extend((ids[i], g) for i in sorted(chosen))

    X = np.stack([store.image_features[i] for i, _ in sampled])
    y = np.asarray([g for _, g in sampled])
    out_dim = min(default_projection_dim(len(sampled)), X.shape[1])
    Xp = random_projection(X, out_dim=out_dim, seed=seed)

    svm_seed = int(rng_for(seed, "separability-svm", category).integers(0, 2**31 - 1))
    baseline = shuffled_baseline_ratio(
        Xp, y, trials=trials, seed=svm_seed, lam=lam, epochs=epochs, holdout=holdout
    )
    model = train_linear_svm(Xp, y, lam=lam, epochs=epochs, seed=svm_seed, holdout=holdout)
    margins = model.decision(Xp)
    exemplars = {}
    for g in GENDERS:
        side = 1.0 if g == model.classes[1] else -1.0
        scored = sorted(
            ((side * margins[i], sampled[i][0]) for i in range(len(sampled))
             if sampled[i][1] == g),
            key=lambda t: (-t[0], t[1]),
        )
        exemplars[g] = tuple(image_id for _, image_id in scored[:n_exemplars])
    return SeparabilityResult(
        category=category,
        accuracy=baseline.true_accuracy,
        shuffled_mean_accuracy=baseline.shuffled_mean_accuracy,
        ratio=baseline.ratio,
        n_per_gender=n_per,
        projection_dim=out_dim,
        exemplars=exemplars,
    )
