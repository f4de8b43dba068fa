"""Canonical data model: images, instances, categories, and validation.

Everything downstream treats an :class:`AnnotatedDataset` as immutable; metric
code is a pure function of (dataset, parameters, seed), so datasets can be
shared freely across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Any, Iterable, Mapping, Sequence

if TYPE_CHECKING:  # pragma: no cover
    from .features import FeatureCoverage, FeatureStore

GENDER_LABELS = ("female", "male", "unknown")


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in pixel coordinates: (x, y) is the top-left corner."""

    x: float
    y: float
    w: float
    h: float

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def clipped(self, width: float, height: float) -> "BBox":
        """Clip to an image of the given dimensions (used for area math only;
        out-of-bounds boxes are still reported by :func:`validate`)."""
        x0 = min(max(self.x, 0.0), width)
        y0 = min(max(self.y, 0.0), height)
        x1 = min(max(self.x + self.w, 0.0), width)
        y1 = min(max(self.y + self.h, 0.0), height)
        return BBox(x0, y0, max(x1 - x0, 0.0), max(y1 - y0, 0.0))

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    width: int
    height: int
    captions: tuple[str, ...] = ()
    gender_label: str = "unknown"
    country: str | None = None
    tags: tuple[str, ...] = ()
    tag_languages: tuple[str, ...] | None = None
    scene_group: str | None = None
    extras: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class InstanceRecord:
    instance_id: str
    image_id: str
    category: str
    bbox: BBox | None = None
    is_person: bool = False
    face_detected: bool | None = None
    extras: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class CategoryTable:
    """Category -> supercategory map plus the scene-name -> scene-group map.

    The supercategory map is total over the dataset's categories; the scene map
    covers the full scene vocabulary shipped as a package asset (16 groups).
    """

    supercategories: Mapping[str, str]
    scene_groups: Mapping[str, str]

    def supercategory(self, category: str) -> str:
        return self.supercategories.get(category, category)

    @cached_property
    def scene_group_names(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.scene_groups.values())))

    @cached_property
    def supercategory_names(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.supercategories.values())))

    def categories_of(self, supercategory: str) -> tuple[str, ...]:
        return tuple(
            sorted(c for c, s in self.supercategories.items() if s == supercategory)
        )


@dataclass(frozen=True)
class Provenance:
    source: str
    format: str
    loaded_at: str
    extra: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class AnnotatedDataset:
    """Immutable store of one loaded dataset.

    ``images`` and ``instances`` are insertion-ordered by sorted ID, so two
    loads of the same file iterate identically.
    """

    images: Mapping[str, ImageRecord]
    instances: Mapping[str, InstanceRecord]
    categories: CategoryTable
    provenance: Provenance
    duplicate_ids: tuple[str, ...] = ()
    features: "FeatureStore | None" = None
    feature_coverage: "FeatureCoverage | None" = None

    def __post_init__(self):
        for inst in self.instances.values():
            if inst.image_id not in self.images:
                from .errors import IntegrityError

                raise IntegrityError(
                    f"instance {inst.instance_id!r} references missing image "
                    f"{inst.image_id!r}"
                )

    # -- derived indexes (computed once, safe for concurrent readers) -----

    @cached_property
    def instances_by_image(self) -> Mapping[str, tuple[InstanceRecord, ...]]:
        out: dict[str, list[InstanceRecord]] = {iid: [] for iid in self.images}
        for inst in self.instances.values():
            out[inst.image_id].append(inst)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def categories_present(self) -> tuple[str, ...]:
        return tuple(sorted({i.category for i in self.instances.values()}))

    @cached_property
    def images_with_category(self) -> Mapping[str, frozenset[str]]:
        out: dict[str, set[str]] = {}
        for inst in self.instances.values():
            out.setdefault(inst.category, set()).add(inst.image_id)
        return {k: frozenset(v) for k, v in out.items()}

    @cached_property
    def images_with_supercategory(self) -> Mapping[str, frozenset[str]]:
        out: dict[str, set[str]] = {}
        for inst in self.instances.values():
            sup = self.categories.supercategory(inst.category)
            out.setdefault(sup, set()).add(inst.image_id)
        return {k: frozenset(v) for k, v in out.items()}

    @cached_property
    def images_by_scene_group(self) -> Mapping[str, frozenset[str]]:
        out: dict[str, set[str]] = {}
        for img in self.images.values():
            if img.scene_group is not None:
                out.setdefault(img.scene_group, set()).add(img.image_id)
        return {k: frozenset(v) for k, v in out.items()}

    @cached_property
    def person_instances(self) -> tuple[InstanceRecord, ...]:
        return tuple(i for i in self.instances.values() if i.is_person)

    @cached_property
    def gendered_image_ids(self) -> Mapping[str, tuple[str, ...]]:
        """Image IDs per binary gender label ('female'/'male')."""
        out: dict[str, list[str]] = {"female": [], "male": []}
        for img in self.images.values():
            if img.gender_label in out:
                out[img.gender_label].append(img.image_id)
        return {k: tuple(v) for k, v in out.items()}

    @property
    def n_images(self) -> int:
        return len(self.images)

    @property
    def n_instances(self) -> int:
        return len(self.instances)


# -- caption-derived gender labels ------------------------------------------

@dataclass(frozen=True)
class GenderLexicon:
    """Disjoint word lists that decide caption-derived gender labels."""

    male: frozenset[str] = frozenset(
        {"man", "men", "boy", "boys", "male", "gentleman"}
    )
    female: frozenset[str] = frozenset(
        {"woman", "women", "girl", "girls", "female", "lady"}
    )

    def __post_init__(self):
        overlap = self.male & self.female
        if overlap:
            raise ValueError(f"lexicons must be disjoint, overlap: {sorted(overlap)}")


DEFAULT_LEXICON = GenderLexicon()


def _word_pattern(words: Iterable[str]) -> re.Pattern[str]:
    alts = "|".join(re.escape(w) for w in sorted(words))
    return re.compile(rf"\b(?:{alts})\b", re.IGNORECASE)


def derive_gender_from_captions(
    captions: Sequence[str], lexicon: GenderLexicon = DEFAULT_LEXICON
) -> str:
    """Label an image from its captions.

    'male' iff at least one caption mentions a male word and no caption
    mentions a female word; symmetrically for 'female'; 'unknown' otherwise
    (including empty captions and mixed mentions).
    """
    if not captions:
        return "unknown"
    male_pat = _word_pattern(lexicon.male)
    female_pat = _word_pattern(lexicon.female)
    has_male = any(male_pat.search(c) for c in captions)
    has_female = any(female_pat.search(c) for c in captions)
    if has_male and not has_female:
        return "male"
    if has_female and not has_male:
        return "female"
    return "unknown"


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str  # bbox-out-of-bounds | zero-area | duplicate-id
    record_id: str
    message: str


def validate(dataset: AnnotatedDataset) -> list[Violation]:
    """Report non-fatal record problems; an empty list means the dataset is clean.

    Out-of-bounds boxes are reported here but clipped (never dropped) by the
    area-based metrics.
    """
    violations: list[Violation] = []
    for dup in dataset.duplicate_ids:
        violations.append(
            Violation("duplicate-id", dup, f"ID {dup!r} occurs more than once")
        )
    for inst in dataset.instances.values():
        if inst.bbox is None:
            continue
        b = inst.bbox
        if b.w <= 0 or b.h <= 0:
            violations.append(
                Violation(
                    "zero-area",
                    inst.instance_id,
                    f"instance {inst.instance_id!r} has non-positive bbox size "
                    f"{b.w}x{b.h}",
                )
            )
            continue
        img = dataset.images[inst.image_id]
        if b.x < 0 or b.y < 0 or b.x + b.w > img.width or b.y + b.h > img.height:
            violations.append(
                Violation(
                    "bbox-out-of-bounds",
                    inst.instance_id,
                    f"instance {inst.instance_id!r} bbox {b.as_list()} exceeds "
                    f"image {img.image_id!r} bounds {img.width}x{img.height}",
                )
            )
    return violations
