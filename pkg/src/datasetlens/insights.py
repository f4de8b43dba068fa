"""Augmentation-query ranking, query-term expansion, and the
diversity-vs-commonness tradeoff.

Query probabilities are conditional co-occurrence frequencies estimated from
the dataset itself, on the working assumption that objects co-occur in search
returns at roughly the same relative rates as in the dataset; every report
carries that caveat.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import resources
from .errors import InsufficientData, MissingAnnotations, UnknownEntity
from .features import FeatureStore
from .model import AnnotatedDataset
from .objects import area_fraction
from .stats import fit_quantile_bins, rng_for

COOCCURRENCE_ASSUMPTION = (
    "Probabilities assume objects co-occur in query returns at roughly the "
    "same relative rates as in this dataset; they are estimates, not measured "
    "search-engine statistics."
)

OUTCOME_KINDS = ("size_bin_in", "scene_group_in", "cooccurs_with", "gender_is")
DEFAULT_MIN_SUPPORT = 10
DEFAULT_MIN_GROUP_INSTANCES = 5
DEFAULT_TRADEOFF_MIN_INSTANCES = 20


@dataclass(frozen=True)
class OutcomePredicate:
    """Target condition a recommended query is meant to satisfy, e.g.
    size_bin_in:XS,S,M."""

    kind: str
    values: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in OUTCOME_KINDS:
            raise ValueError(f"unknown outcome kind {self.kind!r}")
        if not self.values:
            raise ValueError("outcome needs at least one value")

    @classmethod
    def parse(cls, text: str) -> "OutcomePredicate":
        kind, _, rest = text.partition(":")
        values = tuple(v.strip() for v in rest.split(",") if v.strip())
        return cls(kind=kind.strip(), values=values)

    def spell(self) -> str:
        return f"{self.kind}:{','.join(self.values)}"


@dataclass(frozen=True)
class QueryRecommendation:
    target: str
    term: str
    term_kind: str  # category | supercategory | scene_group
    probability: float
    support: int
    expanded_queries: tuple[str, ...]


def _target_bin_assignments(
    ds: AnnotatedDataset, target: str, k: int
) -> dict[str, set[str]]:
    """Image ID -> set of bin labels of the target's boxed instances there."""
    fractions = []
    for inst in ds.instances.values():
        if inst.bbox is None:
            continue
        img = ds.images[inst.image_id]
        fractions.append(area_fraction(inst.bbox, img.width, img.height))
    if not fractions:
        raise MissingAnnotations("bounding boxes", "size outcomes need bboxes")
    binning = fit_quantile_bins(fractions, k=k)
    out: dict[str, set[str]] = {}
    for inst in ds.instances.values():
        if inst.category != target or inst.bbox is None:
            continue
        img = ds.images[inst.image_id]
        label = binning.assign_label(area_fraction(inst.bbox, img.width, img.height))
        out.setdefault(inst.image_id, set()).add(label)
    return out


def _outcome_truth(
    ds: AnnotatedDataset, target: str, outcome: OutcomePredicate, k_bins: int
) -> dict[str, bool]:
    """Per-image outcome evaluation over images containing the target: true
    when any target instance in the image satisfies the predicate."""
    target_images = ds.images_with_category.get(target, frozenset())
    if outcome.kind == "size_bin_in":
        assignments = _target_bin_assignments(ds, target, k_bins)
        wanted = set(outcome.values)
        return {
            i: bool(assignments.get(i, set()) & wanted) for i in target_images
        }
    if outcome.kind == "scene_group_in":
        wanted = set(outcome.values)
        return {i: ds.images[i].scene_group in wanted for i in target_images}
    if outcome.kind == "cooccurs_with":
        other = ds.images_with_category.get(outcome.values[0], frozenset())
        return {i: i in other for i in target_images}
    if outcome.kind == "gender_is":
        return {
            i: ds.images[i].gender_label == outcome.values[0] for i in target_images
        }
    raise ValueError(f"unknown outcome kind {outcome.kind!r}")


def rank_queries(
    ds: AnnotatedDataset,
    target: str,
    outcome: OutcomePredicate,
    min_support: int = DEFAULT_MIN_SUPPORT,
    k_bins: int = 5,
    synonyms: Mapping[str, Sequence[str]] | None = None,
    scene_members: Mapping[str, Sequence[str]] | None = None,
) -> list[QueryRecommendation]:
    """Rank candidate pairwise queries '<target> and <term>' by the estimated
    probability that an image returned for the pair satisfies the outcome.

    Candidates are every other category, every supercategory, and every scene
    group; the probability is P(outcome | image contains target and term) from
    dataset co-occurrence. Terms supported by fewer than ``min_support``
    co-occurring images are dropped; ordering is probability desc, support
    desc, term name.
    """
    if target not in ds.images_with_category:
        raise UnknownEntity("category", target)
    truth = _outcome_truth(ds, target, outcome, k_bins)
    target_images = ds.images_with_category[target]

    candidates: list[tuple[str, str, frozenset[str]]] = []
    for cat, images in ds.images_with_category.items():
        if cat != target:
            candidates.append((cat, "category", images))
    for sup, images in ds.images_with_supercategory.items():
        if sup == target:
            continue
        if images == ds.images_with_category.get(sup):
            continue  # single-member supercategory duplicating its category
        candidates.append((sup, "supercategory", images))
    for group, images in ds.images_by_scene_group.items():
        candidates.append((group, "scene_group", images))

    known_terms = set(ds.images_with_category) | set(ds.images_with_supercategory)
    rows = []
    for term, kind, images in candidates:
        joint = target_images & images
        support = len(joint)
        if support < min_support:
            continue
        hits = sum(1 for i in joint if truth[i])
        rows.append(
            QueryRecommendation(
                target=target,
                term=term,
                term_kind=kind,
                probability=hits / support,
                support=support,
                expanded_queries=tuple(
                    f"{target} and {e}"
                    for e in expand_query_term(
                        term,
                        scene_members=scene_members,
                        synonym_lists=synonyms,
                        known_terms=known_terms,
                    )
                ),
            )
        )
    if not rows:
        raise InsufficientData(
            f"no candidate term reaches min_support={min_support} for {target!r}"
        )
    rows.sort(key=lambda r: (-r.probability, -r.support, r.term))
    return rows


def expand_query_term(
    term: str,
    scene_members: Mapping[str, Sequence[str]] | None = None,
    synonym_lists: Mapping[str, Sequence[str]] | None = None,
    known_terms: Sequence[str] | set[str] = (),
) -> list[str]:
    """Concrete query strings for a term.

    Scene groups expand to their member scene names; categories expand to
    themselves plus their synonym-list entries; other registered terms pass
    through unchanged. Unregistered terms raise.
    """
    scenes = scene_members if scene_members is not None else resources.scene_group_members()
    synonyms = synonym_lists if synonym_lists is not None else resources.query_synonyms()
    if term in scenes:
        return list(scenes[term])
    if term in synonyms:
        return [term, *synonyms[term]]
    if term in set(known_terms):
        return [term]
    raise UnknownEntity("query term", term)


# -- diversity vs commonness -----------------------------------------------------

@dataclass(frozen=True)
class TradeoffPoint:
    scene_group: str
    commonness: float
    diversity_gain: float
    n: int
    efficient: bool  # argmax of commonness * diversity_gain


@dataclass(frozen=True)
class TradeoffResult:
    target: str
    points: tuple[TradeoffPoint, ...]
    n_embedded: int
    gain_mode: str


def diversity_commonness_tradeoff(
    ds: AnnotatedDataset,
    target: str,
    features: FeatureStore | None = None,
    seed: int = 0,
    min_group_instances: int = DEFAULT_MIN_GROUP_INSTANCES,
    min_instances: int = DEFAULT_TRADEOFF_MIN_INSTANCES,
    sample_cap: int = 5000,
    gain_mode: str = "centroid_distance",
) -> TradeoffResult:
    """Score scene groups as augmentation contexts for a category or
    supercategory.

    Commonness is the scene group's share of all scene-assigned images; the
    diversity gain is how far the target's instances in that group sit from
    the target's overall embedding centroid (``gain_mode='variance_delta'``
    reports the drop in total embedding variance when the group is removed).
    The point maximizing commonness x gain is flagged efficient.
    """
    if gain_mode not in ("centroid_distance", "variance_delta"):
        raise ValueError(f"unknown gain_mode {gain_mode!r}")
    store = features or ds.features
    if store is None or not store.instance_features:
        raise MissingAnnotations("instance embeddings", "no instance features attached")
    if not any(img.scene_group is not None for img in ds.images.values()):
        raise MissingAnnotations("scene groups", "no image has a scene group")

    if target in ds.images_with_category:
        member_cats = {target}
    elif target in ds.images_with_supercategory:
        member_cats = {
            c for c in ds.categories_present
            if ds.categories.supercategory(c) == target
        }
    else:
        raise UnknownEntity("category or supercategory", target)

    embedded: list[tuple[str, str | None]] = []  # (instance_id, scene_group)
    for inst in ds.instances.values():
        if inst.category in member_cats and inst.instance_id in store.instance_features:
            embedded.append((inst.instance_id, ds.images[inst.image_id].scene_group))
    if len(embedded) < min_instances:
        raise InsufficientData(
            f"target {target!r} has {len(embedded)} embedded instances, "
            f"need {min_instances}"
        )
    if len(embedded) > sample_cap:
        rng = rng_for(seed, "tradeoff", target)
        chosen = rng.choice(len(embedded), size=sample_cap, replace=False)
        embedded = [embedded[i] for i in sorted(chosen)]

    vectors = np.stack([store.instance_features[i] for i, _ in embedded])
    centroid = vectors.mean(axis=0)
    total_var = float(((vectors - centroid) ** 2).sum(axis=1).mean())

    scene_image_total = sum(
        1 for img in ds.images.values() if img.scene_group is not None
    )
    per_group: dict[str, list[int]] = {}
    for idx, (_, group) in enumerate(embedded):
        if group is not None:
            per_group.setdefault(group, []).append(idx)

    scored = []
    for group in sorted(per_group):
        idxs = per_group[group]
        if len(idxs) < min_group_instances:
            continue
        group_vecs = vectors[idxs]
        if gain_mode == "centroid_distance":
            gain = float(np.linalg.norm(group_vecs - centroid, axis=1).mean())
        else:
            rest = np.delete(vectors, idxs, axis=0)
            if rest.shape[0] == 0:
                gain = 0.0
            else:
                rest_centroid = rest.mean(axis=0)
                rest_var = float(((rest - rest_centroid) ** 2).sum(axis=1).mean())
                gain = max(0.0, total_var - rest_var)
        commonness = len(ds.images_by_scene_group.get(group, ())) / scene_image_total
        scored.append((group, commonness, gain, len(idxs)))
    if not scored:
        raise InsufficientData(
            f"no scene group holds {min_group_instances} embedded instances of {target!r}"
        )

    best = 0
    for i in range(1, len(scored)):  # scored is name-sorted; ties keep the first
        if scored[i][1] * scored[i][2] > scored[best][1] * scored[best][2]:
            best = i
    points = tuple(
        TradeoffPoint(
            scene_group=group,
            commonness=commonness,
            diversity_gain=gain,
            n=n,
            efficient=(i == best),
        )
        for i, (group, commonness, gain, n) in enumerate(scored)
    )
    return TradeoffResult(
        target=target,
        points=points,
        n_embedded=len(embedded),
        gain_mode=gain_mode,
    )
