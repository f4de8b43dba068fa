"""Report assembly.

:class:`AnalysisSession` computes every metric section from one immutable
dataset + config pair and memoizes results; :func:`generate_report` assembles
the full machine report from it and the HTTP service serves the very same
fragments, so an endpoint payload always equals the corresponding report
section. Identical (dataset, config, seed) inputs reproduce the report
byte-for-byte apart from the ``generated_at`` timestamp.
"""

from __future__ import annotations

import dataclasses
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Any, Callable

import numpy as np

from . import __version__, gender, geo, insights, objects, resources
from .config import RunConfig
from .errors import InsufficientData, MissingAnnotations, UnknownEntity
from .geo import CountryTable, load_country_table
from .insights import COOCCURRENCE_ASSUMPTION, OutcomePredicate
from .model import AnnotatedDataset

SECTION_ORDER = ("objects", "gender", "geo", "insights")


def jsonable(obj: Any) -> Any:
    """Convert dataclasses / numpy values / tuples into JSON-serializable
    structures with deterministic key order."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in sorted(obj.items(), key=lambda t: str(t[0]))}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    return obj


def _skip(exc: Exception) -> dict[str, Any]:
    missing = getattr(exc, "missing", None)
    return {"skipped": True, "missing": missing or str(exc)}


class AnalysisSession:
    """Memoizing facade over the metric modules for one (dataset, config)."""

    def __init__(self, ds: AnnotatedDataset, config: RunConfig):
        self.ds = ds
        self.config = config
        self._lock = threading.Lock()
        self._memo: dict[tuple, Any] = {}
        self._actions = resources.action_templates()

    @property
    def country_table(self) -> CountryTable:
        return self._cached(
            ("country_table",),
            lambda: load_country_table(
                self.config.country_table or resources.default_country_table_path()
            ),
        )

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return self._cached(
            ("vocabulary",),
            lambda: (
                resources.load_vocabulary(self.config.vocabulary)
                if self.config.vocabulary
                else resources.default_vocabulary()
            ),
        )

    def _cached(self, key: tuple, compute: Callable[[], Any]) -> Any:
        with self._lock:
            if key in self._memo:
                return self._memo[key]
        value = compute()  # computed outside the lock; pure + idempotent
        with self._lock:
            if self.config.cache_entries and len(self._memo) >= self.config.cache_entries:
                self._memo.pop(next(iter(self._memo)))
            self._memo.setdefault(key, value)
            return self._memo[key]

    # -- object section ----------------------------------------------------

    def objects_counts(self) -> dict:
        def compute():
            result = objects.category_counts(self.ds)
            payload = jsonable(result)
            payload["action"] = self._actions["object_counts"]
            return payload

        return self._cached(("objects_counts",), compute)

    def objects_duplicates(self) -> dict:
        def compute():
            cfg = self.config
            pairs = objects.detect_duplicate_pairs(
                self.ds,
                iou_threshold=cfg.iou_threshold,
                fraction_threshold=cfg.duplicate_fraction_threshold,
                min_cooccurrences=cfg.duplicate_min_cooccurrences,
                mode=cfg.duplicate_mode,
            )
            return {
                "pairs": jsonable(pairs),
                "parameters": {
                    "iou_threshold": cfg.iou_threshold,
                    "fraction_threshold": cfg.duplicate_fraction_threshold,
                    "min_cooccurrences": cfg.duplicate_min_cooccurrences,
                    "mode": cfg.duplicate_mode,
                },
                "action": self._actions["duplicate_annotations"],
            }

        return self._cached(("objects_duplicates",), compute)

    def objects_scale(self) -> dict:
        def compute():
            report = objects.scale_distribution(
                self.ds,
                k=self.config.scale_bins,
                min_instances=self.config.min_category_instances,
            )
            return {
                "bin_labels": list(report.binning.labels),
                "bin_edges": list(report.binning.edges),
                "degenerate": report.binning.degenerate,
                "per_category": jsonable(report.per_category),
                "warnings": list(report.warnings),
                "action": self._actions["object_scale"],
            }

        return self._cached(("objects_scale",), compute)

    def objects_scale_for(self, category: str) -> dict:
        scale = self.objects_scale()
        for row in scale["per_category"]:
            if row["category"] == category:
                return {**row, "bin_labels": scale["bin_labels"]}
        raise UnknownEntity("category", category)

    def objects_cooccurrence(self) -> dict:
        def compute():
            matrix = objects.cooccurrence(self.ds)
            return {
                "n_images": matrix.n_images,
                "category_image_counts": jsonable(dict(matrix.category_counts)),
                "supercategory_image_counts": jsonable(dict(matrix.supercategory_counts)),
                "scene_group_image_counts": jsonable(dict(matrix.scene_counts)),
                "joint_categories": {
                    f"{a}|{b}": n for (a, b), n in sorted(matrix.joint_categories.items())
                },
                "joint_category_supercategory": {
                    f"{c}|{s}": n
                    for (c, s), n in sorted(matrix.joint_category_supercategory.items())
                },
                "joint_category_scene": {
                    f"{c}|{g}": n
                    for (c, g), n in sorted(matrix.joint_category_scene.items())
                },
                "action": self._actions["object_cooccurrence"],
            }

        return self._cached(("objects_cooccurrence",), compute)

    def objects_cooccurrence_pair(self, a: str, b: str) -> dict:
        matrix = self._cooccurrence_matrix()
        kinds = {}
        for name, kind in ((a, "a"), (b, "b")):
            if name in matrix.category_counts:
                kinds[kind] = "category"
            elif name in matrix.supercategory_counts:
                kinds[kind] = "supercategory"
            elif name in matrix.scene_counts:
                kinds[kind] = "scene_group"
            else:
                raise UnknownEntity("category/supercategory/scene group", name)
        if kinds["a"] != "category" and kinds["b"] == "category":
            # orient so a is always resolvable as the target category
            a, b = b, a
            kinds["a"], kinds["b"] = kinds["b"], kinds["a"]
        if kinds["a"] != "category":
            raise UnknownEntity("category", a)
        n_a = matrix.n("category", a)
        n_b = matrix.n(kinds["b"], b)
        joint = matrix.joint(a, kinds["b"], b)
        return {
            "a": a,
            "b": b,
            "b_kind": kinds["b"],
            "n_a": n_a,
            "n_b": n_b,
            "n_joint": joint,
            "p_a_given_b": joint / n_b if n_b else None,
            "p_b_given_a": joint / n_a if n_a else None,
        }

    def _cooccurrence_matrix(self) -> objects.CooccurrenceMatrix:
        return self._cached(("cooccurrence_matrix",), lambda: objects.cooccurrence(self.ds))

    def objects_scene_diversity(self) -> dict:
        def compute():
            rows = objects.scene_diversity(
                self.ds, min_images=self.config.min_category_instances
            )
            return {
                "ranking": jsonable(rows),
                "action": self._actions["scene_diversity"],
            }

        return self._cached(("objects_scene_diversity",), compute)

    def objects_appearance_diversity(self) -> dict:
        def compute():
            result = objects.appearance_diversity(
                self.ds,
                sample_cap=self.config.diversity_sample_cap,
                seed=self.config.seed,
                min_instances=self.config.min_category_instances,
            )
            payload = {
                "per_category": jsonable(result.per_category),
                "validation": jsonable(result.validation),
                "omitted": list(result.omitted),
                "action": self._actions["appearance_diversity"],
            }
            # keep per-instance contribution lists short in the report
            for row in payload["per_category"]:
                row["contributions"] = row["contributions"][:10]
            return payload

        return self._cached(("objects_appearance_diversity",), compute)

    def objects_appearance_diversity_for(self, category: str) -> dict:
        payload = self.objects_appearance_diversity()
        for row in payload["per_category"]:
            if row["category"] == category:
                return row
        raise UnknownEntity("category", category)

    # -- gender section ------------------------------------------------------

    def gender_context(self) -> dict:
        def compute():
            result = gender.contextual_representation(self.ds, alpha=self.config.alpha)
            payload = jsonable(result)
            payload["action"] = self._actions["gender_context"]
            return payload

        return self._cached(("gender_context",), compute)

    def gender_counts(self) -> dict:
        def compute():
            rows = gender.gendered_object_counts(self.ds, alpha=self.config.alpha)
            return {
                "per_category": jsonable(rows),
                "action": self._actions["gender_counts"],
            }

        return self._cached(("gender_counts",), compute)

    def gender_distance(self, category: str) -> dict:
        def compute():
            result = gender.gendered_distance_analysis(
                self.ds,
                category,
                min_n=self.config.distance_min_n,
                n_exemplars=self.config.n_exemplars,
            )
            payload = jsonable(result)
            payload["action"] = self._actions["gender_distance"]
            return payload

        if category not in self.ds.images_with_category:
            raise UnknownEntity("category", category)
        return self._cached(("gender_distance", category), compute)

    def gender_audit(self) -> dict:
        def compute():
            result = gender.gender_inference_audit(self.ds)
            payload = jsonable(result)
            payload["action"] = self._actions["gender_audit"]
            return payload

        return self._cached(("gender_audit",), compute)

    def gender_separability(self, category: str) -> dict:
        def compute():
            result = gender.appearance_separability(
                self.ds,
                category,
                seed=self.config.seed,
                min_n=self.config.separability_min_n,
                sample_cap=self.config.separability_sample_cap,
                lam=self.config.svm_lambda,
                epochs=self.config.svm_epochs,
                holdout=self.config.svm_holdout,
                trials=self.config.svm_trials,
                n_exemplars=self.config.n_exemplars,
            )
            payload = jsonable(result)
            payload["action"] = self._actions["gender_separability"]
            return payload

        if category not in self.ds.images_with_category:
            raise UnknownEntity("category", category)
        return self._cached(("gender_separability", category), compute)

    # -- geo section -----------------------------------------------------------

    def geo_countries(self) -> dict:
        def compute():
            result = geo.country_distribution(self.ds, self.country_table)
            payload = jsonable(result)
            payload["action"] = self._actions["country_distribution"]
            return payload

        return self._cached(("geo_countries",), compute)

    def geo_language(self) -> dict:
        def compute():
            stats = geo.nonlocal_language_fraction(
                self.ds,
                self.country_table,
                confidence=self.config.confidence,
                min_images=self.config.geo_min_images,
            )
            dominance = geo.visitor_dominated_countries(
                self.ds, self.country_table, min_images=self.config.geo_min_images
            )
            return {
                "nonlocal": jsonable(stats),
                "visitor_dominance": jsonable(dominance),
                "action": self._actions["local_language"],
            }

        return self._cached(("geo_language",), compute)

    def geo_tags(self, country: str | None = None) -> dict:
        def compute():
            rows = geo.tag_representation(
                self.ds, self.vocabulary, min_in_count=self.config.tag_min_count
            )
            return {
                "ranked": jsonable(rows),
                "action": self._actions["tag_representation"],
            }

        payload = self._cached(("geo_tags",), compute)
        if country is None:
            return payload
        iso = country.upper()
        rows = [r for r in payload["ranked"] if r["country"] == iso]
        if not rows:
            raise UnknownEntity("country", country)
        return {"ranked": rows, "action": payload["action"]}

    def geo_subregion(self, tag: str) -> dict:
        def compute():
            result = geo.subregion_separability(
                self.ds,
                tag,
                self.country_table,
                seed=self.config.seed,
                min_n=self.config.subregion_min_n,
                sample_cap=self.config.subregion_sample_cap,
                lam=self.config.svm_lambda,
                epochs=self.config.svm_epochs,
                holdout=self.config.svm_holdout,
                trials=self.config.subregion_trials,
                n_exemplars=self.config.n_exemplars,
            )
            payload = jsonable(result)
            payload["action"] = self._actions["subregion_separability"]
            return payload

        return self._cached(("geo_subregion", tag.lower()), compute)

    # -- insights section ---------------------------------------------------------

    def insights_recommend(
        self, target: str, outcome: str, min_support: int | None = None
    ) -> dict:
        support = self.config.min_support if min_support is None else int(min_support)

        def compute():
            predicate = OutcomePredicate.parse(outcome)
            rows = insights.rank_queries(
                self.ds,
                target,
                predicate,
                min_support=support,
                k_bins=self.config.scale_bins,
            )
            return {
                "target": target,
                "outcome": predicate.spell(),
                "min_support": support,
                "assumption": COOCCURRENCE_ASSUMPTION,
                "recommendations": jsonable(rows),
            }

        return self._cached(("insights_recommend", target, outcome, support), compute)

    def insights_tradeoff(self, target: str) -> dict:
        def compute():
            result = insights.diversity_commonness_tradeoff(
                self.ds,
                target,
                seed=self.config.seed,
                min_instances=self.config.min_category_instances,
            )
            payload = jsonable(result)
            payload["action"] = self._actions["appearance_diversity"]
            return payload

        return self._cached(("insights_tradeoff", target), compute)

    # -- auto-selection of expensive per-entity analyses -----------------------------

    def _auto_distance_categories(self) -> list[str]:
        gendered = self.ds.gendered_image_ids
        if not (gendered["female"] and gendered["male"]):
            return []
        female, male = set(gendered["female"]), set(gendered["male"])
        person_heavy = set()
        by_cat: dict[str, list[bool]] = {}
        for inst in self.ds.instances.values():
            by_cat.setdefault(inst.category, []).append(inst.is_person)
        for cat, flags in by_cat.items():
            if sum(flags) * 2 >= len(flags):  # distance targets are objects, not people
                person_heavy.add(cat)
        scored = []
        for cat, images in self.ds.images_with_category.items():
            if cat in person_heavy:
                continue
            support = min(len(images & female), len(images & male))
            if support:
                scored.append((-support, cat))
        return [cat for _, cat in sorted(scored)[: self.config.auto_k]]

    def _auto_subregion_tags(self) -> list[str]:
        counts: dict[str, int] = {}
        vocab = set(self.vocabulary)
        for img in self.ds.images.values():
            if not img.country:
                continue
            for tag in {t.lower() for t in img.tags}:
                if tag in vocab:
                    counts[tag] = counts.get(tag, 0) + 1
        ranked = sorted(counts.items(), key=lambda t: (-t[1], t[0]))
        return [tag for tag, _ in ranked[: self.config.auto_k]]

    def _auto_recommendations(self) -> list[tuple[str, str]]:
        if self.config.recommend_targets:
            outcome = self.config.recommend_outcome or "size_bin_in:XS,S,M"
            return [(t, outcome) for t in self.config.recommend_targets]
        try:
            scale = self.objects_scale()
        except (MissingAnnotations, InsufficientData):
            return []
        picks = []
        uniform = 1.0 / self.config.scale_bins
        for row in scale["per_category"]:
            if row["low_support"] or not row["skewed"]:
                continue
            under = [
                label
                for label, share in zip(scale["bin_labels"], row["bin_shares"])
                if share < uniform
            ]
            if under:
                peak = max(row["bin_shares"])
                picks.append((-peak, row["category"], f"size_bin_in:{','.join(under)}"))
        picks.sort()
        return [(cat, outcome) for _, cat, outcome in picks[: self.config.auto_k]]

    def _auto_tradeoff_targets(self) -> list[str]:
        if self.config.tradeoff_targets:
            return list(self.config.tradeoff_targets)
        store = self.ds.features
        if store is None or not store.instance_features:
            return []
        counts: dict[str, int] = {}
        for inst in self.ds.instances.values():
            if inst.instance_id in store.instance_features:
                sup = self.ds.categories.supercategory(inst.category)
                counts[sup] = counts.get(sup, 0) + 1
        ranked = sorted(counts.items(), key=lambda t: (-t[1], t[0]))
        return [sup for sup, _ in ranked[: self.config.auto_k]]

    # -- whole-report assembly --------------------------------------------------------

    def _guard(self, compute: Callable[[], dict]) -> dict:
        try:
            return compute()
        except (MissingAnnotations, InsufficientData, UnknownEntity) as exc:
            return _skip(exc)

    def section_objects(self) -> dict:
        return {
            "counts": self._guard(self.objects_counts),
            "duplicates": self._guard(self.objects_duplicates),
            "scale": self._guard(self.objects_scale),
            "cooccurrence": self._guard(self.objects_cooccurrence),
            "scene_diversity": self._guard(self.objects_scene_diversity),
            "appearance_diversity": self._guard(self.objects_appearance_diversity),
        }

    def section_gender(self) -> dict:
        section = {
            "context": self._guard(self.gender_context),
            "counts": self._guard(self.gender_counts),
            "audit": self._guard(self.gender_audit),
            "distance": {},
            "separability": {},
        }
        distance_cats = self.config.distance_categories or self._auto_distance_categories()
        for cat in distance_cats:
            section["distance"][cat] = self._guard(lambda c=cat: self.gender_distance(c))
        sep_cats = self.config.separability_categories or self._auto_distance_categories()
        for cat in sep_cats:
            section["separability"][cat] = self._guard(
                lambda c=cat: self.gender_separability(c)
            )
        return section

    def section_geo(self) -> dict:
        section = {
            "countries": self._guard(self.geo_countries),
            "language": self._guard(self.geo_language),
            "tags": self._guard(self.geo_tags),
            "subregion": {},
        }
        tags = self.config.subregion_tags or self._auto_subregion_tags()
        for tag in tags:
            section["subregion"][tag] = self._guard(lambda t=tag: self.geo_subregion(t))
        return section

    def section_insights(self) -> dict:
        section: dict[str, Any] = {
            "assumption": COOCCURRENCE_ASSUMPTION,
            "recommendations": {},
            "tradeoff": {},
        }
        for target, outcome in self._auto_recommendations():
            section["recommendations"][target] = self._guard(
                lambda t=target, o=outcome: self.insights_recommend(t, o)
            )
        for target in self._auto_tradeoff_targets():
            section["tradeoff"][target] = self._guard(
                lambda t=target: self.insights_tradeoff(t)
            )
        return section

    def report(self) -> dict:
        builders = {
            "objects": self.section_objects,
            "gender": self.section_gender,
            "geo": self.section_geo,
            "insights": self.section_insights,
        }
        enabled = [name for name in SECTION_ORDER if name in self.config.sections]
        with ThreadPoolExecutor(max_workers=max(len(enabled), 1)) as pool:
            futures = {name: pool.submit(builders[name]) for name in enabled}
            sections = {name: futures[name].result() for name in enabled}
        for name in SECTION_ORDER:
            if name not in sections:
                sections[name] = {"skipped": True, "missing": "section disabled"}
        coverage = self.ds.feature_coverage
        return {
            "schema_version": "1",
            "tool": {"name": "datasetlens", "version": __version__},
            "generated_at": datetime.now(timezone.utc).isoformat(),
            "dataset": {
                "source": self.ds.provenance.source,
                "format": self.ds.provenance.format,
                "n_images": self.ds.n_images,
                "n_instances": self.ds.n_instances,
                "feature_manifest": jsonable(dict(self.ds.features.manifest))
                if self.ds.features
                else None,
                "feature_coverage": {
                    "image_fraction": coverage.image_fraction,
                    "instance_fraction": coverage.instance_fraction,
                }
                if coverage
                else None,
            },
            "parameters": self.config.to_dict(),
            "sections": {name: sections[name] for name in SECTION_ORDER},
        }


def generate_report(ds: AnnotatedDataset, config: RunConfig) -> dict:
    """Run every computable metric section and assemble the machine report."""
    return AnalysisSession(ds, config).report()


def report_json(report: dict) -> str:
    """Canonical serialization: sorted keys, two-space indent, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
