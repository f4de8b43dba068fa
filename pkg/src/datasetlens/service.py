"""Read-only HTTP API over one analyzed dataset.

Every endpoint returns the same fragment the machine report carries for the
same config, computed through the shared AnalysisSession (with its memo
cache), so the service can never drift from `analyze` output. Errors carry
machine-readable ``code`` and ``missing`` fields: 404 for unknown entities,
422 when a required annotation kind is absent.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import InsufficientData, MissingAnnotations, UnknownEntity
from .report import AnalysisSession

API_PREFIX = "/api/v1"


def create_app(session: AnalysisSession, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="datasetlens", docs_url=None, redoc_url=None)

    @app.exception_handler(UnknownEntity)
    async def _unknown(request, exc: UnknownEntity):
        return JSONResponse(
            status_code=404,
            content={"code": "unknown_entity", "missing": exc.name, "detail": str(exc)},
        )

    @app.exception_handler(MissingAnnotations)
    async def _missing(request, exc: MissingAnnotations):
        return JSONResponse(
            status_code=422,
            content={"code": "missing_annotations", "missing": exc.missing, "detail": str(exc)},
        )

    @app.exception_handler(InsufficientData)
    async def _insufficient(request, exc: InsufficientData):
        return JSONResponse(
            status_code=422,
            content={"code": "insufficient_data", "missing": str(exc), "detail": str(exc)},
        )

    @app.get(API_PREFIX + "/report")
    def report():
        return session.report()

    @app.get(API_PREFIX + "/object/counts")
    def object_counts():
        return session.objects_counts()

    @app.get(API_PREFIX + "/object/scale")
    def object_scale(category: str | None = Query(default=None)):
        if category is None:
            return session.objects_scale()
        return session.objects_scale_for(category)

    @app.get(API_PREFIX + "/object/cooccurrence")
    def object_cooccurrence(
        a: str | None = Query(default=None), b: str | None = Query(default=None)
    ):
        if a is not None and b is not None:
            return session.objects_cooccurrence_pair(a, b)
        return session.objects_cooccurrence()

    @app.get(API_PREFIX + "/object/duplicates")
    def object_duplicates():
        return session.objects_duplicates()

    @app.get(API_PREFIX + "/object/scene-diversity")
    def object_scene_diversity():
        return session.objects_scene_diversity()

    @app.get(API_PREFIX + "/object/appearance-diversity")
    def object_appearance_diversity(category: str | None = Query(default=None)):
        if category is None:
            return session.objects_appearance_diversity()
        return session.objects_appearance_diversity_for(category)

    @app.get(API_PREFIX + "/gender/context")
    def gender_context():
        return session.gender_context()

    @app.get(API_PREFIX + "/gender/counts")
    def gender_counts():
        return session.gender_counts()

    @app.get(API_PREFIX + "/gender/distance")
    def gender_distance(category: str):
        return session.gender_distance(category)

    @app.get(API_PREFIX + "/gender/audit")
    def gender_audit():
        return session.gender_audit()

    @app.get(API_PREFIX + "/gender/separability")
    def gender_separability(category: str):
        return session.gender_separability(category)

    @app.get(API_PREFIX + "/geo/countries")
    def geo_countries():
        return session.geo_countries()

    @app.get(API_PREFIX + "/geo/language")
    def geo_language():
        return session.geo_language()

    @app.get(API_PREFIX + "/geo/tags")
    def geo_tags(country: str | None = Query(default=None)):
        return session.geo_tags(country)

    @app.get(API_PREFIX + "/geo/subregion")
    def geo_subregion(tag: str):
        return session.geo_subregion(tag)

    @app.get(API_PREFIX + "/insights/recommend")
    def insights_recommend(
        target: str,
        outcome: str = Query(default="size_bin_in:XS,S,M"),
        min_support: int | None = Query(default=None),
    ):
        return session.insights_recommend(target, outcome, min_support)

    @app.get(API_PREFIX + "/insights/tradeoff")
    def insights_tradeoff(target: str):
        return session.insights_tradeoff(target)

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=Path(ui_dir), html=True), name="ui")
    return app
