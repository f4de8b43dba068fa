"""Command-line entry points: ingest, validate, analyze, recommend, tradeoff,
serve. Flags mirror RunConfig fields; a config file and DATASETLENS_*
environment variables fill in whatever flags don't set."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import RunConfig, load_config
from .errors import (
    DatasetLensError,
    InsufficientData,
    MissingAnnotations,
    ParseError,
    UnknownEntity,
)
from .features import attach_features
from .io import load_dataset, save_canonical
from .model import validate as validate_dataset
from .render import render_html
from .report import AnalysisSession, report_json


def _build_config(config_file: str | None, **overrides) -> RunConfig:
    try:
        return load_config(config_file, overrides=overrides)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc


def _load(config: RunConfig):
    if not config.dataset:
        raise click.ClickException("no dataset given (flag --dataset or config file)")
    kwargs = {}
    if config.format == "coco" and config.captions:
        kwargs["captions_path"] = config.captions
    ds = load_dataset(config.dataset, format=config.format, **kwargs)
    if config.features:
        ds = attach_features(ds, config.features)
    return ds


def _common_options(fn):
    options = [
        click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), default=None, help="Config file (JSON or YAML)."),
        click.option("--dataset", default=None, help="Dataset file path."),
        click.option("--format", "format_", type=click.Choice(["canonical", "coco"]), default=None, help="Dataset file format."),
        click.option("--captions", default=None, help="COCO captions file (coco format only)."),
        click.option("--features", default=None, help="Feature file to attach."),
        click.option("--country-table", default=None, help="Country reference CSV (defaults to the bundled table)."),
        click.option("--vocabulary", default=None, help="Tag vocabulary file (defaults to the bundled list)."),
        click.option("--seed", type=int, default=None, help="Seed for all randomized metrics."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


@click.group()
@click.version_option(package_name="datasetlens")
def main() -> None:
    """Audit visual-dataset annotations for representation patterns."""


@main.command()
@_common_options
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False), help="Canonical JSONL output path.")
def ingest(config_file, dataset, format_, captions, features, country_table, vocabulary, seed, out_path):
    """Convert a dataset (e.g. COCO annotations) to the canonical format."""
    config = _build_config(
        config_file, dataset=dataset, format=format_, captions=captions,
        features=features, country_table=country_table, vocabulary=vocabulary, seed=seed,
    )
    try:
        ds = _load(config)
    except DatasetLensError as exc:
        raise click.ClickException(str(exc)) from exc
    save_canonical(ds, out_path)
    click.echo(f"wrote {out_path} ({ds.n_images} images, {ds.n_instances} instances)")


@main.command(name="validate")
@_common_options
def validate_cmd(config_file, dataset, format_, captions, features, country_table, vocabulary, seed):
    """Report record-level violations; exit 1 if any are found."""
    config = _build_config(
        config_file, dataset=dataset, format=format_, captions=captions,
        features=features, country_table=country_table, vocabulary=vocabulary, seed=seed,
    )
    try:
        ds = _load(config)
    except DatasetLensError as exc:
        raise click.ClickException(str(exc)) from exc
    violations = validate_dataset(ds)
    for v in violations:
        click.echo(f"{v.kind}\t{v.record_id}\t{v.message}")
    if violations:
        click.echo(f"{len(violations)} violation(s)", err=True)
        sys.exit(1)
    click.echo("clean")


@main.command()
@_common_options
@click.option("--out", "out_dir", default=None, help="Output directory (default: reports/).")
@click.option("--section", "sections", multiple=True, type=click.Choice(["objects", "gender", "geo", "insights"]), help="Run only these sections (repeatable).")
def analyze(config_file, dataset, format_, captions, features, country_table, vocabulary, seed, out_dir, sections):
    """Compute every available metric and write report.json + report.html."""
    config = _build_config(
        config_file, dataset=dataset, format=format_, captions=captions,
        features=features, country_table=country_table, vocabulary=vocabulary,
        seed=seed, out_dir=out_dir, sections=tuple(sections) or None,
    )
    try:
        ds = _load(config)
    except ParseError as exc:
        raise click.ClickException(f"parse failure: {exc}") from exc
    except DatasetLensError as exc:
        raise click.ClickException(str(exc)) from exc
    if ds.feature_coverage is not None:
        cov = ds.feature_coverage
        click.echo(
            f"feature coverage: images {cov.image_fraction:.0%}, "
            f"instances {cov.instance_fraction:.0%}",
            err=True,
        )
        for warning in cov.warnings:
            click.echo(f"warning: {warning}", err=True)
    session = AnalysisSession(ds, config)
    report = session.report()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_json(report), encoding="utf-8")
    (out / "report.html").write_text(render_html(report), encoding="utf-8")
    skipped = [
        f"{name}.{sub}"
        for name, section in report["sections"].items()
        for sub, block in (section.items() if isinstance(section, dict) else ())
        if isinstance(block, dict) and block.get("skipped")
    ]
    if skipped:
        click.echo("skipped (missing annotations): " + ", ".join(sorted(skipped)), err=True)
    click.echo(f"wrote {out / 'report.json'} and {out / 'report.html'}")


@main.command()
@_common_options
@click.option("--target", required=True, help="Target category to augment.")
@click.option("--outcome", default="size_bin_in:XS,S,M", show_default=True, help="Outcome predicate, e.g. size_bin_in:XS,S or cooccurs_with:person.")
@click.option("--min-support", type=int, default=None, help="Minimum co-occurring images per term.")
def recommend(config_file, dataset, format_, captions, features, country_table, vocabulary, seed, target, outcome, min_support):
    """Print ranked pairwise queries for a target category and outcome."""
    config = _build_config(
        config_file, dataset=dataset, format=format_, captions=captions,
        features=features, country_table=country_table, vocabulary=vocabulary,
        seed=seed, min_support=min_support,
    )
    try:
        ds = _load(config)
        session = AnalysisSession(ds, config)
        payload = session.insights_recommend(target, outcome)
    except UnknownEntity as exc:
        raise click.ClickException(str(exc)) from exc
    except (InsufficientData, MissingAnnotations) as exc:
        click.echo(f"no candidates: {exc}")
        return
    except DatasetLensError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"# query probability support expansions  (outcome: {payload['outcome']})")
    for i, row in enumerate(payload["recommendations"], start=1):
        expansions = "; ".join(row["expanded_queries"][:3])
        click.echo(
            f"{i:>2}. \"{payload['target']} and {row['term']}\"  "
            f"p={row['probability']:.3f}  n={row['support']}  [{expansions}]"
        )


@main.command()
@_common_options
@click.option("--target", required=True, help="Category or supercategory to augment.")
def tradeoff(config_file, dataset, format_, captions, features, country_table, vocabulary, seed, target):
    """Print the diversity-vs-commonness tradeoff over scene groups."""
    config = _build_config(
        config_file, dataset=dataset, format=format_, captions=captions,
        features=features, country_table=country_table, vocabulary=vocabulary, seed=seed,
    )
    try:
        ds = _load(config)
        payload = AnalysisSession(ds, config).insights_tradeoff(target)
    except DatasetLensError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"# scene group  commonness  diversity_gain  n  (target: {target})")
    for point in payload["points"]:
        marker = "  <- efficient" if point["efficient"] else ""
        click.echo(
            f"{point['scene_group']:<40} {point['commonness']:.3f}  "
            f"{point['diversity_gain']:.3f}  {point['n']}{marker}"
        )


@main.command()
@_common_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8750, show_default=True)
@click.option("--ui-dir", default=None, help="Directory of built explorer UI assets to serve at /.")
def serve(config_file, dataset, format_, captions, features, country_table, vocabulary, seed, host, port, ui_dir):
    """Serve the read-only metric API (and optionally the explorer UI)."""
    import uvicorn

    from .service import create_app

    config = _build_config(
        config_file, dataset=dataset, format=format_, captions=captions,
        features=features, country_table=country_table, vocabulary=vocabulary, seed=seed,
    )
    try:
        ds = _load(config)
    except DatasetLensError as exc:
        raise click.ClickException(str(exc)) from exc
    app = create_app(AnalysisSession(ds, config), ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
