"""Command-line entry points for extraction and schema verification."""

from __future__ import annotations

import logging
import sys

import click

from .extract import extract
from .verify import verify_schema


@click.group()
@click.version_option(package_name="datasetlens-extractor")
def main() -> None:
    """Produce and verify feature files for the dataset auditing engine."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False), help="Canonical dataset JSONL.")
@click.option("--images-root", type=click.Path(exists=True, file_okay=False), default=None, help="Directory with the image files.")
@click.option("--out", "output_path", required=True, type=click.Path(dir_okay=False), help="Feature file to write.")
@click.option("--tags-only", is_flag=True, help="Skip all pixel work; emit only tag languages.")
@click.option("--image-dim", type=int, default=128, show_default=True, help="Image embedding dimension D.")
@click.option("--scene-backend", default="builtin", show_default=True)
@click.option("--instance-backend", default="builtin", show_default=True)
@click.option("--image-backend", default="builtin", show_default=True)
@click.option("--scene-hierarchy", type=click.Path(exists=True, dir_okay=False), default=None, help="Override the shared scene hierarchy asset.")
def run(dataset, images_root, output_path, tags_only, image_dim, scene_backend, instance_backend, image_backend, scene_hierarchy):
    """Extract features for every image and boxed instance."""
    if not tags_only and images_root is None:
        raise click.ClickException("--images-root is required unless --tags-only is set")
    stats = extract(
        dataset, images_root, output_path,
        tags_only=tags_only, image_dim=image_dim,
        scene_backend=scene_backend, instance_backend=instance_backend,
        image_backend=image_backend, scene_hierarchy_path=scene_hierarchy,
    )
    click.echo(
        f"wrote {output_path}: {stats.images_processed} images, "
        f"{stats.instances_processed} instances"
        + (f", {len(stats.images_skipped)} skipped" if stats.images_skipped else "")
        + (f", {stats.boxes_clipped} boxes clipped" if stats.boxes_clipped else "")
    )


@main.command()
@click.argument("feature_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--scene-hierarchy", type=click.Path(exists=True, dir_okay=False), default=None)
def verify(feature_file, scene_hierarchy):
    """Check a feature file against the engine's schema; exit 1 on violations."""
    violations = verify_schema(feature_file, scene_hierarchy_path=scene_hierarchy)
    for v in violations:
        click.echo(v)
    if violations:
        click.echo(f"{len(violations)} violation(s)", err=True)
        sys.exit(1)
    click.echo("ok")


if __name__ == "__main__":
    main()
