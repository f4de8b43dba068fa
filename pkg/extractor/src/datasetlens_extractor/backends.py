"""Scene-classification and embedding backends.

The engine's contract is the feature-file schema, not any particular model,
so backends are swappable and the manifest records which ones ran. The
builtin backends are deterministic seeded-projection featurizers: they give
the pipeline schema-valid, reproducible output with zero downloads. Their
embeddings carry real visual structure (downsampled pixels through a fixed
random basis), but the builtin scene labels are appearance buckets, not
semantic classifications — swap in a checkpoint-backed backend for those.
"""

from __future__ import annotations

import math
from typing import Protocol

import numpy as np
from PIL import Image

INSTANCE_DIM = 64
DEFAULT_IMAGE_DIM = 128
_BUILTIN_SEED = 0x5CE11E


class SceneBackend(Protocol):
    name: str

    def classify(self, image: Image.Image) -> str:
        """Return one of the 365 scene names."""


class EmbeddingBackend(Protocol):
    name: str
    dim: int

    def embed(self, image: Image.Image) -> np.ndarray: ...


def _projection(in_dim: int, out_dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((in_dim, out_dim)) / math.sqrt(out_dim)


def _pixels(image: Image.Image, side: int) -> np.ndarray:
    resized = image.convert("RGB").resize((side, side), Image.BILINEAR)
    return np.asarray(resized, dtype=np.float64).reshape(-1) / 255.0


class ProjectionInstanceEmbedder:
    """32x32 crop -> fixed Gaussian projection -> 64-d vector."""

    name = "builtin-projection-64d-v1"
    dim = INSTANCE_DIM

    def __init__(self):
        self._basis = _projection(32 * 32 * 3, INSTANCE_DIM, _BUILTIN_SEED + 1)

    def embed(self, image: Image.Image) -> np.ndarray:
        return _pixels(image, 32) @ self._basis


class ProjectionImageEmbedder:
    """64x64 frame -> fixed Gaussian projection -> D-d vector."""

    def __init__(self, dim: int = DEFAULT_IMAGE_DIM):
        self.dim = dim
        self.name = f"builtin-projection-{dim}d-v1"
        self._basis = _projection(64 * 64 * 3, dim, _BUILTIN_SEED + 2)

    def embed(self, image: Image.Image) -> np.ndarray:
        return _pixels(image, 64) @ self._basis


class ProjectionSceneClassifier:
    """Deterministic appearance bucketing over the 365 scene names.

    Scores a color-histogram descriptor against a fixed random prototype per
    scene and returns the argmax. Reproducible and schema-valid; NOT a
    semantic scene classifier (the manifest makes that visible).
    """

    name = "builtin-colorhist-v1"

    def __init__(self, scene_names: list[str]):
        if not scene_names:
            raise ValueError("scene_names must be nonempty")
        self.scene_names = sorted(scene_names)
        self._basis = _projection(48, len(self.scene_names), _BUILTIN_SEED + 3)

    def _descriptor(self, image: Image.Image) -> np.ndarray:
        arr = np.asarray(image.convert("RGB").resize((64, 64)), dtype=np.float64) / 255.0
        hist = [
            np.histogram(arr[..., c], bins=16, range=(0, 1), density=True)[0]
            for c in range(3)
        ]
        return np.concatenate(hist)

    def classify(self, image: Image.Image) -> str:
        scores = self._descriptor(image) @ self._basis
        return self.scene_names[int(np.argmax(scores))]


def make_scene_backend(kind: str, scene_names: list[str]) -> SceneBackend:
    if kind == "builtin":
        return ProjectionSceneClassifier(scene_names)
    raise ValueError(f"unknown scene backend {kind!r} (available: builtin)")


def make_instance_embedder(kind: str) -> EmbeddingBackend:
    if kind == "builtin":
        return ProjectionInstanceEmbedder()
    raise ValueError(f"unknown instance embedder {kind!r} (available: builtin)")


def make_image_embedder(kind: str, dim: int = DEFAULT_IMAGE_DIM) -> EmbeddingBackend:
    if kind == "builtin":
        return ProjectionImageEmbedder(dim)
    raise ValueError(f"unknown image embedder {kind!r} (available: builtin)")
