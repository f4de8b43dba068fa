"""datasetlens-extractor: offline sidecar producing engine-ready feature files.

Runs pluggable scene/embedding backends, face detection, and tag-language
identification over a canonical dataset file plus an images directory, and
writes the line-delimited feature file the auditing engine attaches.
"""

__version__ = "0.1.0"

from .extract import ExtractorManifest, ExtractionStats, extract, load_scene_hierarchy
from .verify import verify_schema
from .language import identify, identify_tags

__all__ = [
    "__version__",
    "ExtractionStats",
    "ExtractorManifest",
    "extract",
    "identify",
    "identify_tags",
    "load_scene_hierarchy",
    "verify_schema",
]
