"""datasetlens: annotation-level auditing for visual datasets.

Surfaces object-, gender-, and geography-based representation metrics from a
dataset's annotations plus optional precomputed perceptual features, and ranks
pairwise augmentation queries to act on what it finds.
"""

__version__ = "0.1.0"

from .errors import (
    DatasetLensError,
    FeatureSchemaError,
    InsufficientData,
    IntegrityError,
    MissingAnnotations,
    ParseError,
    UnknownEntity,
)
from .model import (
    AnnotatedDataset,
    BBox,
    CategoryTable,
    GenderLexicon,
    ImageRecord,
    InstanceRecord,
    Violation,
    derive_gender_from_captions,
    validate,
)
from .io import load_dataset, save_canonical
from .features import FeatureStore, attach_features, parse_feature_file
from .config import RunConfig, load_config
from .report import AnalysisSession, generate_report, report_json
from .render import render_html

__all__ = [
    "__version__",
    "AnnotatedDataset",
    "AnalysisSession",
    "BBox",
    "CategoryTable",
    "DatasetLensError",
    "FeatureSchemaError",
    "FeatureStore",
    "GenderLexicon",
    "ImageRecord",
    "InstanceRecord",
    "InsufficientData",
    "IntegrityError",
    "MissingAnnotations",
    "ParseError",
    "RunConfig",
    "UnknownEntity",
    "Violation",
    "attach_features",
    "derive_gender_from_captions",
    "generate_report",
    "load_config",
    "load_dataset",
    "parse_feature_file",
    "render_html",
    "report_json",
    "save_canonical",
    "validate",
]
