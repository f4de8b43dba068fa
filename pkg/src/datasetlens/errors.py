"""Exception hierarchy shared across the engine."""


class DatasetLensError(Exception):
    """Base class for all engine errors."""


class ParseError(DatasetLensError):
    """A dataset, feature, or table file could not be parsed.

    The message identifies the offending file and record (line number or ID).
    """


class IntegrityError(DatasetLensError):
    """Referential-integrity failure, e.g. an instance pointing at a missing image."""


class FeatureSchemaError(DatasetLensError):
    """A feature file violates the schema contract (bad dimension, bad header)."""


class MissingAnnotations(DatasetLensError):
    """A metric was requested but the dataset lacks a required annotation kind."""

    def __init__(self, missing: str, message: str | None = None):
        self.missing = missing
        super().__init__(message or f"required annotations missing: {missing}")


class UnknownEntity(DatasetLensError):
    """A named category, tag, country, or term is not present in the dataset."""

    def __init__(self, kind: str, name: str):
        self.kind = kind
        self.name = name
        super().__init__(f"unknown {kind}: {name!r}")


class InsufficientData(DatasetLensError):
    """A metric's minimum-support requirement is not met."""
