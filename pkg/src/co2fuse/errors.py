"""Exception types raised across the pipeline.

Input problems (bad files, bad flags) and data problems (empty matches,
degenerate fits) get distinct types so the CLI can map them to exit codes.
"""


class Co2FuseError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(Co2FuseError):
    """Input file violates its documented CSV schema."""


class CorruptInputError(Co2FuseError):
    """More than half of the data rows in a file are malformed."""


class DuplicateKeyError(Co2FuseError):
    """Duplicate station id or (station_id, time) pair in an input file."""


class NoDataError(Co2FuseError):
    """An operation that needs at least one record got none."""


class EmptyDatasetError(NoDataError):
    """Matching produced zero labeled samples."""


class StaleWeatherError(Co2FuseError):
    """Nearest weather sample is too far away in space or time."""


class DegenerateFeatureError(Co2FuseError):
    """A feature is constant on the training data; cannot standardize."""


class DegenerateFitError(Co2FuseError):
    """Regression target or predictor has no variance to fit."""


class DegenerateBinningError(Co2FuseError):
    """All training labels are equal; class bins cannot be formed."""


class TrainingDivergedError(Co2FuseError):
    """Loss became non-finite during training."""


class FeatureOrderError(Co2FuseError):
    """Model feature fingerprint does not match the canonical feature list."""


class ModelFormatError(Co2FuseError):
    """Model file has a bad magic line, version or payload."""


class UndefinedR2Error(Co2FuseError):
    """adjusted R2 is undefined because the true values are constant."""


class InsufficientSamplesError(Co2FuseError):
    """Too few samples for the requested feature count in adjusted R2."""
