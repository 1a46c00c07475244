"""Exception hierarchy shared across the simulator."""


class GlocalfairError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(GlocalfairError):
    """Invalid configuration value (bad dimension, empty split, ...)."""


class ShapeError(GlocalfairError):
    """Array shapes or lengths are inconsistent."""


class NumericError(GlocalfairError):
    """A computation produced or received non-finite values."""


class UndefinedMetricError(GlocalfairError):
    """A metric's denominator is empty (e.g. a group with no samples)."""


class CheckpointError(GlocalfairError):
    """Base class for checkpoint load failures."""


class BadMagicError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class TruncatedPayloadError(CheckpointError):
    pass


class ParamCountMismatchError(CheckpointError):
    pass


class IngestionError(GlocalfairError):
    """Base class for dataset loading failures."""


class UnknownColumnError(IngestionError):
    pass


class NumericParseError(IngestionError):
    pass


class EmptyFileError(IngestionError):
    pass


class InfeasiblePartitionError(GlocalfairError):
    """Requested partition cannot satisfy the per-client minimum."""
