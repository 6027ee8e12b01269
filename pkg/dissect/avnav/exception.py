class Error(Exception):
    """Base exception for this module."""


class InvalidSignatureError(Error):
    """Exception that occurs if the magic in the header does not match."""


class CheckpointError(Error):
    """Exception that occurs if a checkpoint is truncated or of an unsupported version."""


class MapError(Error, ValueError):
    """Exception that occurs if a map is malformed or cannot be generated."""


class UnreachableError(Error):
    """Exception that occurs if no path exists between two cells."""


class ShapeError(Error, ValueError):
    """Exception that occurs if tensor or profile shapes do not line up."""


class ConfigError(Error, ValueError):
    """Exception that occurs if a configuration key or value is invalid."""


class EmptyRecordsError(Error, ValueError):
    """Exception that occurs if a metric is computed over zero episodes."""


class ScenarioError(Error):
    """Exception that occurs if a scenario draw has no candidate."""


class LogError(Error, ValueError):
    """Exception that occurs if a trajectory log line cannot be parsed."""
