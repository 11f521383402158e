class BwcastError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(BwcastError, ValueError):
    """Invalid run configuration (CLI exit code 2)."""


class DataError(BwcastError, ValueError):
    """Malformed or unusable input data (CLI exit code 3)."""


class ModelFileError(BwcastError):
    """Model file failed to validate on load."""


class StageError(BwcastError):
    """A pipeline stage failed; ``stage`` names where."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
