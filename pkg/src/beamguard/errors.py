class BeamguardError(Exception):
    """Base class for package errors."""


class ConfigError(BeamguardError, ValueError):
    """Invalid configuration value or file."""


class GeometryError(BeamguardError, ValueError):
    """Degenerate scenario geometry."""


class UsageError(BeamguardError, RuntimeError):
    """API called in an invalid state (e.g. stepping a finished episode)."""


class CheckpointError(BeamguardError, ValueError):
    """Checkpoint file cannot be read or does not match the expected layout."""
