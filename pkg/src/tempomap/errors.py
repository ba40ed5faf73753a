"""Exception types shared across the package."""


class TempomapError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(TempomapError):
    """Invalid configuration value or combination; message names the field."""


class EdgeListError(TempomapError):
    """Malformed edge-list input; message carries the offending line number."""


class EstimationError(TempomapError):
    """An estimator could not produce a usable result (e.g. all-zero mass)."""
