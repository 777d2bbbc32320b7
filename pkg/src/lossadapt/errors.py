"""Exception types raised across the library."""


class LossAdaptError(Exception):
    """Base class for all library errors."""


class ConfigError(LossAdaptError):
    """Invalid configuration: bad model spec, bad corruption parameters,
    malformed or inconsistent experiment config."""


class ShapeError(LossAdaptError):
    """Array shapes are not congruent with the declared model."""


class DataError(LossAdaptError):
    """Invalid data fed to an operation: labels outside the class domain,
    non-finite loss values."""


class UnknownSourceError(LossAdaptError):
    """A source id was used that is not registered."""


class StateError(LossAdaptError):
    """Operation requires state that is not ready, e.g. statistics over a
    loss history that is not yet full."""


class FormatError(LossAdaptError):
    """A data file does not conform to its declared binary/text format."""


class NumericError(LossAdaptError):
    """A numeric failure (NaN/Inf) occurred; the surrounding run is aborted."""
