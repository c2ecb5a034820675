"""Shared exception types."""


class FormatError(ValueError):
    """A data file does not conform to its expected binary/text layout."""


class ConfigError(ValueError):
    """An experiment configuration is internally inconsistent or infeasible."""
