"""Exception hierarchy shared by the whole package.

The CLI maps any :class:`EgomatchError` to exit code 2 (user/config error)
and everything else to exit code 1 (internal error).
"""


class EgomatchError(Exception):
    """Base class for all errors raised by egomatch."""


class InputFormatError(EgomatchError):
    """A data file is malformed (bad token, ragged row, out-of-range id)."""


class ConfigError(EgomatchError):
    """A configuration value or call precondition is invalid."""


class DimensionError(EgomatchError):
    """Array shapes do not line up (model vs. data, vector vs. vector)."""


class UndefinedMetricError(EgomatchError):
    """The requested metric is undefined for the given inputs."""
