"""Exception types shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, TrainingError -> 4.
"""


class ReserveOptError(Exception):
    """Base class for all package errors."""


class ConfigError(ReserveOptError):
    """Invalid configuration: bad parameter value, unknown key, bad grid."""


class DataError(ReserveOptError):
    """Invalid or unreadable data: malformed CSV, bid-order violations, bad split."""


class TrainingError(ReserveOptError):
    """Optimization failure: diverging objective or no successful fit."""
