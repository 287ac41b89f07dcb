"""Exception hierarchy shared by all embmix modules.

The three concrete classes map onto the CLI exit codes: ConfigError -> 2,
DataError -> 3, NumericalError -> 4.
"""


class EmbmixError(Exception):
    """Base class for all errors raised by embmix."""

    exit_code = 1


class ConfigError(EmbmixError):
    """Bad configuration: unknown keys, invalid flags, malformed templates."""

    exit_code = 2


class DataError(EmbmixError):
    """Bad input data: malformed files, shape mismatches, degenerate vectors."""

    exit_code = 3


class NumericalError(EmbmixError):
    """Numerical failure: non-SPD matrices, non-finite intermediates."""

    exit_code = 4
