"""Exception taxonomy shared by the whole package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError (and subclasses) -> 3, NumericalError -> 4.
"""


class GatelabError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(GatelabError, ValueError):
    """Operand dimensions are inconsistent; the message names both operands."""


class ConfigError(GatelabError, ValueError):
    """Invalid configuration file, key, value, or command usage."""


class DataError(GatelabError, ValueError):
    """Invalid dataset records, manifests, or score tables."""


class CheckpointError(DataError):
    """Checkpoint file is corrupt, has a bad version, or mismatched shapes."""


class NumericalError(GatelabError, ArithmeticError):
    """A computation produced non-finite values (e.g. NaN training loss)."""
