"""Exception types raised by :mod:`latticegeo`."""

from __future__ import annotations


class DimensionError(ValueError):
    """Lattice functions of incompatible length were combined."""


class PreconditionError(ValueError):
    """An operation was called outside its domain (e.g. a flat formula on a
    metric whose ratio derivative is not constant)."""


class UndefinedPeakError(ValueError):
    """A profile has no unique maximum site."""


class DivergenceError(RuntimeError):
    """Integration produced non-finite or runaway values.

    ``s`` is the geodesic time of the step that failed and ``last_good_s``
    the time of the last state that passed the check.
    """

    def __init__(self, message: str, s: float, last_good_s: float):
        super().__init__(message)
        self.s = s
        self.last_good_s = last_good_s


class ConfigError(ValueError):
    """A scenario configuration failed validation."""

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class ConfigParseError(ConfigError):
    """A configuration document is not well-formed."""

    def __init__(self, reason: str, line: int | None = None, column: int | None = None):
        where = "document" if line is None else f"line {line}, column {column}"
        super().__init__(where, reason)
        self.line = line
        self.column = column
